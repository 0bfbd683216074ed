/**
 * HUD readouts. Text lives in the DOM overlay, not on the scene canvas,
 * so the pixel-exact golden frame stays free of font rendering.
 */

import type { Snapshot } from "./protocol.js";
import type { ClientStatus } from "./net.js";

export interface Readouts {
  speed: string;
  slot: string;
  arrival: string;
  references: string;
  tick: string;
  connection: string;
  throttle: number;
  brake: number;
  dropped: string;
}

const STATUS_TEXT: Record<ClientStatus, string> = {
  idle: "idle",
  connecting: "connecting...",
  open: "live",
  reconnecting: "reconnecting (inputs suspended)",
  ended: "run finished",
  error: "protocol error",
};

export function readouts(
  snap: Snapshot | null,
  status: ClientStatus,
  throttle: number,
  brake: number,
  droppedFrames: number,
): Readouts {
  const ego = snap?.ego ?? null;
  return {
    speed: ego ? `${ego.v.toFixed(1)} m/s` : "--",
    slot: ego && ego.slot !== null ? `#${ego.slot}` : "--",
    arrival:
      ego && ego.d_arrival !== null && ego.intersection !== null
        ? `${ego.d_arrival.toFixed(0)} m to ${ego.intersection}`
        : "--",
    references: snap ? `${snap.hud.references.length} tracked` : "--",
    tick: snap ? `t=${snap.t.toFixed(2)}s tick ${snap.tick}` : "--",
    connection: STATUS_TEXT[status],
    throttle,
    brake,
    dropped: droppedFrames > 0 ? `${droppedFrames} dropped` : "",
  };
}
