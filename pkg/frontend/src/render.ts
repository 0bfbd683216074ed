/**
 * Scene composition: one snapshot in, a flat list of draw ops out.
 *
 * Keeping this a pure function of the snapshot is what makes the console
 * testable without a browser. The same op list feeds either a real canvas
 * (applyOps) or the software rasterizer (rasterize), and the golden test
 * checks that slot quads reach the op list with their corner coordinates
 * bit-identical to the wire values. The gateway already projected them;
 * the console must not touch the numbers.
 */

import type { Snapshot, QuadView } from "./protocol.js";
import { Raster, type Point, type Rgba } from "./raster.js";

export type DrawOp =
  | { kind: "clear"; color: Rgba }
  | { kind: "rect"; x: number; y: number; w: number; h: number; color: Rgba }
  | { kind: "poly"; pts: Point[]; color: Rgba };

export const COLORS = {
  sky: [118, 160, 205, 255] as Rgba,
  ground: [96, 122, 88, 255] as Rgba,
  road: [68, 70, 76, 255] as Rgba,
  centerline: [208, 198, 96, 255] as Rgba,
  slotRed: [219, 68, 55, 255] as Rgba,
  slotGreen: [76, 195, 102, 255] as Rgba,
  vehicle: [38, 44, 130, 255] as Rgba,
};

// Road trapezoid proportions, purely decorative. The vanishing point sits
// on the horizon at mid-height, matching the forward camera's principal
// point for the default 1280x720 stream.
const ROAD_HALF_AT_BOTTOM = 0.3;
const ROAD_HALF_AT_HORIZON = 2.0;
const LINE_HALF_AT_BOTTOM = 0.008;

function quadColor(q: QuadView): Rgba {
  return q.color === "green" ? COLORS.slotGreen : COLORS.slotRed;
}

/**
 * A reference vehicle sprite derived only from its quad's screen extent:
 * a box sitting on the quad's top edge, sized from the on-screen width.
 * No world-to-image math happens here.
 */
export function spriteRect(q: QuadView): { x: number; y: number; w: number; h: number } {
  let minU = Infinity;
  let maxU = -Infinity;
  let minV = Infinity;
  for (const [u, v] of q.corners) {
    if (u < minU) minU = u;
    if (u > maxU) maxU = u;
    if (v < minV) minV = v;
  }
  const w = (maxU - minU) * 0.62;
  const h = w * 0.58;
  return { x: (minU + maxU) / 2 - w / 2, y: minV - h, w, h };
}

export function sceneOps(snap: Snapshot, w: number, h: number): DrawOp[] {
  const ops: DrawOp[] = [];
  const horizon = Math.floor(h / 2);
  const cx = w / 2;

  ops.push({ kind: "clear", color: COLORS.sky });
  ops.push({ kind: "rect", x: 0, y: horizon, w, h: h - horizon, color: COLORS.ground });
  ops.push({
    kind: "poly",
    pts: [
      [cx - ROAD_HALF_AT_HORIZON, horizon],
      [cx + ROAD_HALF_AT_HORIZON, horizon],
      [cx + w * ROAD_HALF_AT_BOTTOM, h],
      [cx - w * ROAD_HALF_AT_BOTTOM, h],
    ],
    color: COLORS.road,
  });
  ops.push({
    kind: "poly",
    pts: [
      [cx - 0.5, horizon],
      [cx + 0.5, horizon],
      [cx + w * LINE_HALF_AT_BOTTOM, h],
      [cx - w * LINE_HALF_AT_BOTTOM, h],
    ],
    color: COLORS.centerline,
  });

  // Draw far to near so nearer shapes paint over farther ones. Vehicle
  // sprites go under the slot overlay: the markers are a HUD layer
  // composited on top of the whole scene, so a slot stays legible even
  // when a nearer vehicle sits in front of it.
  const byDepth = [...snap.quads].sort((a, b) => {
    const va = Math.max(...a.corners.map((c) => c[1]));
    const vb = Math.max(...b.corners.map((c) => c[1]));
    return va - vb;
  });
  for (const q of byDepth) {
    const s = spriteRect(q);
    ops.push({ kind: "rect", x: s.x, y: s.y, w: s.w, h: s.h, color: COLORS.vehicle });
  }
  // Slot overlay: corners are passed through verbatim, no rounding, no
  // offsets, no re-projection.
  for (const q of byDepth) {
    ops.push({ kind: "poly", pts: q.corners.map((c) => [c[0], c[1]] as Point), color: quadColor(q) });
  }
  return ops;
}

/** Minimal slice of CanvasRenderingContext2D the console draws with. */
export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
}

function css(c: Rgba): string {
  return `rgba(${c[0]},${c[1]},${c[2]},${c[3] / 255})`;
}

export function applyOps(ctx: Canvas2DLike, ops: DrawOp[], w: number, h: number): void {
  for (const op of ops) {
    ctx.fillStyle = css(op.color);
    if (op.kind === "clear") {
      ctx.fillRect(0, 0, w, h);
    } else if (op.kind === "rect") {
      ctx.fillRect(op.x, op.y, op.w, op.h);
    } else {
      ctx.beginPath();
      const [first, ...rest] = op.pts;
      if (!first) continue;
      ctx.moveTo(first[0], first[1]);
      for (const p of rest) ctx.lineTo(p[0], p[1]);
      ctx.closePath();
      ctx.fill();
    }
  }
}

export function rasterize(ops: DrawOp[], w: number, h: number): Raster {
  const r = new Raster(w, h);
  for (const op of ops) {
    if (op.kind === "clear") {
      r.clear(op.color);
    } else if (op.kind === "rect") {
      r.fillRect(op.x, op.y, op.w, op.h, op.color);
    } else {
      r.fillPoly(op.pts, op.color);
    }
  }
  return r;
}
