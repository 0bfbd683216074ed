/**
 * Browser entry point: wires the socket, pedals, render loop and HUD
 * together. Everything interesting is in the imported modules; this file
 * only touches the DOM and is deliberately left out of unit tests.
 */

import { GatewayClient, type SocketLike } from "./net.js";
import { Pedals } from "./input.js";
import { sceneOps, applyOps } from "./render.js";
import { readouts } from "./hud.js";
import type { Snapshot } from "./protocol.js";

const SEND_HZ = 30;

function el(id: string): HTMLElement {
  const e = document.getElementById(id);
  if (!e) throw new Error(`missing #${id}`);
  return e;
}

function wsUrl(): string {
  const param = new URLSearchParams(window.location.search).get("ws");
  if (param) return param;
  const host = window.location.hostname || "localhost";
  return `ws://${host}:8700/ws`;
}

function start(): void {
  const canvas = el("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");

  // Thin adapter so the client sees the same socket surface the tests use.
  const socketFactory = (url: string): SocketLike => {
    const ws = new WebSocket(url);
    const s: SocketLike = {
      onopen: null,
      onmessage: null,
      onclose: null,
      onerror: null,
      send: (d) => ws.send(d),
      close: () => ws.close(),
    };
    ws.onopen = () => s.onopen?.();
    ws.onmessage = (ev) => s.onmessage?.({ data: ev.data });
    ws.onclose = () => s.onclose?.();
    ws.onerror = () => s.onerror?.();
    return s;
  };
  const client = new GatewayClient(wsUrl(), socketFactory);
  const pedals = new Pedals();

  window.addEventListener("keydown", (ev) => {
    if (client.inputLive && pedals.key(ev.code, true)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => {
    if (pedals.key(ev.code, false)) ev.preventDefault();
  });
  window.addEventListener("blur", () => pedals.releaseAll());

  // Pedal messages go out on their own clock so the input rate does not
  // depend on the snapshot rate or on rendering.
  let lastSend = performance.now();
  setInterval(() => {
    const now = performance.now();
    pedals.step((now - lastSend) / 1000);
    lastSend = now;
    if (client.inputLive) {
      client.sendInput(pedals.throttle, pedals.brake, 0.0);
    }
  }, 1000 / SEND_HZ);

  let current: Snapshot | null = null;
  let sized = false;
  const banner = el("banner");
  const frame = () => {
    const fresh = client.latest();
    if (fresh) {
      current = fresh;
      if (!sized && client.hello) {
        canvas.width = client.hello.image_w;
        canvas.height = client.hello.image_h;
        sized = true;
      }
      applyOps(ctx, sceneOps(fresh, canvas.width, canvas.height), canvas.width, canvas.height);
    }
    const r = readouts(current, client.status, pedals.throttle, pedals.brake, client.droppedFrames);
    el("speed").textContent = r.speed;
    el("slot").textContent = r.slot;
    el("arrival").textContent = r.arrival;
    el("refs").textContent = r.references;
    el("tick").textContent = r.tick;
    el("conn").textContent = r.connection;
    el("dropped").textContent = r.dropped;
    (el("throttle-bar") as HTMLElement).style.width = `${(r.throttle * 100).toFixed(0)}%`;
    (el("brake-bar") as HTMLElement).style.width = `${(r.brake * 100).toFixed(0)}%`;
    if (client.status === "error") {
      banner.textContent = `Protocol mismatch: ${client.lastError ?? "unknown"}. Rendering halted.`;
      banner.classList.add("visible");
      return; // stop the loop: do not keep drawing unvalidated frames
    }
    if (client.status === "ended" && client.end?.summary) {
      banner.textContent = `Run complete at tick ${client.end.tick}.`;
      banner.classList.add("visible");
    }
    requestAnimationFrame(frame);
  };

  client.connect();
  requestAnimationFrame(frame);
}

start();
