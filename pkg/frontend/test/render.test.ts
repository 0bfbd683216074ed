import { describe, expect, it } from "vitest";
import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { parseFrame, type Snapshot } from "../src/protocol.js";
import { sceneOps, rasterize, applyOps, spriteRect, COLORS, type DrawOp, type Canvas2DLike } from "../src/render.js";
import { bufferDigest, type Rgba } from "../src/raster.js";

const here = dirname(fileURLToPath(import.meta.url));
const goldenText = readFileSync(join(here, "fixtures", "golden_snapshot.json"), "utf8");
const goldenFrame = JSON.parse(readFileSync(join(here, "fixtures", "golden_frame.json"), "utf8"));

const W = 1280;
const H = 720;

function goldenSnapshot(): Snapshot {
  const f = parseFrame(goldenText);
  if (f.type !== "snapshot") throw new Error("fixture is not a snapshot");
  return f;
}

function polys(ops: DrawOp[], color: Rgba): Extract<DrawOp, { kind: "poly" }>[] {
  return ops.filter(
    (op): op is Extract<DrawOp, { kind: "poly" }> =>
      op.kind === "poly" && op.color.every((c, i) => c === color[i]),
  );
}

function centroid(corners: [number, number][]): [number, number] {
  let u = 0;
  let v = 0;
  for (const [cu, cv] of corners) {
    u += cu;
    v += cv;
  }
  return [Math.round(u / corners.length), Math.round(v / corners.length)];
}

function sha256(data: Uint8ClampedArray): string {
  return createHash("sha256").update(Buffer.from(data)).digest("hex");
}

describe("slot overlay passthrough", () => {
  it("emits every quad with corner coordinates bit-identical to the wire", () => {
    const snap = goldenSnapshot();
    const ops = sceneOps(snap, W, H);
    const overlay = polys(ops, COLORS.slotRed);
    expect(overlay).toHaveLength(snap.quads.length);
    // The raw wire text is the reference: the numbers the gateway wrote
    // must reach the draw list without any arithmetic on the way.
    const raw = JSON.parse(goldenText);
    for (const rawQuad of raw.quads) {
      const match = overlay.find((op) =>
        op.pts.every(
          (p, i) => p[0] === rawQuad.corners[i][0] && p[1] === rawQuad.corners[i][1],
        ),
      );
      expect(match, `quad ref ${rawQuad.ref_id} missing or altered`).toBeDefined();
    }
  });

  it("draws the overlay after the sprites, far quad before near quad", () => {
    const snap = goldenSnapshot();
    const ops = sceneOps(snap, W, H);
    const lastSprite = ops.map((o) => o.kind).lastIndexOf("rect");
    const firstOverlay = ops.findIndex(
      (o) => o.kind === "poly" && o.color === COLORS.slotRed,
    );
    expect(firstOverlay).toBeGreaterThan(lastSprite);
    const overlay = polys(ops, COLORS.slotRed);
    const maxV = (op: Extract<DrawOp, { kind: "poly" }>) => Math.max(...op.pts.map((p) => p[1]));
    expect(maxV(overlay[0]!)).toBeLessThan(maxV(overlay[1]!));
  });
});

describe("golden frame", () => {
  it("rasterizes to the pinned pixel buffer", () => {
    const raster = rasterize(sceneOps(goldenSnapshot(), W, H), W, H);
    expect(raster.w).toBe(goldenFrame.w);
    expect(raster.h).toBe(goldenFrame.h);
    expect(sha256(raster.data)).toBe(goldenFrame.sha256);
    expect(bufferDigest(raster)).toBe(goldenFrame.fnv1a);
  });

  it("renders the same bytes twice", () => {
    const snap = goldenSnapshot();
    const a = rasterize(sceneOps(snap, W, H), W, H);
    const b = rasterize(sceneOps(snap, W, H), W, H);
    expect(sha256(a.data)).toBe(sha256(b.data));
  });

  it("paints the expected colors at probe pixels", () => {
    const snap = goldenSnapshot();
    const raster = rasterize(sceneOps(snap, W, H), W, H);
    expect(raster.pixel(10, 10)).toEqual(COLORS.sky);
    expect(raster.pixel(10, 700)).toEqual(COLORS.ground);
    expect(raster.pixel(500, 700)).toEqual(COLORS.road);
    expect(raster.pixel(640, 710)).toEqual(COLORS.centerline);
    for (const q of snap.quads) {
      const [u, v] = centroid(q.corners);
      expect(raster.pixel(u, v)).toEqual(COLORS.slotRed);
    }
    // Vehicle sprite sits on the near quad's top edge; probe near its own
    // top so the overlay drawn above it cannot cover the sample.
    const near = snap.quads[1]!;
    const s = spriteRect(near);
    expect(raster.pixel(Math.round(s.x + s.w / 2), Math.round(s.y + 3))).toEqual(
      COLORS.vehicle,
    );
  });

  it("turns a quad green when the gateway says so", () => {
    const snap = goldenSnapshot();
    snap.quads[0]!.color = "green";
    const raster = rasterize(sceneOps(snap, W, H), W, H);
    const [u, v] = centroid(snap.quads[0]!.corners);
    expect(raster.pixel(u, v)).toEqual(COLORS.slotGreen);
    const [u2, v2] = centroid(snap.quads[1]!.corners);
    expect(raster.pixel(u2, v2)).toEqual(COLORS.slotRed);
  });
});

describe("degenerate snapshots", () => {
  it("renders road only when no slots are tracked", () => {
    const snap = goldenSnapshot();
    snap.slots = [];
    snap.quads = [];
    const ops = sceneOps(snap, W, H);
    expect(ops.filter((o) => o.kind === "poly")).toHaveLength(2); // road + centerline
    const raster = rasterize(ops, W, H);
    const d = raster.data;
    const [rr, gg, bb] = COLORS.slotRed;
    for (let i = 0; i < d.length; i += 4) {
      if (d[i] === rr && d[i + 1] === gg && d[i + 2] === bb) {
        throw new Error(`overlay color leaked at byte ${i}`);
      }
    }
  });

  it("handles a snapshot with a null ego", () => {
    const snap = goldenSnapshot();
    snap.ego = null;
    expect(() => rasterize(sceneOps(snap, W, H), W, H)).not.toThrow();
  });
});

describe("canvas adapter", () => {
  it("replays the same ops onto a 2d context", () => {
    const calls: string[] = [];
    const ctx: Canvas2DLike = {
      fillStyle: "",
      fillRect: (x, y, w, h) => calls.push(`rect ${x},${y},${w},${h}`),
      beginPath: () => calls.push("begin"),
      moveTo: (x, y) => calls.push(`move ${x},${y}`),
      lineTo: (x, y) => calls.push(`line ${x},${y}`),
      closePath: () => calls.push("close"),
      fill: () => calls.push("fill"),
    };
    const snap = goldenSnapshot();
    applyOps(ctx, sceneOps(snap, W, H), W, H);
    // One clear + ground rect + two sprites; two scene polys + two quads.
    expect(calls.filter((c) => c.startsWith("rect"))).toHaveLength(4);
    expect(calls.filter((c) => c === "fill")).toHaveLength(4);
    // Quad corners hit the path API verbatim.
    const c0 = snap.quads[0]!.corners[0]!;
    expect(calls).toContain(`move ${c0[0]},${c0[1]}`);
  });
});
