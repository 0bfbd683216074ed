import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { parseFrame, encodeInput, SchemaError, SCHEMA_VERSION } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const goldenText = readFileSync(join(here, "fixtures", "golden_snapshot.json"), "utf8");
const helloText = readFileSync(join(here, "fixtures", "hello.json"), "utf8");

function mutate(text: string, fn: (o: any) => void): string {
  const o = JSON.parse(text);
  fn(o);
  return JSON.stringify(o);
}

describe("hello frame", () => {
  it("parses the recorded handshake", () => {
    const h = parseFrame(helloText);
    if (h.type !== "hello") throw new Error("not a hello");
    expect(h.schema_version).toBe(SCHEMA_VERSION);
    expect(h.dt).toBe(0.05);
    expect(h.ego_id).toBe(3);
    expect(h.image_w).toBe(1280);
    expect(h.image_h).toBe(720);
    expect(h.mode).toBe("unsignalized");
  });

  it("rejects a version the console does not speak", () => {
    const bad = mutate(helloText, (o) => (o.schema_version = 2));
    expect(() => parseFrame(bad)).toThrow(/schema_version.*v2/);
  });

  it("rejects a missing key and an extra key", () => {
    expect(() => parseFrame(mutate(helloText, (o) => delete o.dt))).toThrow(SchemaError);
    expect(() => parseFrame(mutate(helloText, (o) => (o.extra = 1)))).toThrow(/unexpected key "extra"/);
  });
});

describe("snapshot frame", () => {
  it("parses the golden snapshot with corner values intact", () => {
    const s = parseFrame(goldenText);
    if (s.type !== "snapshot") throw new Error("not a snapshot");
    expect(s.tick).toBe(145);
    expect(s.t).toBe(7.25);
    expect(s.paused).toBe(false);
    expect(s.ego?.v).toBe(12.0);
    expect(s.ego?.slot).toBe(4);
    expect(s.ego?.intersection).toBe("i0");
    expect(s.slots).toHaveLength(2);
    expect(s.slots[0]?.availability).toBe("red");
    expect(s.quads).toHaveLength(2);
    const raw = JSON.parse(goldenText);
    for (let i = 0; i < s.quads.length; i++) {
      expect(s.quads[i]!.corners).toEqual(raw.quads[i].corners);
    }
    expect(s.hud.references).toEqual([0, 1, 2]);
  });

  it("accepts a null ego", () => {
    const s = parseFrame(mutate(goldenText, (o) => (o.ego = null)));
    if (s.type !== "snapshot") throw new Error("not a snapshot");
    expect(s.ego).toBeNull();
  });

  it("rejects structural damage with a path in the message", () => {
    expect(() => parseFrame(mutate(goldenText, (o) => (o.tick = "145")))).toThrow(/snapshot\.tick/);
    expect(() => parseFrame(mutate(goldenText, (o) => delete o.paused))).toThrow(/missing key "paused"/);
    expect(() => parseFrame(mutate(goldenText, (o) => (o.slots[1].availability = "blue")))).toThrow(
      /slots\[1\]\.availability/,
    );
    expect(() =>
      parseFrame(mutate(goldenText, (o) => (o.quads[0].corners = o.quads[0].corners.slice(0, 2)))),
    ).toThrow(/at least 3 vertices/);
    expect(() => parseFrame(mutate(goldenText, (o) => (o.quads[0].corners[2] = [1])))).toThrow(
      /corners\[2\]/,
    );
    expect(() => parseFrame(mutate(goldenText, (o) => (o.hud.references = 3)))).toThrow(
      /hud\.references/,
    );
    expect(() => parseFrame(mutate(goldenText, (o) => (o.ego.v = null)))).toThrow(/ego\.v/);
  });

  it("rejects non-finite numbers", () => {
    expect(() => parseFrame(goldenText.replace('"t":7.25', '"t":null'))).toThrow(/snapshot\.t/);
  });
});

describe("other frames", () => {
  it("parses end, pong and error frames", () => {
    const end = parseFrame('{"type":"end","tick":400,"summary":null}');
    expect(end).toEqual({ type: "end", tick: 400, summary: null });
    const endFull = parseFrame('{"type":"end","tick":400,"summary":{"seed":4}}');
    if (endFull.type !== "end") throw new Error("not end");
    expect(endFull.summary).toEqual({ seed: 4 });
    expect(parseFrame('{"type":"pong"}')).toEqual({ type: "pong" });
    expect(parseFrame('{"type":"error","error":"unknown-type:x"}')).toEqual({
      type: "error",
      error: "unknown-type:x",
    });
  });

  it("rejects junk", () => {
    expect(() => parseFrame("not json")).toThrow(/not valid JSON/);
    expect(() => parseFrame("[1,2]")).toThrow(SchemaError);
    expect(() => parseFrame('{"type":"mystery"}')).toThrow(/unknown frame type/);
    expect(() => parseFrame('{"type":"end","tick":1,"summary":[1]}')).toThrow(/end\.summary/);
  });
});

describe("input encoding", () => {
  it("writes the three pedal fields the gateway reads", () => {
    expect(JSON.parse(encodeInput(0.5, 0.0, 0.0))).toEqual({
      type: "input",
      throttle: 0.5,
      brake: 0.0,
      steering: 0.0,
    });
  });
});
