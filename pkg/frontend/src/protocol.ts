/**
 * Wire protocol types and validators for the driver console.
 *
 * The gateway speaks JSON text frames over a WebSocket. The console is a
 * strict consumer: every inbound frame is validated field by field before
 * anything touches the renderer, and the first mismatch halts the session
 * with a banner rather than guessing at intent. Validation is hand rolled
 * so the error message names the exact path that failed.
 */

export const SCHEMA_VERSION = 1;

export interface Hello {
  type: "hello";
  schema_version: number;
  dt: number;
  ego_id: number | null;
  mode: string;
  image_w: number;
  image_h: number;
  v_max: number;
  tick: number;
}

export interface EgoView {
  v: number;
  a: number;
  r: number;
  x: number;
  slot: number | null;
  intersection: string | null;
  d_arrival: number | null;
}

export interface SlotView {
  ref_id: number;
  r_s: number;
  x_s: number;
  l_s: number;
  w_s: number;
  availability: "red" | "green";
  ahead: number;
}

export interface QuadView {
  ref_id: number;
  color: "red" | "green";
  corners: [number, number][];
}

export interface HudView {
  speed: number;
  throttle: number;
  brake: number;
  references: number[];
}

export interface Snapshot {
  type: "snapshot";
  tick: number;
  t: number;
  ack_tick: number;
  paused: boolean;
  ego: EgoView | null;
  slots: SlotView[];
  quads: QuadView[];
  hud: HudView;
}

export interface EndFrame {
  type: "end";
  tick: number;
  summary: Record<string, unknown> | null;
}

export interface Pong {
  type: "pong";
}

/** Application-level complaint about something the client sent. */
export interface ErrorFrame {
  type: "error";
  error: string;
}

export type ServerFrame = Hello | Snapshot | EndFrame | Pong | ErrorFrame;

export interface InputMsg {
  type: "input";
  throttle: number;
  brake: number;
  steering: number;
}

/** Raised on any frame that does not match the schema. */
export class SchemaError extends Error {}

type Obj = Record<string, unknown>;

function fail(path: string, want: string, got: unknown): never {
  throw new SchemaError(`${path}: expected ${want}, got ${describe(got)}`);
}

function describe(v: unknown): string {
  if (v === null) return "null";
  if (Array.isArray(v)) return "array";
  return typeof v;
}

function asObject(v: unknown, path: string): Obj {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    fail(path, "object", v);
  }
  return v as Obj;
}

function num(o: Obj, key: string, path: string): number {
  const v = o[key];
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${path}.${key}`, "finite number", v);
  return v;
}

function int(o: Obj, key: string, path: string): number {
  const v = num(o, key, path);
  if (!Number.isInteger(v)) fail(`${path}.${key}`, "integer", v);
  return v;
}

function str(o: Obj, key: string, path: string): string {
  const v = o[key];
  if (typeof v !== "string") fail(`${path}.${key}`, "string", v);
  return v;
}

function bool(o: Obj, key: string, path: string): boolean {
  const v = o[key];
  if (typeof v !== "boolean") fail(`${path}.${key}`, "boolean", v);
  return v;
}

function nullableNum(o: Obj, key: string, path: string): number | null {
  const v = o[key];
  if (v === null) return null;
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${path}.${key}`, "number or null", v);
  return v;
}

function nullableInt(o: Obj, key: string, path: string): number | null {
  const v = nullableNum(o, key, path);
  if (v !== null && !Number.isInteger(v)) fail(`${path}.${key}`, "integer or null", v);
  return v;
}

function nullableStr(o: Obj, key: string, path: string): string | null {
  const v = o[key];
  if (v === null) return null;
  if (typeof v !== "string") fail(`${path}.${key}`, "string or null", v);
  return v;
}

function keysExactly(o: Obj, expected: string[], path: string): void {
  for (const k of Object.keys(o)) {
    if (!expected.includes(k)) throw new SchemaError(`${path}: unexpected key "${k}"`);
  }
  for (const k of expected) {
    if (!(k in o)) throw new SchemaError(`${path}: missing key "${k}"`);
  }
}

function availability(o: Obj, key: string, path: string): "red" | "green" {
  const v = str(o, key, path);
  if (v !== "red" && v !== "green") fail(`${path}.${key}`, '"red" or "green"', v);
  return v;
}

function parseHello(o: Obj): Hello {
  keysExactly(
    o,
    ["type", "schema_version", "dt", "ego_id", "mode", "image_w", "image_h", "v_max", "tick"],
    "hello",
  );
  const schemaVersion = int(o, "schema_version", "hello");
  if (schemaVersion !== SCHEMA_VERSION) {
    throw new SchemaError(
      `hello.schema_version: server speaks v${schemaVersion}, this console speaks v${SCHEMA_VERSION}`,
    );
  }
  return {
    type: "hello",
    schema_version: schemaVersion,
    dt: num(o, "dt", "hello"),
    ego_id: nullableInt(o, "ego_id", "hello"),
    mode: str(o, "mode", "hello"),
    image_w: int(o, "image_w", "hello"),
    image_h: int(o, "image_h", "hello"),
    v_max: num(o, "v_max", "hello"),
    tick: int(o, "tick", "hello"),
  };
}

function parseEgo(v: unknown, path: string): EgoView | null {
  if (v === null) return null;
  const o = asObject(v, path);
  keysExactly(o, ["v", "a", "r", "x", "slot", "intersection", "d_arrival"], path);
  return {
    v: num(o, "v", path),
    a: num(o, "a", path),
    r: num(o, "r", path),
    x: num(o, "x", path),
    slot: nullableInt(o, "slot", path),
    intersection: nullableStr(o, "intersection", path),
    d_arrival: nullableNum(o, "d_arrival", path),
  };
}

function parseSlot(v: unknown, path: string): SlotView {
  const o = asObject(v, path);
  keysExactly(o, ["ref_id", "r_s", "x_s", "l_s", "w_s", "availability", "ahead"], path);
  return {
    ref_id: int(o, "ref_id", path),
    r_s: num(o, "r_s", path),
    x_s: num(o, "x_s", path),
    l_s: num(o, "l_s", path),
    w_s: num(o, "w_s", path),
    availability: availability(o, "availability", path),
    ahead: num(o, "ahead", path),
  };
}

function parseQuad(v: unknown, path: string): QuadView {
  const o = asObject(v, path);
  keysExactly(o, ["ref_id", "color", "corners"], path);
  const rawCorners = o["corners"];
  if (!Array.isArray(rawCorners)) fail(`${path}.corners`, "array", rawCorners);
  if (rawCorners.length < 3) {
    throw new SchemaError(`${path}.corners: polygon needs at least 3 vertices, got ${rawCorners.length}`);
  }
  const corners: [number, number][] = rawCorners.map((c, i) => {
    if (!Array.isArray(c) || c.length !== 2) fail(`${path}.corners[${i}]`, "[u, v] pair", c);
    const [u, vv] = c as unknown[];
    if (typeof u !== "number" || !Number.isFinite(u)) fail(`${path}.corners[${i}][0]`, "finite number", u);
    if (typeof vv !== "number" || !Number.isFinite(vv)) fail(`${path}.corners[${i}][1]`, "finite number", vv);
    return [u, vv];
  });
  return {
    ref_id: int(o, "ref_id", path),
    color: availability(o, "color", path),
    corners,
  };
}

function parseHud(v: unknown, path: string): HudView {
  const o = asObject(v, path);
  keysExactly(o, ["speed", "throttle", "brake", "references"], path);
  const refs = o["references"];
  if (!Array.isArray(refs)) fail(`${path}.references`, "array", refs);
  const references = refs.map((r, i) => {
    if (typeof r !== "number" || !Number.isInteger(r)) {
      fail(`${path}.references[${i}]`, "integer", r);
    }
    return r;
  });
  return {
    speed: num(o, "speed", path),
    throttle: num(o, "throttle", path),
    brake: num(o, "brake", path),
    references,
  };
}

function parseSnapshot(o: Obj): Snapshot {
  keysExactly(
    o,
    ["type", "tick", "t", "ack_tick", "paused", "ego", "slots", "quads", "hud"],
    "snapshot",
  );
  const rawSlots = o["slots"];
  if (!Array.isArray(rawSlots)) fail("snapshot.slots", "array", rawSlots);
  const rawQuads = o["quads"];
  if (!Array.isArray(rawQuads)) fail("snapshot.quads", "array", rawQuads);
  return {
    type: "snapshot",
    tick: int(o, "tick", "snapshot"),
    t: num(o, "t", "snapshot"),
    ack_tick: int(o, "ack_tick", "snapshot"),
    paused: bool(o, "paused", "snapshot"),
    ego: parseEgo(o["ego"], "snapshot.ego"),
    slots: rawSlots.map((s, i) => parseSlot(s, `snapshot.slots[${i}]`)),
    quads: rawQuads.map((q, i) => parseQuad(q, `snapshot.quads[${i}]`)),
    hud: parseHud(o["hud"], "snapshot.hud"),
  };
}

function parseEnd(o: Obj): EndFrame {
  keysExactly(o, ["type", "tick", "summary"], "end");
  const summary = o["summary"];
  if (summary !== null && (typeof summary !== "object" || Array.isArray(summary))) {
    fail("end.summary", "object or null", summary);
  }
  return {
    type: "end",
    tick: int(o, "tick", "end"),
    summary: summary as Record<string, unknown> | null,
  };
}

/** Parse one inbound text frame. Throws SchemaError on any mismatch. */
export function parseFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new SchemaError("frame is not valid JSON");
  }
  const o = asObject(data, "frame");
  const type = str(o, "type", "frame");
  switch (type) {
    case "hello":
      return parseHello(o);
    case "snapshot":
      return parseSnapshot(o);
    case "end":
      return parseEnd(o);
    case "pong":
      keysExactly(o, ["type"], "pong");
      return { type: "pong" };
    case "error":
      keysExactly(o, ["type", "error"], "error");
      return { type: "error", error: str(o, "error", "error") };
    default:
      throw new SchemaError(`frame.type: unknown frame type "${type}"`);
  }
}

/** Serialize a pedal message exactly as the gateway expects it. */
export function encodeInput(throttle: number, brake: number, steering: number): string {
  const msg: InputMsg = { type: "input", throttle, brake, steering };
  return JSON.stringify(msg);
}
