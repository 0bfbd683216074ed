"""WebSocket gateway for human-in-the-loop driving sessions.

One simulation per server. A browser console connects, streams pedal
inputs, and receives one JSON snapshot per simulation tick with the ego
state, the displayed slot set, and the slot rectangles already projected
into camera pixels.

Wire protocol (JSON text frames, schema_version 1):

  client -> server
    {"type": "input", "throttle": f, "brake": f, "steering": f}
    {"type": "step", "n": int}       lockstep servers only
    {"type": "ping"}

  server -> client
    {"type": "hello", "schema_version": 1, "dt": f, "ego_id": int,
     "mode": str, "image_w": int, "image_h": int, "v_max": f, "tick": int}
    {"type": "snapshot", "tick": int, "t": f, "ack_tick": int,
     "paused": bool,
     "ego": {"v": f, "a": f, "r": f, "x": f, "slot": int,
             "intersection": str|null, "d_arrival": f|null},
     "slots": [{"ref_id": int, "r_s": f, "x_s": f, "l_s": f, "w_s": f,
                "availability": str, "ahead": f}, ...],
    "quads": [{"ref_id": int, "color": str, "corners": [[u, v], ...]}, ...],
     "hud": {"speed": f, "throttle": f, "brake": f, "references": [int]}}
    {"type": "pong"}
    {"type": "end", "tick": int, "summary": {...}}

Pedal inputs latch: the vehicle holds the last received pedals until the
next message. Steering is accepted and echoed in the input log but has no
effect; lane keeping is automatic. All floats are rounded to 6 significant
digits before encoding, on both the live and the replay path, so a replayed
input log reproduces a session byte for byte.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import logging
import os

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import TRACE_COLUMNS, Simulation
from .projection import CameraRig, project_slot
from .scenario import ScenarioConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def wire_float(x: float) -> float:
    """Canonical float quantization for every number on the wire."""
    return float(f"{x:.6g}")


class PedalInput:
    """Latching pedal provider for a live session.

    The engine polls `provider(tick)` once per tick while the ego is on the
    road. The first poll after a latch change appends a log entry, so the
    log holds exactly the inputs that took effect and the ticks they took
    effect at. Replaying that log through `ReplayInput` gives the engine an
    identical input sequence.
    """

    def __init__(self):
        self.throttle = 0.0
        self.brake = 0.0
        self.steering = 0.0
        self.log = []
        self._dirty = False

    def set(self, throttle: float, brake: float, steering: float = 0.0):
        throttle, brake, steering = float(throttle), float(brake), float(steering)
        if (throttle, brake) != (self.throttle, self.brake):
            self._dirty = True
        self.throttle = throttle
        self.brake = brake
        self.steering = steering

    def __call__(self, tick: int):
        if self._dirty:
            self.log.append({"tick": tick, "throttle": self.throttle,
                             "brake": self.brake, "steering": self.steering})
            self._dirty = False
        return (self.throttle, self.brake)


class ReplayInput:
    """Input provider that replays a PedalInput log in a headless run."""

    def __init__(self, log):
        self.entries = sorted(log, key=lambda e: e["tick"])
        self._idx = 0
        self._throttle = 0.0
        self._brake = 0.0

    def __call__(self, tick: int):
        while self._idx < len(self.entries) and self.entries[self._idx]["tick"] <= tick:
            entry = self.entries[self._idx]
            self._throttle = entry["throttle"]
            self._brake = entry["brake"]
            self._idx += 1
        return (self._throttle, self._brake)


class HitlSession:
    """A simulation plus the per-tick view composition for one driver."""

    def __init__(self, cfg: ScenarioConfig, seed: int, rig: CameraRig = None):
        if cfg.ego.kind != "human":
            cfg = dataclasses.replace(cfg, ego=dataclasses.replace(cfg.ego, kind="human"))
        self.cfg = cfg
        self.pedals = PedalInput()
        self.sim = Simulation(cfg, seed, ego_input=self.pedals)
        self.rig = rig if rig is not None else CameraRig()
        self.total_ticks = int(round(cfg.duration / cfg.dt))
        self.ack_tick = -1
        self._input_seen = False
        self.result = None

    # ------------------------------------------------------------- control

    def apply_input(self, throttle: float, brake: float, steering: float = 0.0):
        self.pedals.set(throttle, brake, steering)
        self._input_seen = True

    @property
    def done(self) -> bool:
        return self.sim.tick >= self.total_ticks

    def advance(self, n: int = 1) -> int:
        """Step up to n ticks; returns how many actually ran."""
        ran = 0
        for _ in range(n):
            if self.done:
                break
            if self._input_seen:
                self.ack_tick = self.sim.tick
                self._input_seen = False
            self.sim.step()
            ran += 1
        if self.done and self.result is None:
            self.result = self.sim.finish()
        return ran

    def flush_trace(self, path: str):
        """Write the rows recorded so far; called on disconnect and at end."""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as f:
            f.write(",".join(TRACE_COLUMNS) + "\n")
            for row in self.sim.rows:
                f.write(row + "\n")

    # ---------------------------------------------------------------- view

    def hello(self) -> dict:
        return {
            "type": "hello",
            "schema_version": SCHEMA_VERSION,
            "dt": wire_float(self.cfg.dt),
            "ego_id": self.sim.ego_id,
            "mode": self.cfg.mode,
            "image_w": self.rig.image_w,
            "image_h": self.rig.image_h,
            "v_max": wire_float(self.sim.limits.v_max),
            "tick": self.sim.tick,
        }

    def snapshot(self, paused: bool = False) -> dict:
        sim = self.sim
        snap = {
            "type": "snapshot",
            "tick": sim.tick,
            "t": wire_float(sim.tick * self.cfg.dt),
            "ack_tick": self.ack_tick,
            "paused": paused,
            "ego": None,
            "slots": [],
            "quads": [],
            "hud": {
                "speed": 0.0,
                "throttle": wire_float(self.pedals.throttle),
                "brake": wire_float(self.pedals.brake),
                "references": [],
            },
        }
        agent = sim.agents.get(sim.ego_id) if sim.ego_id is not None else None
        if agent is None:
            return snap
        s = agent.state
        ego = {
            "v": wire_float(s.v), "a": wire_float(s.a),
            "r": wire_float(s.r), "x": wire_float(s.x),
            "slot": 0, "intersection": None, "d_arrival": None,
        }
        snap["hud"]["speed"] = wire_float(s.v)
        if agent.path is not None:
            rec = sim.pools[agent.path.intersection_id].get(agent.vid)
            ego["slot"] = rec.slot if rec is not None else 0
            ego["intersection"] = agent.path.intersection_id
            ego["d_arrival"] = wire_float(agent.path.stop_arclength - s.r)
            if rec is not None:
                snap["hud"]["references"] = sorted(rec.reference_ids)
            # human egos have no commanded target; size slots by current speed
            slots = sim.hmi_slots(agent.vid, v_target=s.v)
            cam = self.rig.at(agent.path.point_at(s.r), agent.path.heading_at(s.r))
            for slot in slots:
                snap["slots"].append({
                    "ref_id": slot.ref_id,
                    "r_s": wire_float(slot.r_s),
                    "x_s": wire_float(slot.x_s),
                    "l_s": wire_float(slot.l_s),
                    "w_s": wire_float(slot.w_s),
                    "availability": slot.availability,
                    "ahead": wire_float(slot.r_s - s.r),
                })
                quad = project_slot(slot, agent.path, cam)
                if quad is not None:
                    snap["quads"].append({
                        "ref_id": quad.ref_id,
                        "color": quad.color,
                        "corners": [[wire_float(u), wire_float(v)]
                                    for u, v in quad.corners],
                    })
        snap["ego"] = ego
        return snap

    def end_message(self) -> dict:
        summary = self.result.summary_dict() if self.result is not None else None
        return {"type": "end", "tick": self.sim.tick, "summary": summary}


def encode(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def build_app(cfg: ScenarioConfig, seed: int = 0, camera: str = None,
              lockstep: bool = False, out_dir: str = None):
    """FastAPI app with one WebSocket session at /ws.

    lockstep=False steps the clock in real time (dt wall seconds per tick)
    and pushes snapshots; lockstep=True only steps on client "step"
    messages, which is what the conformance tests drive. One client at a
    time; a disconnect pauses the simulation and flushes the trace, and a
    reconnect resumes it.
    """
    rig = None
    if camera:
        with open(camera) as f:
            rig = CameraRig.from_dict(json.load(f))
    session = HitlSession(cfg, seed, rig)
    app = FastAPI()
    app.state.session = session
    app.state.busy = False
    trace_path = os.path.join(out_dir or "out", f"hitl_{cfg.mode}_{seed}.csv")

    @app.get("/health")
    def health():
        return {"status": "ok", "tick": session.sim.tick, "done": session.done}

    @app.get("/schema")
    def schema():
        return {
            "schema_version": SCHEMA_VERSION,
            "messages": ["hello", "snapshot", "pong", "end"],
            "inputs": ["input", "step", "ping"],
            "trace_columns": "t,vehicle_id,intersection_id,r,v,a,slot,d_arrival,fuel_rate",
        }

    async def handle_client_message(ws, raw: str) -> bool:
        """Returns True when the message should trigger a lockstep step."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            await ws.send_text(encode({"type": "error", "error": "bad-json"}))
            return False
        kind = msg.get("type")
        if kind == "input":
            session.apply_input(msg.get("throttle", 0.0), msg.get("brake", 0.0),
                                msg.get("steering", 0.0))
            return False
        if kind == "ping":
            await ws.send_text(encode({"type": "pong"}))
            return False
        if kind == "step":
            n = int(msg.get("n", 1))
            session.advance(max(n, 0))
            return True
        await ws.send_text(encode({"type": "error", "error": f"unknown-type:{kind}"}))
        return False

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        if app.state.busy:
            await ws.close(code=1013)  # try again later
            return
        app.state.busy = True
        await ws.accept()
        try:
            await ws.send_text(encode(session.hello()))
            await ws.send_text(encode(session.snapshot(paused=True)))
            if lockstep:
                while True:
                    raw = await ws.receive_text()
                    if await handle_client_message(ws, raw):
                        await ws.send_text(encode(session.snapshot()))
                        if session.done:
                            await ws.send_text(encode(session.end_message()))
                            break
            else:
                while not session.done:
                    deadline = asyncio.get_event_loop().time() + cfg.dt
                    while True:
                        timeout = deadline - asyncio.get_event_loop().time()
                        if timeout <= 0:
                            break
                        try:
                            raw = await asyncio.wait_for(ws.receive_text(), timeout)
                        except asyncio.TimeoutError:
                            break
                        await handle_client_message(ws, raw)
                    session.advance(1)
                    await ws.send_text(encode(session.snapshot()))
                await ws.send_text(encode(session.end_message()))
        except WebSocketDisconnect:
            logger.info("client left at tick %d; pausing", session.sim.tick)
        finally:
            app.state.busy = False
            session.flush_trace(trace_path)

    return app
