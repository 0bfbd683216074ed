"""Scenario engine: fixed-timestep loop over the corridor world.

Per-tick order is fixed: spawn due vehicles, deliver bus messages, run the
reservation planner, decide driver commands, integrate motion (with link
transitions and reservation release), broadcast states, record the trace.
All randomness comes from named substreams of the run seed, and vehicles
are processed in spawn order, so identical (config, seed, inputs) give
byte-identical traces.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import metrics as metrics_mod
from .bus import MessageBus, SampleStore
from .controller import ControllerParams, GainTable, LinkGains, step_controller
from .network import ConflictPoint, build_network
from .planner import EtaEstimate, SlotPool, estimate_eta, eta_with_predecessor, maybe_reserve
from .scenario import ScenarioConfig
from .slots import compute_slot, crossed, slot_position
from .vehicle import DriveCommand, Limits, VehicleState, human_input_adapter, step_vehicle

TRACE_COLUMNS = ("t", "vehicle_id", "intersection_id", "r", "v", "a",
                 "slot", "d_arrival", "fuel_rate")

# Execution-layer guards (not part of the consensus law): a constant
# time-gap cap against the physical predecessor, and a hold-short rule when
# the leading reference has not cleared the shared conflict point.
GUARD_TIME_GAP = 0.6     # s
GUARD_STANDSTILL = 2.0   # m
HOLD_MARGIN = 4.0        # m short of the conflict zone
HOLD_DECEL = 2.5         # m/s^2 comfortable braking for holds and signals
YIELD_TIME = 4.0         # s; oncoming traffic arriving sooner than this blocks a left turn


def signal_phase(t: float, green: float, yellow: float) -> dict:
    """Two-phase fixed timing; north-south goes first in the cycle."""
    cycle = 2.0 * (green + yellow)
    u = t % cycle
    if u < green:
        return {"ns": "green", "ew": "red"}
    if u < green + yellow:
        return {"ns": "yellow", "ew": "red"}
    if u < 2.0 * green + yellow:
        return {"ns": "red", "ew": "green"}
    return {"ns": "red", "ew": "yellow"}


class Agent:
    """Mutable runtime wrapper around an immutable VehicleState."""

    __slots__ = ("state", "route", "link_index", "path", "final_link", "spawned_at",
                 "exited_at", "odometer", "fuel_g", "stops", "_stop_run", "_stop_counted",
                 "eta", "target_speed_script", "order", "last_target")

    def __init__(self, state, route, path, final_link, spawned_at, order,
                 target_speed_script=None):
        self.state = state
        self.route = route
        self.link_index = 0
        self.path = path            # None once on the last route link
        self.final_link = final_link
        self.spawned_at = spawned_at
        self.exited_at = None
        self.odometer = 0.0
        self.fuel_g = 0.0
        self.stops = 0
        self._stop_run = 0.0
        self._stop_counted = False
        self.eta = None
        self.target_speed_script = target_speed_script
        self.order = order          # spawn sequence; processing key
        self.last_target = state.v  # last commanded target speed (HMI slot sizing)

    @property
    def vid(self) -> int:
        return self.state.id

    def track_stop(self, dt: float):
        if self.state.v < metrics_mod.STOP_SPEED:
            self._stop_run += dt
            if self._stop_run > metrics_mod.STOP_MIN_T and not self._stop_counted:
                self.stops += 1
                self._stop_counted = True
        else:
            self._stop_run = 0.0
            self._stop_counted = False


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    rows: list
    summaries: list
    zone_occupancy: dict
    spawned: int
    exited: int
    active_at_end: int
    rear_end_overlaps: int
    faults: int
    stale_projections: int = 0
    ego_id: int = None

    def trace_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        for row in self.rows:
            buf.write(row)
            buf.write("\n")
        return buf.getvalue()

    def write_trace(self, path: str):
        with open(path, "w") as f:
            f.write(self.trace_text())

    def vehicle_summary(self, vehicle_id: int):
        for s in self.summaries:
            if s.vehicle_id == vehicle_id:
                return s
        return None

    def zone_report(self):
        return metrics_mod.zone_report(self.zone_occupancy)

    def summary_dict(self) -> dict:
        zr = self.zone_report()
        done = [s for s in self.summaries if s.completed]
        return {
            "seed": self.seed,
            "mode": self.config.mode,
            "ego_id": self.ego_id,
            "spawned": self.spawned,
            "exited": self.exited,
            "active_at_end": self.active_at_end,
            "rear_end_overlaps": self.rear_end_overlaps,
            "faults": self.faults,
            "co_occupancy_events": zr.co_occupancy_events,
            "min_zone_time_gap": zr.min_time_gap if math.isfinite(zr.min_time_gap) else None,
            "stale_projections": self.stale_projections,
            "mean_travel_time": (sum(s.travel_time for s in done) / len(done)) if done else None,
            "total_fuel_g": sum(s.fuel_g for s in self.summaries),
            "total_stops": sum(s.stops for s in self.summaries),
            "vehicles": [vars(s) for s in self.summaries],
        }


class Simulation:
    def __init__(self, cfg: ScenarioConfig, seed: int, ego_input=None, id_offset: int = 0):
        self.cfg = cfg
        self.seed = seed
        net = cfg.network
        self.net = build_network(net.intersections, net.spacing, net.lane_width,
                                 net.approach_len, net.v_limit)
        ss = np.random.SeedSequence(seed)
        bus_ss, spawn_ss, route_ss = ss.spawn(3)
        self.bus_rng = np.random.default_rng(bus_ss)
        self.spawn_rng = np.random.default_rng(spawn_ss)
        self.route_rng = np.random.default_rng(route_ss)

        self.bus = MessageBus(cfg.delay)
        self.bus.register("cyber")
        self.store = SampleStore()
        self.pools = {iid: SlotPool(iid) for iid in self.net.intersections}
        table = GainTable.from_dict(cfg.gain_table) if cfg.gain_table else default_gain_table()
        self.link_gains = LinkGains(table)
        self.base_params = ControllerParams(k=cfg.controller_k, gamma=cfg.controller_gamma,
                                            t_h=cfg.planner.t_h, dt=cfg.dt)
        self.limits = Limits(v_max=net.v_limit)
        self.ego_input = ego_input  # callable(tick) -> (throttle, brake) for a human ego

        self.agents = {}        # vid -> Agent, insertion = spawn order
        self.ego_id = None
        self._next_id = id_offset
        self.tick = 0
        self.rows = []
        self.summaries = []
        self.zone_occupancy = {}
        self._open_zones = {}   # (key, path_id, vid) -> t_enter
        self.spawned = 0
        self.exited = 0
        self.rear_end_overlaps = 0
        self.faults = 0             # ticks a controller held speed on a missing sample
        self.stale_projections = 0  # HMI slots built from dead-reckoned samples
        self._overlapping = set()   # vehicles currently in a rear-end overlap
        self._finished = None

        self._pending = []  # spawn requests waiting for space
        for s in sorted(cfg.scripted, key=lambda s: s.time):
            self._pending.append(dict(time=s.time, edge=s.edge, v0=s.v0, moves=list(s.moves),
                                      kind=s.kind, script=s.target_speed, ego=False))
        if cfg.ego.kind != "none":
            moves = list(cfg.ego.moves) if cfg.ego.moves else ["through"] * net.intersections
            self._pending.append(dict(time=cfg.ego.spawn_time, edge=cfg.ego.edge,
                                      v0=cfg.ego.v0, moves=moves,
                                      kind=cfg.ego.kind, script=None, ego=True))
        self._pending.sort(key=lambda p: p["time"])
        self._demand_edges = self._demand_table()

        # Conflict zones per path: (zone_key, arclength of the conflict point).
        # Same-approach overlap "conflicts" at the path start are lane-following
        # situations, not crossings, and are excluded from the audit.
        self._zones = {}
        for iid in self.net.intersections:
            group = self.net.paths_at(iid)
            for p in group:
                zones = []
                for q in group:
                    if p.id == q.id:
                        continue
                    cp = self.net.conflict_between(p.id, q.id)
                    if cp is None or cp.arclength_on_i < p.stop_arclength - 1e-6:
                        continue
                    key = (iid,) + tuple(sorted((p.id, q.id)))
                    zones.append((key, cp.arclength_on_i))
                self._zones[p.id] = zones

    # ------------------------------------------------------------------ spawn

    def _demand_table(self):
        out = []
        for link in sorted(self.net.entry_links(), key=lambda l: l.id):
            rate = self.cfg.demand.main_rate if link.id.startswith(("nb", "sb")) \
                else self.cfg.demand.cross_rate
            if rate > 0:
                out.append((link.id, rate))
        return out

    def _alloc_id(self) -> int:
        vid = self._next_id
        self._next_id += 1
        return vid

    def _entry_blocked(self, link_id: str, length: float) -> bool:
        for agent in self.agents.values():
            here = agent.path.from_link if agent.path else agent.final_link.id
            if here == link_id and agent.state.r < 2.0 * length + length / 2.0:
                return True
        return False

    def _route_from(self, edge: str, moves):
        """Links visited from an entry edge, consuming `moves` per intersection."""
        route = [edge]
        moves = list(moves)
        cur = edge
        while True:
            nxt = None
            for inter in self.net.intersections.values():
                if cur in inter.approach_links:
                    move = moves.pop(0) if moves else "through"
                    nxt = inter.moves[cur][move]
                    break
            if nxt is None:
                break
            route.append(nxt)
            cur = nxt
            if self.net.links[cur].is_exit:
                break
        return route

    def _spawn(self, edge: str, v0: float, moves, kind: str, script, is_ego: bool, t: float):
        length = 4.5
        if self._entry_blocked(edge, length):
            return None
        route = self._route_from(edge, moves)
        path = self.net.path_between(route[0], route[1]) if len(route) > 1 else None
        final_link = self.net.links[route[-1]]
        vid = self._alloc_id()
        state = VehicleState(id=vid, path_id=path.id if path else final_link.id,
                             r=0.0, x=0.0, v=min(v0, self.limits.v_max), a=0.0,
                             kind=kind)
        agent = Agent(state, route, path, final_link if path is None else None,
                      spawned_at=t, order=self.spawned, target_speed_script=script)
        self.agents[vid] = agent
        self.spawned += 1
        if is_ego:
            self.ego_id = vid
        return agent

    def _spawn_step(self, t: float):
        still = []
        for item in self._pending:
            if item["time"] <= t + 1e-9:
                agent = self._spawn(item["edge"], item["v0"], item["moves"],
                                    item["kind"], item["script"], item["ego"], t)
                if agent is None:
                    still.append(item)  # entry occupied; retry next tick
            else:
                still.append(item)
        self._pending = still
        end = self.cfg.demand.end_time
        if end is not None and t >= end:
            return
        for edge, rate in self._demand_edges:
            if self.spawn_rng.random() < rate * self.cfg.dt:
                moves = self._draw_moves()
                self._spawn(edge, self.cfg.npc_v0, moves, "cav", None, False, t)

    def _draw_moves(self):
        # Enough draws for the longest route; unused tail is ignored.
        probs = self.cfg.demand.turn_probs
        n = self.cfg.network.intersections
        choices = []
        for _ in range(n):
            u = self.route_rng.random()
            choices.append("left" if u < probs[0] else
                           "through" if u < probs[0] + probs[1] else "right")
        return choices

    # ------------------------------------------------------------- planner

    def _link_occupants(self):
        """Agents grouped by the link they are on, front (largest r) first."""
        groups = {}
        for agent in self.agents.values():
            here = agent.path.from_link if agent.path else agent.final_link.id
            groups.setdefault(here, []).append(agent)
        for members in groups.values():
            members.sort(key=lambda a: -a.state.r)
        return groups

    def _planner_step(self, t: float, occupants):
        if self.cfg.mode != "unsignalized":
            return
        params = self.cfg.planner
        # ETA per lane, front to back, so follower coupling sees the
        # predecessor's already-coupled estimate.
        for members in occupants.values():
            prev_eta = None
            for agent in members:
                if agent.path is None:
                    prev_eta = None
                    continue
                d = max(agent.path.stop_arclength - agent.state.r, 0.0)
                eta_t = estimate_eta(agent.state.v, agent.state.a, d,
                                     self.limits.v_max, params.v_floor)
                if prev_eta is not None:
                    eta_t = eta_with_predecessor(eta_t, prev_eta, params.t_h, params.eta_rule)
                agent.eta = EtaEstimate(t=eta_t, d=d, computed_at=t)
                prev_eta = eta_t
        for agent in sorted(self.agents.values(), key=lambda a: a.order):
            if agent.path is None or agent.eta is None:
                continue
            pool = self.pools[agent.path.intersection_id]
            maybe_reserve(agent.vid, agent.path.id, agent.eta, params, pool,
                          self._paths_conflict)

    def _paths_conflict(self, pid: str, qid: str) -> bool:
        return pid == qid or self.net.conflict_between(pid, qid) is not None

    # ------------------------------------------------------------- drivers

    def _command_for(self, agent: Agent, t: float, occupants) -> DriveCommand:
        if agent.target_speed_script is not None:
            return DriveCommand(target_speed=min(agent.target_speed_script, self.limits.v_max),
                                source="script")
        if agent.vid == self.ego_id and agent.state.kind == "human":
            throttle, brake = (0.0, 0.0)
            if self.ego_input is not None:
                throttle, brake = self.ego_input(self.tick)
            return human_input_adapter(throttle, brake, self.limits)
        if self.cfg.mode == "baseline":
            target = self._baseline_target(agent, t, occupants)
        else:
            target = self._cav_target(agent, t, occupants)
        if self.cfg.guards:
            target = min(target, self._headway_cap(agent, occupants))
        return DriveCommand(target_speed=max(target, 0.0), source="controller")

    def _cav_target(self, agent: Agent, t: float, occupants) -> float:
        free = self.limits.v_max
        if agent.path is None:
            return free
        pool = self.pools[agent.path.intersection_id]
        record = pool.get(agent.vid)
        if record is None or not record.active:
            return free
        decision = step_controller(agent.state, record, pool, self.store, self.net,
                                   self.base_params, self.link_gains, t, self.limits.v_max)
        if decision is None:
            target = free  # leading reference released; free-drive
        else:
            v_cmd, slot_r, _leader_id = decision
            if slot_r is None:
                self.faults += 1  # leader sample missing; holding speed
            target = v_cmd
        if self.cfg.guards:
            # The guard outlives the leader link: trailing references may
            # still be short of their conflict points.
            target = min(target, self._zone_hold_cap(agent, record, t))
        return target

    def _zone_hold_cap(self, agent: Agent, record, t: float) -> float:
        """Hold short of a shared conflict zone a reference has not cleared.

        Slot order serializes entries pairwise, but the consensus law only
        tracks slot s-1; a reference crossing at a different conflict point
        than the ego's leader is not serialized by following alone, so every
        uncrossed reference is checked. Engages only when the projected
        entry would come sooner than the reference's exit plus half a
        headway; otherwise drivers flow freely.
        """
        cap = self.limits.v_max
        pool = self.pools[record.intersection_id]
        for ref_id in record.reference_ids:
            ref_rec = pool.get(ref_id)
            if ref_rec is None:
                continue  # released: fully past the box
            cp = self.net.conflict_between(record.path_id, ref_rec.path_id)
            if cp is None or cp.arclength_on_i <= 1e-9:
                continue  # same-lane overlap: headway cap handles it
            sampled = self.store.latest_sample(ref_id, t)
            if sampled is None:
                continue
            sample, age = sampled
            if sample.path_id != ref_rec.path_id:
                continue
            ref_r = sample.r + sample.v * age
            ref_exit = cp.arclength_on_j + sample.length / 2.0 + HOLD_MARGIN
            if ref_r >= ref_exit:
                continue
            edge = cp.arclength_on_i - agent.state.length / 2.0
            remaining = edge - agent.state.r
            v = agent.state.v
            # Committed only when full braking can no longer stop short of
            # the zone itself. A position-only test is not enough: a vehicle
            # held by some other conflict can creep past its comfort point
            # at walking speed and must still yield here when it moves again.
            if remaining <= 0 or v * v > 2.0 * abs(self.limits.a_min) * remaining:
                continue
            hold_dist = max(remaining - HOLD_MARGIN, 0.0)
            # Earliest possible entry (full acceleration) against the
            # reference's projected exit; the mismatch direction is what
            # keeps the realized crossing gap above half a headway. Past the
            # comfort point hold_dist is zero: stand until the zone clears.
            t_entry = self._soonest_arrival(v, hold_dist)
            t_clear = (ref_exit - ref_r) / max(sample.v, 0.5)
            if t_entry >= t_clear + self.cfg.planner.t_h:
                continue
            cap = min(cap, math.sqrt(2.0 * HOLD_DECEL * hold_dist))
        return cap

    def _soonest_arrival(self, v: float, dist: float) -> float:
        a, vm = self.limits.a_max, self.limits.v_max
        ramp = (vm * vm - v * v) / (2.0 * a)
        if dist <= ramp:
            return (math.sqrt(v * v + 2.0 * a * dist) - v) / a
        return (vm - v) / a + (dist - ramp) / vm

    def _headway_cap(self, agent: Agent, occupants) -> float:
        got = self._front_gap(agent, occupants)
        if got is None:
            self._overlapping.discard(agent.vid)
            return self.limits.v_max
        gap, v_lead, same_link = got
        if gap <= 0:
            # merge-point lookahead can dip negative for a tick while cross
            # traffic passes the junction; only a same-link pair is a real
            # rear-end overlap
            if same_link and agent.vid not in self._overlapping:
                self._overlapping.add(agent.vid)
                self.rear_end_overlaps += 1
            return 0.0
        self._overlapping.discard(agent.vid)
        slack = gap - GUARD_STANDSTILL
        if slack <= 0:
            return 0.0
        # time-gap rule, bounded by the speed that comfortable braking can
        # shed down to the leader's within the available slack
        brake_cap = math.sqrt(v_lead * v_lead + 2.0 * HOLD_DECEL * slack)
        return min(slack / GUARD_TIME_GAP, brake_cap)

    def _front_gap(self, agent: Agent, occupants):
        """(bumper gap, leader speed, same_link) to the nearest vehicle ahead
        on this or the next link; None with a clear road."""
        here = agent.path.from_link if agent.path else agent.final_link.id
        members = occupants.get(here, ())
        best = None
        for other in members:
            if other.vid != agent.vid and other.state.r > agent.state.r:
                if best is None or other.state.r < best.state.r:
                    best = other
        if best is not None:
            gap = (best.state.r - agent.state.r) \
                - (best.state.length + agent.state.length) / 2.0
            return gap, best.state.v, True
        if agent.path is not None:
            nxt = agent.path.to_link
            ahead = occupants.get(nxt, ())
            if ahead:
                tail = ahead[-1]  # smallest r on the next link
                gap = (agent.path.total_length - agent.state.r) + tail.state.r \
                    - (tail.state.length + agent.state.length) / 2.0
                return gap, tail.state.v, False
        return None

    def _baseline_target(self, agent: Agent, t: float, occupants) -> float:
        target = self.limits.v_max
        if agent.path is None:
            return target
        inter = self.net.intersections[agent.path.intersection_id]
        axis = inter.axis_of[agent.path.from_link]
        g, y = self.cfg.signals.green, self.cfg.signals.yellow
        phase = signal_phase(t, g, y)[axis]
        d = agent.path.stop_arclength - agent.state.r
        if d > 0:
            must_stop = phase == "red"
            if phase == "yellow":
                # proceed only when the whole box clears before the red;
                # there is no all-red interval, so a lingering tail would
                # meet released cross traffic
                cycle = 2.0 * (g + y)
                u = t % cycle
                t_red = (g + y - u) if axis == "ns" else (cycle - u)
                to_clear = (agent.path.total_length - agent.state.r) \
                    + agent.state.length + 1.0
                must_stop = agent.state.v * t_red < to_clear
            if not must_stop and phase in ("green", "yellow") \
                    and agent.path.move == "left" \
                    and self._oncoming_blocks(agent, occupants):
                must_stop = True
            if not must_stop and self._would_block_box(agent, occupants):
                must_stop = True
            if must_stop:
                margin = 1.0
                if d <= margin:
                    return 0.0
                target = min(target, math.sqrt(2.0 * HOLD_DECEL * (d - margin)))
        return target

    def _would_block_box(self, agent: Agent, occupants) -> bool:
        """Keep the box clear: hold at the line when a standing queue ahead
        would leave this vehicle stopped inside or just past the box."""
        got = self._front_gap(agent, occupants)
        if got is None:
            return False
        gap, v_lead, _same = got
        if v_lead >= 1.0:
            return False
        r_stop = agent.state.r + gap - GUARD_STANDSTILL
        return r_stop < agent.path.total_length + 5.0

    def _oncoming_blocks(self, agent: Agent, occupants) -> bool:
        """Permissive left: yield to oncoming traffic near or inside the box.

        Oncoming lefts conflict at the box center in this geometry, so they
        block too, with a fixed priority (smaller approach id goes first) to
        avoid a symmetric standoff.
        """
        inter = self.net.intersections[agent.path.intersection_id]
        nb, sb, eb, wb = inter.approach_links
        mine = agent.path.from_link
        opposite = {nb: sb, sb: nb, eb: wb, wb: eb}[mine]
        for other in occupants.get(opposite, ()):
            if other.path is None:
                continue
            d_opp = other.path.stop_arclength - other.state.r
            window = other.state.v * YIELD_TIME + 10.0
            if other.path.move == "left":
                # a left already inside the box blocks either way; an
                # approaching one blocks only the lower-priority side
                in_box = -2.0 * inter.box_half - 5.0 < d_opp <= 0.0
                if in_box or (mine > opposite and 0.0 < d_opp < window):
                    return True
                continue
            if -2.0 * inter.box_half < d_opp < window and other.state.v > 0.5:
                return True
        return False

    # ----------------------------------------------------------- integration

    def _integrate(self, agent: Agent, cmd: DriveCommand, t_next: float):
        before = agent.state
        agent.state = step_vehicle(before, cmd, self.cfg.dt, self.limits)
        agent.odometer += agent.state.r - before.r
        rate = metrics_mod.fuel_rate(agent.state.v, agent.state.a, self.cfg.fuel)
        agent.fuel_g += rate * self.cfg.dt
        agent.track_stop(self.cfg.dt)
        # Link transitions; loop in case a long step crosses a short connector.
        while True:
            if agent.path is not None and agent.state.r > agent.path.total_length:
                leftover = agent.state.r - agent.path.total_length
                self._release(agent, t_next)
                agent.link_index += 1
                from_link = agent.route[agent.link_index]
                if agent.link_index + 1 < len(agent.route):
                    agent.path = self.net.path_between(from_link, agent.route[agent.link_index + 1])
                    agent.final_link = None
                    agent.state = agent.state.__class__(**{**vars_of(agent.state),
                                                           "path_id": agent.path.id,
                                                           "r": leftover})
                else:
                    agent.path = None
                    agent.final_link = self.net.links[from_link]
                    agent.state = agent.state.__class__(**{**vars_of(agent.state),
                                                           "path_id": from_link,
                                                           "r": leftover})
                continue
            if agent.path is None and agent.state.r >= agent.final_link.length:
                self._exit(agent, t_next)
            break
        return rate

    def _release(self, agent: Agent, t_next: float):
        pool = self.pools[agent.path.intersection_id]
        if pool.get(agent.vid) is not None:
            pool.release(agent.vid)
        self.link_gains.drop(agent.vid)
        self._close_zones(agent, t_next)

    def _exit(self, agent: Agent, t_next: float):
        agent.exited_at = t_next
        self._close_zones(agent, t_next)
        self.store.drop(agent.vid)
        self._overlapping.discard(agent.vid)
        del self.agents[agent.vid]
        self.exited += 1
        self.summaries.append(metrics_mod.VehicleSummary(
            vehicle_id=agent.vid, kind=agent.state.kind, spawned_at=agent.spawned_at,
            exited_at=t_next, travel_time=t_next - agent.spawned_at,
            stops=agent.stops, fuel_g=agent.fuel_g, completed=True))

    # ------------------------------------------------------------- zone audit

    def _zone_step(self, t_next: float):
        for agent in self.agents.values():
            if agent.path is None:
                continue
            half = agent.state.length / 2.0
            for key, arc in self._zones[agent.path.id]:
                token = (key, agent.path.id, agent.vid)
                inside = abs(agent.state.r - arc) <= half
                if inside and token not in self._open_zones:
                    self._open_zones[token] = t_next
                elif not inside and token in self._open_zones:
                    self._log_zone(token, t_next)

    def _log_zone(self, token, t_end: float):
        t_start = self._open_zones.pop(token)
        key, path_id, _vid = token
        self.zone_occupancy.setdefault(key, {}).setdefault(path_id, []).append((t_start, t_end))

    def _close_zones(self, agent: Agent, t: float):
        for token in [tok for tok in self._open_zones if tok[2] == agent.vid]:
            self._log_zone(token, t)

    # ---------------------------------------------------------------- stepping

    def step(self):
        dt = self.cfg.dt
        t = self.tick * dt
        t_next = (self.tick + 1) * dt
        self._spawn_step(t)
        self.store.update(self.bus.poll("cyber", t))
        occupants = self._link_occupants()
        self._planner_step(t, occupants)
        commands = [(agent, self._command_for(agent, t, occupants))
                    for agent in sorted(self.agents.values(), key=lambda a: a.order)]
        rates = {}
        for agent, cmd in commands:
            if cmd.target_speed is not None:
                agent.last_target = cmd.target_speed
            rates[agent.vid] = self._integrate(agent, cmd, t_next)
        self._zone_step(t_next)
        if self.cfg.mode == "unsignalized":
            for agent in sorted(self.agents.values(), key=lambda a: a.order):
                self.bus.send(agent.state, agent.vid, t_next, self.bus_rng)
        self._record(t_next, rates)
        self.tick += 1

    def _record(self, t_next: float, rates):
        for agent in sorted(self.agents.values(), key=lambda a: a.order):
            s = agent.state
            if agent.path is not None:
                iid = agent.path.intersection_id
                pool = self.pools[iid]
                rec = pool.get(agent.vid)
                slot = rec.slot if rec is not None else 0
                d_arr = f"{agent.path.stop_arclength - s.r:.6f}"
            else:
                iid = ""
                slot = 0
                d_arr = ""
            self.rows.append(
                f"{t_next:.4f},{s.id},{iid},{s.r:.6f},{s.v:.6f},{s.a:.6f},"
                f"{slot},{d_arr},{rates.get(s.id, 0.0):.6f}")

    def run(self) -> RunResult:
        n_ticks = int(round(self.cfg.duration / self.cfg.dt))
        for _ in range(n_ticks):
            self.step()
        return self.finish()

    def finish(self) -> RunResult:
        """Close open records and assemble the result; idempotent."""
        if self._finished is not None:
            return self._finished
        t_end = self.tick * self.cfg.dt
        for agent in self.agents.values():
            self._close_zones(agent, t_end)
            self.summaries.append(metrics_mod.VehicleSummary(
                vehicle_id=agent.vid, kind=agent.state.kind, spawned_at=agent.spawned_at,
                exited_at=float("nan"), travel_time=float("nan"),
                stops=agent.stops, fuel_g=agent.fuel_g, completed=False))
        self.summaries.sort(key=lambda s: s.vehicle_id)
        self._finished = RunResult(
            config=self.cfg, seed=self.seed, rows=self.rows,
            summaries=self.summaries, zone_occupancy=self.zone_occupancy,
            spawned=self.spawned, exited=self.exited,
            active_at_end=len(self.agents),
            rear_end_overlaps=self.rear_end_overlaps, faults=self.faults,
            stale_projections=self.stale_projections, ego_id=self.ego_id)
        return self._finished

    # ------------------------------------------------------------- HMI view

    def hmi_slots(self, vehicle_id: int, v_target: float = None):
        """Displayed slots for a vehicle: its uncrossed conflicting references.

        Uses the same delayed samples and projection as the controller, so
        the leading slot here matches the control input exactly.
        """
        agent = self.agents.get(vehicle_id)
        if agent is None or agent.path is None:
            return []
        pool = self.pools[agent.path.intersection_id]
        record = pool.get(vehicle_id)
        if record is None or not record.active:
            return []
        t = self.tick * self.cfg.dt
        if v_target is None:
            v_target = agent.last_target
        out = []
        for ref_id in sorted(record.reference_ids):
            ref_rec = pool.get(ref_id)
            if ref_rec is None or not ref_rec.active:
                continue
            if ref_rec.path_id == record.path_id:
                # same lane: the projection degenerates to the leader's own
                # position, expressed as an equal-arclength crossing
                end = agent.path.stop_arclength
                cp = ConflictPoint(point=agent.path.point_at(end),
                                   arclength_on_i=end, arclength_on_j=end,
                                   delta_ij=0.0)
            else:
                cp = self.net.conflict_between(record.path_id, ref_rec.path_id)
            if cp is None or crossed(agent.state.r, cp):
                continue
            sampled = self.store.latest_sample(ref_id, t)
            if sampled is None or sampled[0].path_id != ref_rec.path_id:
                continue
            sample, age = sampled
            if age > 0.5:
                self.stale_projections += 1
            out.append(compute_slot(agent.state, sample, cp, v_target,
                                    self.cfg.planner.t_h, age))
        return out


def vars_of(state: VehicleState) -> dict:
    return {f: getattr(state, f) for f in state.__dataclass_fields__}


def default_gain_table() -> GainTable:
    from importlib.resources import files
    data = json.loads(files("slotsim.data").joinpath("gain_table.json").read_text())
    return GainTable.from_dict(data)


def run_scenario(cfg: ScenarioConfig, seed: int, ego_input=None) -> RunResult:
    return Simulation(cfg, seed, ego_input=ego_input).run()
