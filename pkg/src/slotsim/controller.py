"""Delayed-feedback speed controller for slot following.

The ego regulates toward a point one time-headway behind its leader's
projected slot, using the leader's last delivered (hence aged) sample:

    v(t+dt) = v - alpha * k * ((r - r_slot + v * (t_h + tau)) + gamma * (v - v_leader)) * dt

clamped to [0, v_max]. tau is the sample age, so the headway term
compensates for the communication delay. Gains (k, gamma) come from a
lookup table indexed by both vehicles' speeds and the gap when the pair
was linked, and stay frozen for the life of the link.
"""

from __future__ import annotations

import json
import logging
from bisect import bisect_right
from dataclasses import dataclass

logger = logging.getLogger(__name__)

FALLBACK_K = 0.45
FALLBACK_GAMMA = 1.0


@dataclass(frozen=True)
class ControllerParams:
    k: float = FALLBACK_K
    gamma: float = FALLBACK_GAMMA
    alpha: float = 1.0   # 1 while a leader link is active, else 0
    t_h: float = 1.2     # s
    dt: float = 0.05     # s


@dataclass(frozen=True)
class Gains:
    k: float
    gamma: float


class GainTable:
    """Trilinear-interpolated (k, gamma) over (v_ego0, v_leader0, gap0).

    Queries outside the grid are clamped to the boundary. Axes must be
    strictly increasing and at least two points long.
    """

    def __init__(self, v_ego_axis, v_leader_axis, gap_axis, k_values, gamma_values):
        self.axes = (list(map(float, v_ego_axis)),
                     list(map(float, v_leader_axis)),
                     list(map(float, gap_axis)))
        for name, ax in zip(("v_ego_axis", "v_leader_axis", "gap_axis"), self.axes):
            if len(ax) < 2 or any(b <= a for a, b in zip(ax, ax[1:])):
                raise ValueError(f"{name} must be strictly increasing with >= 2 points")
        shape = (len(self.axes[0]), len(self.axes[1]), len(self.axes[2]))
        self.k_values = _check_grid(k_values, shape, "k_values")
        self.gamma_values = _check_grid(gamma_values, shape, "gamma_values")

    @classmethod
    def from_dict(cls, d: dict) -> "GainTable":
        return cls(d["v_ego_axis"], d["v_leader_axis"], d["gap_axis"],
                   d["k"], d["gamma"])

    @classmethod
    def load(cls, path: str) -> "GainTable":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def lookup(self, v_ego0: float, v_leader0: float, gap0: float) -> Gains:
        coords = []
        for ax, q in zip(self.axes, (v_ego0, v_leader0, gap0)):
            q = min(max(q, ax[0]), ax[-1])
            i = min(bisect_right(ax, q) - 1, len(ax) - 2)
            i = max(i, 0)
            w = (q - ax[i]) / (ax[i + 1] - ax[i])
            coords.append((i, w))
        return Gains(k=_trilinear(self.k_values, coords),
                     gamma=_trilinear(self.gamma_values, coords))


def _check_grid(values, shape, name):
    if len(values) != shape[0] or any(len(p) != shape[1] for p in values) or \
            any(len(row) != shape[2] for p in values for row in p):
        raise ValueError(f"{name} grid shape does not match axes {shape}")
    return [[[float(v) for v in row] for row in plane] for plane in values]


def _trilinear(grid, coords):
    (i, wi), (j, wj), (k, wk) = coords
    acc = 0.0
    for di, fi in ((0, 1 - wi), (1, wi)):
        for dj, fj in ((0, 1 - wj), (1, wj)):
            for dk, fk in ((0, 1 - wk), (1, wk)):
                acc += fi * fj * fk * grid[i + di][j + dj][k + dk]
    return acc


def lookup_gains(table: GainTable, v_ego0: float, v_leader0: float, gap0: float) -> Gains:
    """Gains for a new leader link; falls back to constants without a table."""
    if table is None:
        return Gains(FALLBACK_K, FALLBACK_GAMMA)
    return table.lookup(v_ego0, v_leader0, gap0)


def consensus_speed(ego_r: float, ego_v: float, slot_r: float, leader_v: float,
                    tau: float, params: ControllerParams) -> float:
    """Raw (unclamped) next-step speed of the feedback law."""
    position_term = ego_r - slot_r + ego_v * (params.t_h + tau)
    speed_term = params.gamma * (ego_v - leader_v)
    return ego_v - params.alpha * params.k * (position_term + speed_term) * params.dt


def target_speed(ego_r: float, ego_v: float, slot_r: float, leader_v: float,
                 tau: float, params: ControllerParams, v_max: float) -> float:
    """Next-step speed command, clamped to [0, v_max] before actuation."""
    return min(max(consensus_speed(ego_r, ego_v, slot_r, leader_v, tau, params), 0.0), v_max)


class LinkGains:
    """Frozen (k, gamma) per ego -> leader link, captured when the pair connects."""

    def __init__(self, table: GainTable = None):
        self.table = table
        self._frozen = {}  # ego_id -> (leader_id, Gains)

    def for_link(self, ego_id: int, leader_id: int, v_ego: float,
                 v_leader: float, gap: float) -> Gains:
        cur = self._frozen.get(ego_id)
        if cur is not None and cur[0] == leader_id:
            return cur[1]
        gains = lookup_gains(self.table, v_ego, v_leader, gap)
        self._frozen[ego_id] = (leader_id, gains)
        return gains

    def drop(self, ego_id: int):
        self._frozen.pop(ego_id, None)


def step_controller(ego, record, pool, store, network, base: ControllerParams,
                    link_gains: LinkGains, t_now: float, v_max: float):
    """One control decision for a reserved ego vehicle.

    Returns (target_speed, slot_r, leader_id), or None when no leading
    reference (slot s-1) is active, which means free driving. A leader
    whose sample has not arrived yet (or whose reported path disagrees
    with its reservation) holds the current speed rather than guessing.
    """
    from .slots import effective_ref_r, slot_position  # local to avoid cycle

    leader = None
    for ref_id in record.reference_ids:
        ref_rec = pool.get(ref_id)
        if ref_rec is not None and ref_rec.slot == record.slot - 1:
            leader = ref_rec
            break
    if leader is None:
        return None

    sampled = store.latest_sample(leader.vehicle_id, t_now)
    if sampled is None or sampled[0].path_id != leader.path_id:
        return (ego.v, None, leader.vehicle_id)  # hold speed until a usable sample
    sample, age = sampled
    cp = network.conflict_between(record.path_id, leader.path_id)
    if cp is None:
        logger.warning("reference %s no longer conflicts with %s", leader.vehicle_id, ego.id)
        return None
    slot_r = slot_position(cp, effective_ref_r(sample.r, sample.v, age))
    gains = link_gains.for_link(ego.id, leader.vehicle_id, ego.v, sample.v, ego.r - slot_r)
    params = ControllerParams(k=gains.k, gamma=gains.gamma, alpha=base.alpha,
                              t_h=base.t_h, dt=base.dt)
    v_cmd = target_speed(ego.r, ego.v, slot_r, sample.v, age, params, v_max)
    return (v_cmd, slot_r, leader.vehicle_id)
