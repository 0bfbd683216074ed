"""Slot reservation planner for unsignalized intersections.

Each intersection keeps its own pool of reservations. A vehicle asks for a
slot once its estimated arrival time or its distance to the stop line
crosses a threshold; the slot number is one past the largest slot among
currently reserved vehicles whose paths conflict with its own, and those
vehicles become its references. The reservation is released, and the slot
number reset to zero, when the vehicle leaves its current link.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_EPS = 1e-9


@dataclass(frozen=True)
class PlannerParams:
    t_h: float = 1.2        # desired time headway, s
    t_theta: float = 10.0   # ETA trigger threshold, s
    d_theta: float = 150.0  # distance trigger threshold, m
    v_floor: float = 0.5    # ETA divisor floor for crawling vehicles, m/s
    # The source pseudocode caps a follower ETA with min(); its prose reads
    # like max(). "min" is the verbatim behavior, "max" the prose-consistent one.
    eta_rule: str = "min"

    def __post_init__(self):
        if self.eta_rule not in ("min", "max"):
            raise ValueError("eta_rule must be 'min' or 'max'")


@dataclass(frozen=True)
class EtaEstimate:
    t: float            # estimated seconds to the stop line
    d: float            # distance to the stop line when computed, m
    computed_at: float  # sim time, s


def estimate_eta(v: float, a: float, d: float, v_limit: float,
                 v_floor: float = 0.5, a_eps: float = 1e-3) -> float:
    """Constant-acceleration arrival-time estimate over distance d.

    Accelerating vehicles ramp to v_limit and cruise; near-zero acceleration
    divides by speed floored at v_floor; decelerating vehicles use braking
    kinematics, falling back to d / v_floor when they would stop short.
    """
    if d < 0:
        raise ValueError("d must be non-negative")
    if d == 0:
        return 0.0
    if a > a_eps and v < v_limit:
        t_ramp = (v_limit - v) / a
        d_ramp = v * t_ramp + 0.5 * a * t_ramp * t_ramp
        if d_ramp >= d:
            return (-v + math.sqrt(v * v + 2.0 * a * d)) / a
        return t_ramp + (d - d_ramp) / v_limit
    if a < -a_eps:
        disc = v * v + 2.0 * a * d  # speed^2 at arrival
        if disc <= 0:
            return d / v_floor  # stops before the stop line
        return (v - math.sqrt(disc)) / -a
    return d / max(v, v_floor)


def eta_with_predecessor(t_i: float, t_pred: float, t_h: float, rule: str = "min") -> float:
    """Couple a follower's ETA to its immediate same-lane predecessor."""
    bound = t_pred + t_h
    return min(t_i, bound) if rule == "min" else max(t_i, bound)


@dataclass
class ReservationRecord:
    vehicle_id: int
    intersection_id: str
    path_id: str
    slot: int
    reference_ids: frozenset
    assigned_at: float

    @property
    def active(self) -> bool:
        return self.slot > 0


class SlotPool:
    """Reservations at one intersection, keyed by vehicle."""

    def __init__(self, intersection_id: str):
        self.intersection_id = intersection_id
        self._records = {}

    def get(self, vehicle_id: int):
        return self._records.get(vehicle_id)

    def active_records(self):
        return list(self._records.values())

    def max_slot(self, vehicle_ids=None) -> int:
        """Largest slot among the given vehicles (all when None); 0 if empty."""
        records = self._records.values() if vehicle_ids is None else \
            [r for vid, r in self._records.items() if vid in vehicle_ids]
        return max((r.slot for r in records), default=0)

    def insert(self, record: ReservationRecord):
        self._records[record.vehicle_id] = record

    def release(self, vehicle_id: int):
        """Reset the slot to zero and drop the record; no-op with a warning if absent."""
        rec = self._records.pop(vehicle_id, None)
        if rec is None:
            logger.warning("release for vehicle %s with no reservation at %s",
                           vehicle_id, self.intersection_id)
            return None
        rec.slot = 0
        rec.reference_ids = frozenset()
        return rec

    def __len__(self):
        return len(self._records)


def maybe_reserve(vehicle_id: int, path_id: str, eta: EtaEstimate,
                  params: PlannerParams, pool: SlotPool, conflicts) -> ReservationRecord:
    """Assign a slot if the ETA or distance trigger fires; else None.

    `conflicts(path_a, path_b)` must say whether two paths at this
    intersection cross. All currently reserved conflicting vehicles are
    linked as references; the new slot is their maximum plus one.
    """
    if pool.get(vehicle_id) is not None:
        return None  # already holds a slot here
    if not (eta.t <= params.t_theta + _EPS or eta.d <= params.d_theta + _EPS):
        return None
    conflicting = [r for r in pool.active_records() if conflicts(path_id, r.path_id)]
    slot = max((r.slot for r in conflicting), default=0) + 1
    record = ReservationRecord(
        vehicle_id=vehicle_id,
        intersection_id=pool.intersection_id,
        path_id=path_id,
        slot=slot,
        reference_ids=frozenset(r.vehicle_id for r in conflicting),
        assigned_at=eta.computed_at,
    )
    pool.insert(record)
    return record
