"""Slot geometry: projecting a conflicting vehicle into the ego lane.

A reference vehicle j is mapped onto the ego path as a virtual slot whose
distance to the shared conflict point equals j's own distance to it:

    r_s = arclength_of_conflict_on_ego - (arclength_of_conflict_on_j - r_j)

For a same-lane reference (paths overlapping from their start) this
degenerates to the reference's actual position. The slot moves with the
reference's speed and sits at the ego position exactly when both vehicles
are equally far from the conflict point. Displayed slots are dropped once
the ego crosses the conflict point; stale samples are dead-reckoned.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import ConflictPoint

STALE_AFTER = 0.5  # s; older samples are dead-reckoned forward


@dataclass(frozen=True)
class SlotGeometry:
    ref_id: int
    r_s: float        # slot center along the ego path, m
    x_s: float        # lateral offset, mirrors the ego's, m
    l_s: float        # slot length, m
    w_s: float        # slot width (the reference vehicle's), m
    availability: str = "red"  # red = reserved, green = free gap


def effective_ref_r(ref_r: float, ref_v: float, age: float,
                    stale_after: float = STALE_AFTER) -> float:
    """Reference position, dead-reckoned when the sample is stale."""
    if age > stale_after:
        return ref_r + ref_v * age
    return ref_r


def slot_position(cp: ConflictPoint, ref_r: float) -> float:
    """Slot center on the ego path for a reference at ref_r on its own path."""
    return cp.arclength_on_i - (cp.arclength_on_j - ref_r)


def compute_slot(ego, ref, cp: ConflictPoint, v_target: float, t_h: float,
                 age: float = 0.0) -> SlotGeometry:
    """Project reference vehicle `ref` into the ego frame.

    `ego` and `ref` are vehicle states; `cp` is the conflict between the ego
    path (i side) and the reference path (j side). The slot is at least as
    long as the headway the ego will need at its next-step target speed.
    """
    ref_r = effective_ref_r(ref.r, ref.v, age)
    return SlotGeometry(
        ref_id=ref.id,
        r_s=slot_position(cp, ref_r),
        x_s=ego.x,
        l_s=max(ref.length, v_target * t_h),
        w_s=ref.width,
    )


def crossed(ego_r: float, cp: ConflictPoint) -> bool:
    """Has the ego passed the conflict point on its own path?"""
    return ego_r > cp.arclength_on_i


def reset_slot(slot_set: dict, ref_id: int):
    """Drop a reference's slot from a display set once its conflict is crossed."""
    slot_set.pop(ref_id, None)


def available_gaps(slots, ego_r: float, horizon: float):
    """Complement of the reserved slots within [ego_r, ego_r + horizon].

    Returns maximal free intervals as (start, end) pairs, sorted ascending;
    degenerate (zero-length) intervals are omitted.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    hi = ego_r + horizon
    occupied = []
    for s in slots:
        lo = max(s.r_s - s.l_s / 2.0, ego_r)
        up = min(s.r_s + s.l_s / 2.0, hi)
        if up > lo:
            occupied.append((lo, up))
    occupied.sort()
    gaps = []
    cursor = ego_r
    for lo, up in occupied:
        if lo > cursor + 1e-12:
            gaps.append((cursor, lo))
        cursor = max(cursor, up)
    if cursor < hi - 1e-12:
        gaps.append((cursor, hi))
    return gaps
