"""Run metrics: travel time, stops, fuel surrogate, conflict-zone gaps.

Fuel is a power-demand surrogate, not a calibrated engine map; its job is
to rank stop-and-go against smooth trajectories consistently. Stop counting
and zone occupancy work on the recorded per-tick histories so they can be
recomputed offline from a trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import FuelParams

STOP_SPEED = 0.1    # m/s
STOP_MIN_T = 1.0    # s a halt must persist to count as a stop


def fuel_rate(v: float, a: float, p: FuelParams) -> float:
    """Instantaneous surrogate rate, g/s; never below idle while running."""
    vsp = v * (p.c_accel * a + p.c_roll) + p.c_drag * v ** 3
    if vsp <= 0.0:
        return p.idle
    return p.idle + p.slope * vsp


def count_stops(speeds, dt: float, threshold: float = STOP_SPEED,
                min_duration: float = STOP_MIN_T) -> int:
    """Halt episodes longer than min_duration in a speed series."""
    stops = 0
    run = 0.0
    counted = False
    for v in speeds:
        if v < threshold:
            run += dt
            if run > min_duration and not counted:
                stops += 1
                counted = True
        else:
            run = 0.0
            counted = False
    return stops


@dataclass
class VehicleSummary:
    vehicle_id: int
    kind: str
    spawned_at: float
    exited_at: float   # NaN when still active at the end of the run
    travel_time: float
    stops: int
    fuel_g: float
    completed: bool


@dataclass
class ZoneReport:
    """Co-occupancy and minimum crossing gap over all conflict zones."""

    co_occupancy_events: int
    min_time_gap: float  # s; inf when no two vehicles used a common zone


def zone_report(occupancy: dict) -> ZoneReport:
    """Digest {zone_key: {side: [(t_enter, t_exit), ...]}} interval logs.

    A zone has two sides, one per conflicting path; overlap between sides
    is a violation. The crossing gap is the smallest time from one side
    leaving to the other entering.
    """
    events = 0
    min_gap = float("inf")
    for sides in occupancy.values():
        if len(sides) < 2:
            continue
        (_, ivals_a), (_, ivals_b) = sorted(sides.items())[:2]
        for ta0, ta1 in ivals_a:
            for tb0, tb1 in ivals_b:
                if ta0 < tb1 and tb0 < ta1:
                    events += 1
                else:
                    gap = tb0 - ta1 if tb0 >= ta1 else ta0 - tb1
                    min_gap = min(min_gap, gap)
    return ZoneReport(co_occupancy_events=events, min_time_gap=min_gap)


def bootstrap_mean_ci(values, n_boot: int = 2000, alpha: float = 0.05, seed: int = 0):
    """Percentile bootstrap CI for the mean of `values`."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values to bootstrap")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(n_boot, arr.size))
    means = arr[idx].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    return float(arr.mean()), float(lo), float(hi)


def paired_reduction_pct(base_values, treat_values):
    """Per-pair percentage reductions, (base - treat) / base * 100."""
    out = []
    for b, t in zip(base_values, treat_values):
        if b <= 0:
            raise ValueError("baseline value must be positive")
        out.append((b - t) / b * 100.0)
    return out
