"""Scenario configuration: schema, validation, presets.

Scenario files are JSON with a `schema_version` field. Every knob has a
default, so `{}` plus a version is a valid scenario; presets used by the
test suite are built in code through the same dataclasses.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .bus import DelayModel
from .errors import ValidationError
from .planner import PlannerParams

SCHEMA_VERSION = 1

MODES = ("unsignalized", "baseline")
EGO_KINDS = ("cav", "human", "none")
MOVES = ("left", "through", "right")


@dataclass(frozen=True)
class NetworkParams:
    intersections: int = 4
    spacing: float = 200.0      # m between intersection centers
    lane_width: float = 3.5     # m
    approach_len: float = 160.0  # m for edge entry/exit stubs
    v_limit: float = 15.0       # m/s


@dataclass(frozen=True)
class DemandParams:
    main_rate: float = 0.10    # veh/s per main-street entry edge
    cross_rate: float = 0.06   # veh/s per side-street entry edge
    end_time: float = None     # s; spawning stops here (None = whole run)
    turn_probs: tuple = (0.2, 0.6, 0.2)  # left, through, right

    def __post_init__(self):
        if self.main_rate < 0 or self.cross_rate < 0:
            raise ValidationError("demand", "spawn rates must be non-negative")
        if len(self.turn_probs) != 3 or abs(sum(self.turn_probs) - 1.0) > 1e-9 \
                or any(p < 0 for p in self.turn_probs):
            raise ValidationError("turn_probs", "need 3 non-negative values summing to 1")


@dataclass(frozen=True)
class EgoSpec:
    kind: str = "cav"
    edge: str = "nb0"
    spawn_time: float = 3.0
    v0: float = 10.0
    moves: tuple = None  # per-intersection moves; None = through everywhere

    def __post_init__(self):
        if self.kind not in EGO_KINDS:
            raise ValidationError("ego.kind", f"must be one of {EGO_KINDS}")


@dataclass(frozen=True)
class ScriptedSpawn:
    time: float
    edge: str
    v0: float
    moves: tuple = ()          # consumed one per intersection, then "through"
    target_speed: float = None  # constant speed script; None = flow with traffic
    kind: str = "scripted"


@dataclass(frozen=True)
class SignalTiming:
    green: float = 30.0  # s
    yellow: float = 3.0  # s

    def __post_init__(self):
        if self.green <= 0 or self.yellow < 0:
            raise ValidationError("signals", "green must be positive, yellow non-negative")


@dataclass(frozen=True)
class FuelParams:
    """Piecewise-linear rate in engine power demand per unit mass.

    rate = idle for vsp <= 0, else idle + slope * vsp, with
    vsp = v * (c_accel * a + c_roll) + c_drag * v^3. Coefficients are
    illustrative light-duty values; comparisons between runs are what count.
    """

    idle: float = 0.40    # g/s
    slope: float = 0.18   # g/s per kW/t
    c_accel: float = 1.1
    c_roll: float = 0.132
    c_drag: float = 0.000302


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    mode: str = "unsignalized"
    duration: float = 150.0
    dt: float = 0.05
    network: NetworkParams = field(default_factory=NetworkParams)
    demand: DemandParams = field(default_factory=DemandParams)
    ego: EgoSpec = field(default_factory=EgoSpec)
    scripted: tuple = ()
    planner: PlannerParams = field(default_factory=PlannerParams)
    controller_k: float = 0.45
    controller_gamma: float = 1.0
    gain_table: dict = None  # inline table; None = packaged default
    delay: DelayModel = field(default_factory=DelayModel)
    signals: SignalTiming = field(default_factory=SignalTiming)
    fuel: FuelParams = field(default_factory=FuelParams)
    npc_v0: float = 12.0
    guards: bool = True  # execution-layer headway/zone guards on drivers

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError("mode", f"must be one of {MODES}")
        if not 0.0 < self.dt <= 0.1:
            raise ValidationError("dt", "must be in (0, 0.1]")
        if self.duration <= 0:
            raise ValidationError("duration", "must be positive")


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ValidationError(where, "expected an object")
    fields = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - fields
    if unknown:
        raise ValidationError(where, f"unknown fields {sorted(unknown)}")
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**coerced)
    except ValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ValidationError(where, str(e))


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ValidationError("scenario", "top level must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    kw = {}
    plain = {"name", "mode", "duration", "dt", "controller_k", "controller_gamma",
             "gain_table", "npc_v0", "guards"}
    nested = {"network": NetworkParams, "demand": DemandParams, "ego": EgoSpec,
              "planner": PlannerParams, "delay": DelayModel, "signals": SignalTiming,
              "fuel": FuelParams}
    for key, value in data.items():
        if key == "schema_version":
            continue
        if key in plain:
            kw[key] = value
        elif key in nested:
            kw[key] = _build(nested[key], value, key)
        elif key == "scripted":
            kw[key] = tuple(_build(ScriptedSpawn, s, f"scripted[{i}]")
                            for i, s in enumerate(value))
        else:
            raise ValidationError(key, "unknown scenario field")
    try:
        return ScenarioConfig(**kw)
    except TypeError as e:
        raise ValidationError("scenario", str(e))


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["scripted"] = [asdict(s) for s in cfg.scripted]
    return {"schema_version": SCHEMA_VERSION, **d}


def load_scenario(path: str) -> ScenarioConfig:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError("scenario", f"not valid JSON: {e}")
    return scenario_from_dict(data)


def preset(name: str) -> ScenarioConfig:
    """Built-in scenarios; `list_presets()` enumerates them."""
    if name not in _PRESETS:
        raise ValidationError("preset", f"unknown preset {name!r}")
    return _PRESETS[name]()


def list_presets():
    return sorted(_PRESETS)


def _preset_corridor() -> ScenarioConfig:
    return ScenarioConfig(
        name="corridor-default",
        duration=150.0,
        dt=0.1,
        demand=DemandParams(main_rate=0.10, cross_rate=0.06, end_time=90.0),
        ego=EgoSpec(kind="cav", edge="nb0", spawn_time=3.0, v0=10.0),
    )


def _preset_compare() -> ScenarioConfig:
    return ScenarioConfig(
        name="corridor-compare",
        duration=240.0,
        dt=0.1,
        demand=DemandParams(main_rate=0.08, cross_rate=0.05, end_time=60.0),
        ego=EgoSpec(kind="cav", edge="nb0", spawn_time=3.0, v0=10.0),
    )


def _preset_platoon() -> ScenarioConfig:
    """Seven-vehicle staging: a main-street platoon around the ego plus two
    side-street arrivals, on a quiet corridor. Produces a full slot ladder
    at the first intersection and an ego re-assignment at the second."""
    scripted = (
        # the lead vehicle leaves the corridor at the first intersection,
        # so the second intersection sees one fewer arrival ahead of the ego
        ScriptedSpawn(time=0.0, edge="nb0", v0=12.0, moves=("right",)),
        ScriptedSpawn(time=2.4, edge="nb0", v0=12.0),
        ScriptedSpawn(time=4.8, edge="nb0", v0=12.0),
        ScriptedSpawn(time=9.6, edge="nb0", v0=12.0),
        ScriptedSpawn(time=8.0, edge="eb_in0", v0=9.0, moves=("through",)),
        ScriptedSpawn(time=10.5, edge="wb_in0", v0=9.0, moves=("through",)),
    )
    return ScenarioConfig(
        name="platoon-seven",
        duration=90.0,
        dt=0.05,
        demand=DemandParams(main_rate=0.0, cross_rate=0.0),
        ego=EgoSpec(kind="cav", edge="nb0", spawn_time=7.2, v0=12.0),
        scripted=scripted,
    )


_PRESETS = {
    "corridor": _preset_corridor,
    "compare": _preset_compare,
    "platoon7": _preset_platoon,
}
