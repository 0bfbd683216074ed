"""slotsim: deterministic microsimulator for slot-managed unsignalized intersections.

A corridor of four-way intersections where connected vehicles reserve
crossing slots over a delayed message bus and track them with a consensus
speed law; includes a signalized baseline, an AR slot-projection pipeline
for a windshield display, metrics, a CLI, and a WebSocket gateway for a
human driver in the loop.
"""

from .bus import DelayModel, MessageBus, SampleStore
from .controller import (ControllerParams, GainTable, Gains, LinkGains,
                         consensus_speed, step_controller, target_speed)
from .engine import RunResult, Simulation, run_scenario, signal_phase
from .errors import TraceFormatError, ValidationError
from .metrics import (VehicleSummary, ZoneReport, bootstrap_mean_ci, count_stops,
                      fuel_rate, paired_reduction_pct, zone_report)
from .network import (ConflictPoint, Intersection, Link, Path, RoadNetwork,
                      build_network, conflict_point, distance_to_arrival)
from .planner import (EtaEstimate, PlannerParams, ReservationRecord, SlotPool,
                      estimate_eta, eta_with_predecessor, maybe_reserve)
from .projection import (CameraModel, CameraRig, ProjectedQuad, ar_frame_to_image,
                         ar_frame_to_world, clip_image_rect, clip_near,
                         image_to_ar_frame, project_slot, slot_corners_world,
                         world_to_ar_frame)
from .scenario import (DemandParams, EgoSpec, FuelParams, NetworkParams,
                       ScenarioConfig, ScriptedSpawn, SignalTiming, list_presets,
                       load_scenario, preset, scenario_from_dict, scenario_to_dict)
from .slots import (SlotGeometry, available_gaps, compute_slot, crossed,
                    effective_ref_r, slot_position)
from .vehicle import (DriveCommand, Limits, VehicleState, human_input_adapter,
                      resolve_accel, step_vehicle)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
