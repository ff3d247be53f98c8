"""Decentralized constraint-driven highway platooning simulator.

Connected vehicles each solve a tiny per-step program: brake no harder
than the actuator floor, never accelerate while the spacing envelope or
the wake-drag descent direction forbids it, and keep an eye on the
arrival deadline.  Platoons form, split, and merge purely from those
local decisions; the engine only integrates, audits, and bookkeeps.
"""

from ._backend import backend_name
from .constraints import (
    FeasibilityVerdict,
    FeasibleInterval,
    classify_feasibility,
    critical_relative_speed,
    deadline_margin,
    envelope_cap,
    safe_accel_interval,
    stopping_margin,
)
from .controller import (
    ControlDecision,
    leader_control,
    solve_follower_control,
    update_mode,
)
from .core import (
    DragCoefficients,
    OrderingError,
    RoadNetwork,
    SafetyAuditError,
    SimParams,
    SimulationError,
    VehicleMode,
    VehicleState,
    validate_params,
)
from .drag import DragLaw, ExponentialWakeDrag, gradient_flow_bound
from .sim import (
    Event,
    SimResult,
    TrajectoryRecord,
    WorldState,
    insert_vehicle,
    run,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "ControlDecision",
    "DragCoefficients",
    "DragLaw",
    "Event",
    "ExponentialWakeDrag",
    "FeasibilityVerdict",
    "FeasibleInterval",
    "OrderingError",
    "RoadNetwork",
    "SafetyAuditError",
    "SimParams",
    "SimResult",
    "SimulationError",
    "TrajectoryRecord",
    "VehicleMode",
    "VehicleState",
    "WorldState",
    "backend_name",
    "classify_feasibility",
    "critical_relative_speed",
    "deadline_margin",
    "envelope_cap",
    "gradient_flow_bound",
    "insert_vehicle",
    "leader_control",
    "run",
    "safe_accel_interval",
    "solve_follower_control",
    "step",
    "stopping_margin",
    "update_mode",
    "validate_params",
]
