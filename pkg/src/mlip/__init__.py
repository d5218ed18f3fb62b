"""Multi-domain linear inverted pendulum (MLIP) walking toolkit."""

from .errors import ConvergenceError, MLIPError, SchemaError, SingularSystemError, UncontrollableError
from .gains import GainSpec, InvariantBox, deadbeat_gain, dlqr, invariant_box
from .model import (
    ContinuousState,
    DomainMap,
    GaitParams,
    ResetMap,
    WalkingMode,
    domain_map,
    mat_exp_closed,
    mat_exp_series,
    reset_map,
    zmp_travel,
)
from .orbits import OrbitSpec, lateral_adapter, p1_orbit, p2_orbit, p2_orbit_from_width
from .s2s import S2SDynamics, compose_s2s, compose_s2s_at_fa_end, s2s_step, validate_structure
from .simulator import ForceEvent, PlantSpec, Scenario, StepTrace, VelocityProfile, simulate

__version__ = "0.1.0"

__all__ = [
    "compose_s2s",
    "compose_s2s_at_fa_end",
    "ContinuousState",
    "ConvergenceError",
    "deadbeat_gain",
    "dlqr",
    "domain_map",
    "DomainMap",
    "ForceEvent",
    "GainSpec",
    "GaitParams",
    "invariant_box",
    "InvariantBox",
    "lateral_adapter",
    "mat_exp_closed",
    "mat_exp_series",
    "MLIPError",
    "OrbitSpec",
    "p1_orbit",
    "p2_orbit",
    "p2_orbit_from_width",
    "PlantSpec",
    "reset_map",
    "ResetMap",
    "s2s_step",
    "S2SDynamics",
    "Scenario",
    "SchemaError",
    "simulate",
    "SingularSystemError",
    "StepTrace",
    "UncontrollableError",
    "validate_structure",
    "VelocityProfile",
    "WalkingMode",
    "zmp_travel",
]
