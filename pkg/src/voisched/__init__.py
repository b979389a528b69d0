"""Value-of-information scheduling of multi-sensor data over a multi-stream transport."""
from .core import (
    AlwaysOne,
    Batch,
    ConfigurationError,
    CorrelationMatrix,
    DifferenceLogistic,
    DomainError,
    Exponential,
    Object,
    ReceiverState,
    SensorSpec,
    Sigmoid,
    Step,
    effective_voi,
    joint_voi,
    update_gain,
)
from .kernels import BACKEND
from .qkp import QkpInstance, Selection, solve, solve_exact, solve_greedy, solve_local_search
from .sched import SchedulerKind, TransmissionPlan, schedule

__version__ = "0.1.0"

__all__ = [
    "AlwaysOne",
    "Batch",
    "ConfigurationError",
    "CorrelationMatrix",
    "DifferenceLogistic",
    "DomainError",
    "Exponential",
    "Object",
    "ReceiverState",
    "SensorSpec",
    "Sigmoid",
    "Step",
    "effective_voi",
    "joint_voi",
    "update_gain",
    "BACKEND",
    "QkpInstance",
    "Selection",
    "solve",
    "solve_exact",
    "solve_greedy",
    "solve_local_search",
    "SchedulerKind",
    "TransmissionPlan",
    "schedule",
]
