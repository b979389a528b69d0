"""Domain types and the value-of-information model.

The value of a reading is its sensor's intrinsic value scaled by an update
gain in [0, 1] that depends on what the receiver already knows (time since
the last delivery, or distance from the last delivered sample). A set of
readings is worth the sum of those values minus a pairwise redundancy
discount ``w[i][j] * kernel(v_i, v_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

INF = math.inf


class DomainError(ValueError):
    """An argument is outside the domain of an operation."""


class ConfigurationError(ValueError):
    """Inputs are individually valid but inconsistent with each other."""


def _logistic(z: float) -> float:
    # split on sign so exp never overflows
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _require_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not value > 0:
            raise DomainError(f"{name} must be strictly positive, got {value!r}")


# -- temporal gain models ---------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    tau_s: float

    def __post_init__(self) -> None:
        _require_positive(tau_s=self.tau_s)

    def gain(self, dt: float) -> float:
        return 1.0 - math.exp(-dt / self.tau_s)


@dataclass(frozen=True)
class Step:
    threshold_s: float

    def __post_init__(self) -> None:
        _require_positive(threshold_s=self.threshold_s)

    def gain(self, dt: float) -> float:
        return 0.0 if dt < self.threshold_s else 1.0


@dataclass(frozen=True)
class Sigmoid:
    center_s: float
    sharpness: float

    def __post_init__(self) -> None:
        _require_positive(center_s=self.center_s, sharpness=self.sharpness)

    def gain(self, dt: float) -> float:
        return _logistic(self.sharpness * (dt - self.center_s))


@dataclass(frozen=True)
class DifferenceLogistic:
    """Logistic gain on the sample difference, measured in units of ``sigma``."""

    sigma: float
    center_sigmas: float
    sharpness: float

    def __post_init__(self) -> None:
        _require_positive(
            sigma=self.sigma, center_sigmas=self.center_sigmas, sharpness=self.sharpness
        )

    def gain(self, d: float) -> float:
        return _logistic(self.sharpness * (d - self.center_sigmas * self.sigma) / self.sigma)


@dataclass(frozen=True)
class AlwaysOne:
    def gain(self, arg: float) -> float:
        return 1.0


TemporalGainModel = Union[Exponential, Step, Sigmoid, DifferenceLogistic, AlwaysOne]


def update_gain(model: TemporalGainModel, arg: float) -> float:
    """Gain of a fresh reading given elapsed time (or sample difference).

    ``arg`` is seconds since the last delivery for the time-based models and
    ``|current - last delivered|`` for :class:`DifferenceLogistic`. Pass
    ``math.inf`` when nothing was ever delivered; that always yields 1.
    """
    if math.isnan(arg) or arg < 0:
        raise DomainError(f"gain argument must be >= 0, got {arg!r}")
    if arg == INF:
        return 1.0
    return model.gain(arg)


# -- sensors and readings -----------------------------------------------------


@dataclass(frozen=True)
class SensorSpec:
    sensor_id: int
    name: str
    size_bits: int
    intrinsic_value: float
    temporal_model: TemporalGainModel
    period_s: float

    def __post_init__(self) -> None:
        if self.sensor_id < 0:
            raise DomainError(f"sensor_id must be >= 0, got {self.sensor_id}")
        if int(self.size_bits) != self.size_bits or self.size_bits <= 0:
            raise DomainError(f"size_bits must be a positive integer, got {self.size_bits!r}")
        if not 0.0 <= self.intrinsic_value <= 1.0:
            raise DomainError(f"intrinsic_value must be in [0, 1], got {self.intrinsic_value}")
        _require_positive(period_s=self.period_s)

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.temporal_model, DifferenceLogistic)


@dataclass(frozen=True)
class Object:
    object_id: int
    sensor_id: int
    gen_time_s: float
    size_bits: int
    sample_value: Optional[float] = None


@dataclass(frozen=True)
class Batch:
    gen_time_s: float
    objects: tuple[Object, ...]

    def __post_init__(self) -> None:
        ids = [o.sensor_id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise DomainError("a batch holds at most one object per sensor")

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def total_bits(self) -> int:
        return sum(o.size_bits for o in self.objects)


class CorrelationMatrix:
    """Symmetric cross-sensor redundancy weights with unit diagonal."""

    __slots__ = ("w",)

    def __init__(self, w: Union[Sequence[Sequence[float]], np.ndarray]) -> None:
        arr = np.array(w, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DomainError(f"correlation matrix must be square and non-empty, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise DomainError("correlation matrix must be symmetric")
        if np.any(arr < 0) or np.any(arr > 1):
            raise DomainError("correlation entries must lie in [0, 1]")
        if not np.all(np.diag(arr) == 1.0):
            raise DomainError("correlation matrix diagonal must be 1")
        arr.setflags(write=False)
        self.w = arr

    @classmethod
    def identity(cls, n: int) -> "CorrelationMatrix":
        return cls(np.eye(n))

    @classmethod
    def from_pairs(cls, n: int, pairs: dict[tuple[int, int], float]) -> "CorrelationMatrix":
        arr = np.eye(n)
        for (i, j), value in pairs.items():
            arr[i, j] = arr[j, i] = value
        return cls(arr)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.w - np.diag(np.diag(self.w)))

    def __getitem__(self, ij: tuple[int, int]) -> float:
        return float(self.w[ij])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CorrelationMatrix) and np.array_equal(self.w, other.w)

    def __repr__(self) -> str:
        return f"CorrelationMatrix(n={self.n})"


@dataclass
class ReceiverState:
    """What the receiver holds for each sensor. Owned by one simulation run."""

    last_delivery_time_s: list[Optional[float]]
    last_delivered_sample: list[Optional[float]] = field(default_factory=list)

    @classmethod
    def empty(cls, n: int) -> "ReceiverState":
        return cls([None] * n, [None] * n)

    def record(self, sensor_id: int, time_s: float, sample: Optional[float] = None) -> None:
        self.last_delivery_time_s[sensor_id] = time_s
        self.last_delivered_sample[sensor_id] = sample

    def copy(self) -> "ReceiverState":
        return ReceiverState(list(self.last_delivery_time_s), list(self.last_delivered_sample))


def gain_argument(
    spec: SensorSpec, receiver: ReceiverState, now_s: float, sample: Optional[float]
) -> float:
    """Elapsed time or sample difference as seen by ``receiver`` at ``now_s``."""
    last_t = receiver.last_delivery_time_s[spec.sensor_id]
    if last_t is None:
        return INF
    if spec.is_scalar:
        if sample is None:
            raise ConfigurationError(
                f"sensor {spec.sensor_id} uses a difference gain but the object has no sample"
            )
        last = receiver.last_delivered_sample[spec.sensor_id]
        if last is None:
            return INF
        return abs(sample - last)
    return max(0.0, now_s - last_t)


def effective_voi(
    spec: SensorSpec, receiver: ReceiverState, obj: Object, now_s: float
) -> float:
    if now_s < obj.gen_time_s:
        raise DomainError(f"now_s={now_s} precedes generation time {obj.gen_time_s}")
    if spec.is_scalar and obj.sample_value is None:
        raise ConfigurationError(
            f"sensor {spec.sensor_id} uses a difference gain but the object has no sample"
        )
    arg = gain_argument(spec, receiver, now_s, obj.sample_value)
    return spec.intrinsic_value * update_gain(spec.temporal_model, arg)


# -- joint value --------------------------------------------------------------

RedundancyKernel = Callable[[float, float], float]


def min_kernel(a: float, b: float) -> float:
    return a if a < b else b


def discount_matrix(
    values: Sequence[float], w: np.ndarray, kernel: RedundancyKernel = min_kernel
) -> np.ndarray:
    """Pairwise discounts ``w[i][j] * kernel(v_i, v_j)`` with a zero diagonal."""
    v = np.asarray(values, dtype=float)
    if kernel is min_kernel:
        q = w * np.minimum.outer(v, v)
    else:
        n = len(v)
        q = np.array([[w[i, j] * kernel(v[i], v[j]) for j in range(n)] for i in range(n)])
    np.fill_diagonal(q, 0.0)
    return q


def joint_voi(
    effective_values: Sequence[float],
    members: Iterable[int],
    w: CorrelationMatrix,
    kernel: RedundancyKernel = min_kernel,
) -> float:
    idx = sorted(set(members))
    n = len(effective_values)
    for i in idx:
        if not 0 <= i < n or i >= w.n:
            raise DomainError(f"member index {i} out of range")
    total = 0.0
    for i in idx:
        total += effective_values[i]
    for a, i in enumerate(idx):
        vi = effective_values[i]
        for j in idx[a + 1 :]:
            wij = w.w[i, j]
            if wij:
                total -= wij * kernel(vi, effective_values[j])
    return total
