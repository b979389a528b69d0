"""Parameter sets and generators for the driving and haptic scenarios."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import kernels
from .core import (
    Batch,
    CorrelationMatrix,
    DifferenceLogistic,
    DomainError,
    Exponential,
    Object,
    SensorSpec,
)

KB_BITS = 8 * 1000

V2X_NAMES = ("f", "r", "lft", "rgt", "L")
V2X_SIZES_KB = {"f": 180, "r": 180, "lft": 140, "rgt": 140, "L": 1300}
V2X_VALUES = {"f": 0.9, "r": 0.7, "lft": 0.5, "rgt": 0.5, "L": 1.0}
V2X_PERIOD_S = 0.1
V2X_TAU_S = 0.2
# LiDAR overlaps every camera; front overlaps both laterals; laterals barely
# overlap each other; the rear camera overlaps nothing
V2X_LIDAR_CAMERA_W = 0.6
V2X_FRONT_LATERAL_W = 0.2
V2X_LATERAL_LATERAL_W = 0.1


@dataclass(frozen=True)
class V2xConfig:
    specs: tuple[SensorSpec, ...]
    w: CorrelationMatrix
    period_s: float = V2X_PERIOD_S

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def batch_bits(self) -> int:
        return sum(s.size_bits for s in self.specs)

    @property
    def peak_rate_bps(self) -> float:
        return self.batch_bits / self.period_s


def v2x_correlation(
    lidar_camera: float = V2X_LIDAR_CAMERA_W,
    front_lateral: float = V2X_FRONT_LATERAL_W,
    lateral_lateral: float = V2X_LATERAL_LATERAL_W,
) -> CorrelationMatrix:
    f, r, lft, rgt, lidar = range(5)
    pairs = {(lidar, cam): lidar_camera for cam in (f, r, lft, rgt)}
    pairs[(f, lft)] = pairs[(f, rgt)] = front_lateral
    pairs[(lft, rgt)] = lateral_lateral
    return CorrelationMatrix.from_pairs(5, pairs)


def v2x_defaults(
    *,
    sizes_kb: Optional[dict[str, float]] = None,
    values: Optional[dict[str, float]] = None,
    tau_s: float | dict[str, float] = V2X_TAU_S,
    w: Optional[Sequence[Sequence[float]]] = None,
    period_s: float = V2X_PERIOD_S,
) -> V2xConfig:
    """Five-sensor vehicle: front, rear, two lateral cameras and a LiDAR.

    Every keyword overrides the corresponding default (sizes in KB of
    1000 bytes, intrinsic values, decay constants, full 5x5 weights).
    """
    sizes_kb = {**V2X_SIZES_KB, **(sizes_kb or {})}
    values = {**V2X_VALUES, **(values or {})}
    taus = tau_s if isinstance(tau_s, dict) else {name: tau_s for name in V2X_NAMES}
    specs = tuple(
        SensorSpec(
            sensor_id=i,
            name=name,
            size_bits=int(round(sizes_kb[name] * KB_BITS)),
            intrinsic_value=float(values[name]),
            temporal_model=Exponential(float(taus.get(name, V2X_TAU_S))),
            period_s=period_s,
        )
        for i, name in enumerate(V2X_NAMES)
    )
    matrix = CorrelationMatrix(w) if w is not None else v2x_correlation()
    if matrix.n != len(specs):
        raise DomainError(f"expected a 5x5 correlation matrix, got n={matrix.n}")
    return V2xConfig(specs, matrix, period_s)


def v2x_batch(t_s: float, cfg: V2xConfig, ids: Iterator[int]) -> Batch:
    """One object per sensor generated at ``t_s``; ``ids`` supplies object ids."""
    ratio = t_s / cfg.period_s
    if abs(ratio - round(ratio)) > 1e-9:
        raise DomainError(f"t_s={t_s} is not a multiple of the period {cfg.period_s}")
    return Batch(
        t_s, tuple(Object(next(ids), s.sensor_id, t_s, s.size_bits) for s in cfg.specs)
    )


# -- haptic ------------------------------------------------------------------

HAPTIC_SENSORS = 44
HAPTIC_SAMPLE_BITS = 32
HAPTIC_TICK_S = 0.001
HAPTIC_SIGMA = 0.0215
HAPTIC_JND = 0.05
HAPTIC_CENTER_SIGMAS = 1.65
HAPTIC_SHARPNESS = 10.0


@dataclass(frozen=True)
class HapticConfig:
    n: int = HAPTIC_SENSORS
    sample_bits: int = HAPTIC_SAMPLE_BITS
    tick_s: float = HAPTIC_TICK_S
    sigma: float = HAPTIC_SIGMA
    jnd: float = HAPTIC_JND
    center_sigmas: float = HAPTIC_CENTER_SIGMAS
    sharpness: float = HAPTIC_SHARPNESS
    intrinsic_value: float = 1.0

    @property
    def gain_model(self) -> DifferenceLogistic:
        return DifferenceLogistic(self.sigma, self.center_sigmas, self.sharpness)

    @property
    def specs(self) -> tuple[SensorSpec, ...]:
        model = self.gain_model
        return tuple(
            SensorSpec(i, f"s{i}", self.sample_bits, self.intrinsic_value, model, self.tick_s)
            for i in range(self.n)
        )

    @property
    def w(self) -> CorrelationMatrix:
        return CorrelationMatrix.identity(self.n)

    @property
    def batch_bits(self) -> int:
        return self.n * self.sample_bits

    @property
    def source_rate_bps(self) -> float:
        return self.batch_bits / self.tick_s


def haptic_initial_state(rng: np.random.Generator, n: int = HAPTIC_SENSORS) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=n)


def haptic_step(
    state: Sequence[float], rng: np.random.Generator, sigma: float = HAPTIC_SIGMA
) -> np.ndarray:
    """One 1 ms Gauss-Markov step per sensor, reflected into [0, 1]."""
    x = np.asarray(state, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("haptic state must lie in [0, 1]")
    z = rng.standard_normal(x.size)
    return np.array([kernels.reflect_unit(xi + sigma * zi) for xi, zi in zip(x, z)])


def haptic_trajectory(
    seed: int, ticks: int, cfg: HapticConfig = HapticConfig()
) -> np.ndarray:
    """Seeded (ticks, n) trajectory. Row k is identical to applying
    :func:`haptic_step` k times to the initial state with the same generator."""
    rng = np.random.default_rng(seed)
    x0 = haptic_initial_state(rng, cfg.n)
    z = rng.standard_normal((max(ticks - 1, 0), cfg.n))
    return kernels.reflected_walk(x0, z, cfg.sigma)[:ticks]


def haptic_batch(
    t_s: float, state: Sequence[float], cfg: HapticConfig, ids: Iterator[int]
) -> Batch:
    ratio = t_s / cfg.tick_s
    if abs(ratio - round(ratio)) > 1e-6:
        raise DomainError(f"t_s={t_s} is not a multiple of the tick {cfg.tick_s}")
    return Batch(
        t_s,
        tuple(
            Object(next(ids), i, t_s, cfg.sample_bits, float(state[i])) for i in range(cfg.n)
        ),
    )


def object_ids(start: int = 0) -> Iterator[int]:
    return itertools.count(start)
