"""Per-run aggregates: normalized VoI, update frequency and haptic QoE."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import INF, CorrelationMatrix, DomainError, joint_voi, update_gain
from .sim import RunLog


@dataclass(frozen=True)
class RunMetrics:
    normalized_voi: Optional[float]
    update_freq_hz: tuple[float, ...]
    qoe: Optional[float]
    delivered_objects: int
    wasted_bits: float


def delivered_values(log: RunLog) -> np.ndarray:
    """Effective value of every delivery, with gains taken at delivery time.

    The gain argument is the time since that sensor's previous delivery (or
    the sample distance from it for scalar sensors); a first delivery gets
    gain 1.
    """
    n = len(log.specs)
    last_t = [None] * n
    last_v = [None] * n
    out = np.empty(log.sensor.size)
    for k, (s, t, v) in enumerate(zip(log.sensor.tolist(), log.time.tolist(), log.sample.tolist())):
        spec = log.specs[s]
        if last_t[s] is None:
            arg = INF
        elif spec.is_scalar:
            arg = abs(v - last_v[s])
        else:
            arg = max(0.0, t - last_t[s])
        out[k] = spec.intrinsic_value * update_gain(spec.temporal_model, arg)
        last_t[s], last_v[s] = t, v
    return out


def mean_batch_voi(log: RunLog) -> float:
    """Joint delivered value per batch, averaged over every generated batch."""
    if log.n_batches == 0:
        return 0.0
    values = delivered_values(log)
    batches = log.batch_index()
    total = 0.0
    order = np.argsort(batches, kind="stable")
    bounds = np.flatnonzero(np.diff(batches[order])) + 1
    for grp in np.split(order, bounds):
        if grp.size == 0:
            continue
        sids = log.sensor[grp]
        sub = CorrelationMatrix(log.w.w[np.ix_(sids, sids)])
        total += joint_voi(values[grp].tolist(), range(grp.size), sub)
    return total / log.n_batches


def normalized_voi(run: RunLog, reference: RunLog) -> float:
    if run.n_batches != reference.n_batches or run.period_s != reference.period_s:
        raise DomainError("run and reference cover different batches")
    ref = mean_batch_voi(reference)
    if ref == 0:
        raise DomainError("reference run has zero value")
    return mean_batch_voi(run) / ref


def update_frequency(run: RunLog, duration_s: Optional[float] = None) -> np.ndarray:
    duration = run.duration_s if duration_s is None else duration_s
    if not duration > 0:
        raise DomainError("duration must be positive")
    counts = np.bincount(run.sensor, minlength=len(run.specs))
    return counts / duration


def receiver_estimates(
    trajectory: np.ndarray,
    sensor: np.ndarray,
    gen_time: np.ndarray,
    time: np.ndarray,
    sample: np.ndarray,
    tick_s: float,
) -> np.ndarray:
    """Receiver-side value of each sensor at the end of every tick.

    A delivery becomes visible in the tick during which it completes, and
    never before the tick its sample was generated in. Sensors with no
    delivery yet hold the initial value.
    """
    ticks, n = trajectory.shape
    out = np.repeat(trajectory[:1], ticks, axis=0)
    if sensor.size == 0:
        return out
    gen_tick = np.rint(gen_time / tick_s).astype(np.int64)
    done_tick = np.ceil(time / tick_s - 1e-9).astype(np.int64) - 1
    vis = np.maximum(gen_tick, done_tick)
    # rank deliveries by (visible tick, completion time); the latest rank wins
    order = np.lexsort((time, vis))
    order = order[vis[order] < ticks]
    latest = np.full((ticks, n), -1, dtype=np.int64)
    np.maximum.at(latest, (vis[order], sensor[order]), np.arange(order.size))
    latest = np.maximum.accumulate(latest, axis=0)
    seen = latest >= 0
    out[seen] = sample[order[latest[seen]]]
    return out


def haptic_qoe_raw(
    trajectory: np.ndarray,
    sensor: np.ndarray,
    gen_time: np.ndarray,
    time: np.ndarray,
    sample: np.ndarray,
    jnd: float,
    tick_s: float,
) -> float:
    """Fraction of (sensor, tick) pairs whose receiver error is below ``jnd``."""
    est = receiver_estimates(trajectory, sensor, gen_time, time, sample, tick_s)
    return float(np.mean(np.abs(trajectory - est) < jnd))


def haptic_qoe(run: RunLog, jnd: float, reference: Optional[RunLog] = None) -> float:
    """QoE of ``run``, divided by the reference run's QoE when one is given."""
    if run.trajectory is None:
        raise DomainError("QoE needs the sensor trajectories")
    raw = haptic_qoe_raw(
        run.trajectory, run.sensor, run.gen_time, run.time, run.sample, jnd, run.period_s
    )
    if reference is None:
        return raw
    ref = haptic_qoe(reference, jnd)
    if ref == 0:
        raise DomainError("reference QoE is zero")
    return raw / ref


def run_metrics(run: RunLog, reference: RunLog, jnd: Optional[float] = None) -> RunMetrics:
    """Aggregate one run against its infinite-capacity reference.

    With ``jnd`` the run is scored as a haptic run (QoE, no VoI column);
    otherwise normalized VoI is reported and QoE is left empty.
    """
    if jnd is None:
        nv: Optional[float] = normalized_voi(run, reference)
        qoe = None
    else:
        nv = None
        qoe = haptic_qoe(run, jnd, reference)
    return RunMetrics(
        normalized_voi=nv,
        update_freq_hz=tuple(update_frequency(run).tolist()),
        qoe=qoe,
        delivered_objects=run.delivered_objects,
        wasted_bits=int(round(run.wasted_bits)),
    )
