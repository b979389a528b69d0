"""Simulation runs: scenario -> scheduler -> transport -> delivery log.

:func:`simulate` is the general object-level loop used for every
configuration. :func:`simulate_haptic_fast` runs the same haptic model
through the compiled tick kernel; it only covers the configuration the
kernel specialises (fluid link, oracle capacity, one-tick horizon), and the
test suite checks that both paths produce identical delivery logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels, qkp
from .core import CorrelationMatrix, Object, ReceiverState, SensorSpec
from .sched import KIND_CODES, SchedulerKind, schedule
from .scenarios import (
    HapticConfig,
    V2xConfig,
    haptic_batch,
    haptic_trajectory,
    object_ids,
    v2x_batch,
)
from .transport import (
    CapacityEstimator,
    Delivered,
    EstimatorKind,
    LinkMode,
    LinkModel,
    Reset,
    Superseded,
    SupersedePolicy,
    Transport,
    TransportEvent,
    budget_for_batch,
)

INFINITE = math.inf


@dataclass
class RunLog:
    """Everything the metrics need from one run."""

    scheduler: SchedulerKind
    capacity_bps: float
    seed: int
    duration_s: float
    period_s: float
    specs: tuple[SensorSpec, ...]
    w: CorrelationMatrix
    n_batches: int
    # one entry per delivery, in delivery order
    sensor: np.ndarray
    gen_time: np.ndarray
    time: np.ndarray
    sample: np.ndarray
    wasted_bits: float = 0.0
    trajectory: Optional[np.ndarray] = None
    events: list[TransportEvent] = field(default_factory=list)

    @property
    def delivered_objects(self) -> int:
        return int(self.sensor.size)

    def batch_index(self) -> np.ndarray:
        return np.rint(self.gen_time / self.period_s).astype(np.int64)


Scenario = Union[V2xConfig, HapticConfig]


def _specs_and_period(scenario: Scenario) -> tuple[tuple[SensorSpec, ...], CorrelationMatrix, float]:
    if isinstance(scenario, HapticConfig):
        return scenario.specs, scenario.w, scenario.tick_s
    return scenario.specs, scenario.w, scenario.period_s


def simulate(
    scenario: Scenario,
    kind: SchedulerKind,
    capacity_bps: float,
    duration_s: float,
    *,
    seed: int = 0,
    mode: LinkMode = LinkMode.FLUID,
    loss_prob: float = 0.0,
    rtt_s: float = 0.02,
    mtu_bits: int = 9600,
    horizon_periods: float = 1.0,
    policy: SupersedePolicy = SupersedePolicy.IF_NOT_STARTED,
    estimator: EstimatorKind = EstimatorKind.ORACLE,
    window_rtts: int = 10,
    trajectory: Optional[np.ndarray] = None,
    keep_events: bool = False,
    check: bool = True,
) -> RunLog:
    """Run one scheduler for ``duration_s`` seconds.

    ``capacity_bps = inf`` is the reference connection: every planned object
    is delivered at its generation time and the budget is the whole batch.
    """
    specs, w, period = _specs_and_period(scenario)
    n_batches = int(round(duration_s / period))
    haptic = isinstance(scenario, HapticConfig)
    if haptic and trajectory is None:
        trajectory = haptic_trajectory(seed, n_batches, scenario)
    infinite = math.isinf(capacity_bps)
    ids = object_ids()
    receiver = ReceiverState.empty(len(specs))
    transport = None
    est = None
    if not infinite:
        link = LinkModel(capacity_bps, rtt_s, loss_prob, mtu_bits, LinkMode(mode))
        est = CapacityEstimator(
            estimator, capacity_bps=capacity_bps, rtt_s=rtt_s, window_rtts=window_rtts
        )
        transport = Transport(link, seed=seed, estimator=est, check=check)
    policy = SupersedePolicy(policy)

    out_s: list[int] = []
    out_g: list[float] = []
    out_t: list[float] = []
    out_v: list[float] = []
    events: list[TransportEvent] = []
    pending: dict[int, Object] = {}

    def deliver(obj: Object, t: float) -> None:
        receiver.record(obj.sensor_id, t, obj.sample_value)
        out_s.append(obj.sensor_id)
        out_g.append(obj.gen_time_s)
        out_t.append(t)
        out_v.append(math.nan if obj.sample_value is None else obj.sample_value)

    for k in range(n_batches):
        t = k * period
        if haptic:
            batch = haptic_batch(t, trajectory[k], scenario, ids)
        else:
            batch = v2x_batch(t, scenario, ids)

        if infinite:
            plan = schedule(kind, batch, receiver, specs, w, batch.total_bits, k, now_s=t)
            by_id = {o.object_id: o for o in batch.objects}
            for oid in plan.object_ids:
                deliver(by_id[oid], t)
            continue

        for o in batch.objects:
            ev = transport.supersede(o.sensor_id, o, policy, t)
            if ev is not None and keep_events:
                events.append(ev)
        candidates = list(batch.objects)
        for obj in transport.withdraw_unstarted():
            candidates.append(obj)
        cap = est.estimate(t)
        if cap is None:
            # no sample yet: probe with the initial window, or one object if none fits in it
            budget = transport.initial_window_bits
            if transport.backlog_bits() == 0 and candidates:
                budget = max(budget, min(o.size_bits for o in candidates))
        else:
            budget = budget_for_batch(cap, period, horizon_periods, transport.backlog_bits())
        plan = schedule(kind, candidates, receiver, specs, w, budget, k, now_s=t)
        transport.enqueue_plan(plan, candidates, t)
        if keep_events:
            planned = set(plan.object_ids)
            for obj in candidates:
                if obj.object_id not in planned and obj.gen_time_s < t:
                    events.append(Superseded(obj.object_id, obj.sensor_id, t))
        pending.update((o.object_id, o) for o in candidates if o.object_id in set(plan.object_ids))
        for ev in transport.advance_until((k + 1) * period):
            if keep_events:
                events.append(ev)
            if isinstance(ev, Delivered):
                deliver(pending.pop(ev.object_id), ev.time_s)
            elif isinstance(ev, Reset):
                pending.pop(ev.object_id, None)
        for oid in [oid for oid in pending if oid not in transport.live]:
            pending.pop(oid)

    return RunLog(
        scheduler=kind,
        capacity_bps=capacity_bps,
        seed=seed,
        duration_s=duration_s,
        period_s=period,
        specs=specs,
        w=w,
        n_batches=n_batches,
        sensor=np.array(out_s, dtype=np.int64),
        gen_time=np.array(out_g, dtype=float),
        time=np.array(out_t, dtype=float),
        sample=np.array(out_v, dtype=float),
        wasted_bits=0.0 if transport is None else transport.counters.wasted_bits,
        trajectory=trajectory,
        events=events,
    )


def fast_path_applies(
    scenario: Scenario,
    *,
    mode: LinkMode = LinkMode.FLUID,
    horizon_periods: float = 1.0,
    estimator: EstimatorKind = EstimatorKind.ORACLE,
) -> bool:
    return (
        isinstance(scenario, HapticConfig)
        and LinkMode(mode) is LinkMode.FLUID
        and horizon_periods == 1.0
        and EstimatorKind(estimator) is EstimatorKind.ORACLE
    )


def simulate_haptic_fast(
    cfg: HapticConfig,
    kind: SchedulerKind,
    capacity_bps: float,
    duration_s: float,
    *,
    seed: int = 0,
    trajectory: Optional[np.ndarray] = None,
    exact_threshold: int = qkp.EXACT_THRESHOLD,
) -> RunLog:
    n_ticks = int(round(duration_s / cfg.tick_s))
    if trajectory is None:
        trajectory = haptic_trajectory(seed, n_ticks, cfg)
    sensor, gen_tick, time, sample = kernels.scalar_tick_run(
        trajectory,
        KIND_CODES[kind],
        float(capacity_bps),
        cfg.tick_s,
        cfg.sample_bits,
        np.full(cfg.n, cfg.intrinsic_value),
        cfg.sigma,
        cfg.center_sigmas,
        cfg.sharpness,
        exact_threshold,
        qkp.MAX_LOCAL_SEARCH_ITERS,
    )
    return RunLog(
        scheduler=kind,
        capacity_bps=capacity_bps,
        seed=seed,
        duration_s=duration_s,
        period_s=cfg.tick_s,
        specs=cfg.specs,
        w=cfg.w,
        n_batches=n_ticks,
        sensor=sensor,
        gen_time=gen_tick * cfg.tick_s,
        time=time,
        sample=sample,
        trajectory=trajectory,
    )


def delivery_trace_rows(log: RunLog) -> list[tuple[float, str, int, int, int]]:
    """(time_s, event, object_id, sensor_id, stream_id) rows for the trace CSV."""
    if log.events:
        return [
            (ev.time_s, ev.name, ev.object_id, ev.sensor_id, -1 if ev.stream_id is None else ev.stream_id)
            for ev in log.events
        ]
    # fast path: objects of one tick are numbered by sensor and streams by plan slot
    n = len(log.specs)
    gen_tick = log.batch_index()
    rows = []
    slot = 0
    prev = -1
    for s, g, t in zip(log.sensor.tolist(), gen_tick.tolist(), log.time.tolist()):
        slot = slot + 1 if g == prev else 0
        prev = g
        rows.append((t, "delivered", g * n + s, s, slot))
    return rows
