"""Discrete-time model of a multiplexed, stream-per-object connection.

One bottleneck link serves the send queue in plan order. Every object gets
its own stream; a stream becomes reusable once its object is delivered, or
one RTT after it was reset. In packet mode objects are cut into MTU-sized
packets and a lost packet only delays its own stream.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import DomainError, Object
from .sched import TransmissionPlan

TIME_EPS = 1e-9
DEFAULT_MTU_BITS = 9600


class LinkMode(str, enum.Enum):
    FLUID = "fluid"
    PACKET = "packet"


class SupersedePolicy(str, enum.Enum):
    ALWAYS = "always"
    IF_NOT_STARTED = "if_not_started"
    NEVER = "never"


@dataclass(frozen=True)
class LinkModel:
    """Bottleneck link. Fluid mode ignores ``loss_prob`` and ``mtu_bits``."""

    capacity_bps: float
    rtt_s: float = 0.02
    loss_prob: float = 0.0
    mtu_bits: int = DEFAULT_MTU_BITS
    mode: LinkMode = LinkMode.FLUID

    def __post_init__(self) -> None:
        if not self.capacity_bps > 0:
            raise DomainError(f"capacity must be positive, got {self.capacity_bps}")
        if not self.rtt_s > 0:
            raise DomainError(f"rtt must be positive, got {self.rtt_s}")
        if not 0.0 <= self.loss_prob < 1.0:
            raise DomainError(f"loss_prob must be in [0, 1), got {self.loss_prob}")
        if self.mtu_bits <= 0:
            raise DomainError(f"mtu_bits must be positive, got {self.mtu_bits}")


# -- events -------------------------------------------------------------------


@dataclass(frozen=True)
class Delivered:
    object_id: int
    sensor_id: int
    stream_id: int
    time_s: float

    name = "delivered"


@dataclass(frozen=True)
class Reset:
    object_id: int
    sensor_id: int
    stream_id: int
    time_s: float

    name = "reset"


@dataclass(frozen=True)
class Superseded:
    """A reading replaced by a newer one before it was ever sent."""

    object_id: int
    sensor_id: int
    time_s: float
    stream_id: Optional[int] = None

    name = "superseded"


TransportEvent = Union[Delivered, Reset, Superseded]


# -- streams ------------------------------------------------------------------


class StreamState(str, enum.Enum):
    IDLE = "idle"
    ACTIVE = "active"
    RESETTING = "resetting"


@dataclass
class StreamEntry:
    state: StreamState = StreamState.IDLE
    object_id: Optional[int] = None
    bits_acked: float = 0.0
    idle_at: float = 0.0


class StreamTable:
    def __init__(self) -> None:
        self.entries: list[StreamEntry] = []
        self._by_object: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def state(self, stream_id: int) -> StreamState:
        return self.entries[stream_id].state

    def refresh(self, now_s: float) -> None:
        for e in self.entries:
            if e.state is StreamState.RESETTING and e.idle_at <= now_s + TIME_EPS:
                e.state, e.object_id, e.bits_acked = StreamState.IDLE, None, 0.0

    def bind(self, object_id: int, now_s: float) -> int:
        if object_id in self._by_object:
            raise DomainError(f"object {object_id} already holds stream {self._by_object[object_id]}")
        self.refresh(now_s)
        for sid, e in enumerate(self.entries):
            if e.state is StreamState.IDLE:
                break
        else:
            self.entries.append(StreamEntry())
            sid = len(self.entries) - 1
        e = self.entries[sid]
        e.state, e.object_id, e.bits_acked = StreamState.ACTIVE, object_id, 0.0
        self._by_object[object_id] = sid
        return sid

    def release(self, stream_id: int) -> None:
        e = self.entries[stream_id]
        self._by_object.pop(e.object_id, None)
        e.state, e.object_id, e.bits_acked = StreamState.IDLE, None, 0.0

    def reset(self, stream_id: int, now_s: float, rtt_s: float) -> None:
        e = self.entries[stream_id]
        self._by_object.pop(e.object_id, None)
        e.state, e.idle_at = StreamState.RESETTING, now_s + rtt_s

    def stream_of(self, object_id: int) -> Optional[int]:
        return self._by_object.get(object_id)

    def check(self) -> None:
        seen = set()
        for e in self.entries:
            if e.state is StreamState.ACTIVE:
                assert e.object_id is not None and e.object_id not in seen
                seen.add(e.object_id)


# -- capacity estimation ------------------------------------------------------


class EstimatorKind(str, enum.Enum):
    ORACLE = "oracle"
    BBR = "bbr"


class CapacityEstimator:
    """Oracle, or a windowed max of per-RTT delivery-rate samples.

    A sample is the bits acknowledged within one RTT-aligned interval divided
    by the time the link was busy in it, so app-limited intervals still
    measure the bottleneck rate rather than the offered load.
    """

    def __init__(
        self,
        kind: EstimatorKind | str = EstimatorKind.ORACLE,
        *,
        capacity_bps: Optional[float] = None,
        rtt_s: float = 0.02,
        window_rtts: int = 10,
    ) -> None:
        self.kind = EstimatorKind(kind)
        if window_rtts <= 0:
            raise DomainError("window_rtts must be positive")
        if self.kind is EstimatorKind.ORACLE and capacity_bps is None:
            raise DomainError("the oracle estimator needs the true capacity")
        self.capacity_bps = capacity_bps
        self.rtt_s = rtt_s
        self.window_rtts = window_rtts
        self._acked: dict[int, float] = {}
        self._busy: dict[int, float] = {}
        self.samples: deque[tuple[int, float]] = deque()
        self._closed = -1

    def credit(self, t0: float, t1: float, acked_bits: float) -> None:
        """Record the link busy over [t0, t1] with ``acked_bits`` acknowledged."""
        if t1 <= t0:
            return
        span = t1 - t0
        k0 = int(math.floor(t0 / self.rtt_s))
        k1 = int(math.floor(t1 / self.rtt_s))
        for k in range(k0, k1 + 1):
            lo = max(t0, k * self.rtt_s)
            hi = min(t1, (k + 1) * self.rtt_s)
            if hi <= lo:
                continue
            frac = (hi - lo) / span
            self._busy[k] = self._busy.get(k, 0.0) + (hi - lo)
            self._acked[k] = self._acked.get(k, 0.0) + acked_bits * frac

    def close_until(self, now_s: float) -> None:
        last_done = int(math.floor(now_s / self.rtt_s + TIME_EPS)) - 1
        for k in sorted(b for b in self._busy if self._closed < b <= last_done):
            busy = self._busy.pop(k)
            acked = self._acked.pop(k, 0.0)
            if busy > 0 and acked > 0:
                self.samples.append((k, acked / busy))
        self._closed = max(self._closed, last_done)
        while self.samples and self.samples[0][0] < last_done - self.window_rtts + 1:
            self.samples.popleft()

    def estimate(self, now_s: float) -> Optional[float]:
        if self.kind is EstimatorKind.ORACLE:
            return self.capacity_bps
        self.close_until(now_s)
        if not self.samples:
            return None
        return max(rate for _, rate in self.samples)


def estimate_capacity(est: CapacityEstimator, now_s: float) -> Optional[float]:
    return est.estimate(now_s)


def budget_for_batch(
    est_capacity_bps: float, period_s: float, horizon_periods: float, backlog_bits: int
) -> int:
    """Bits admissible for the next batch: horizon capacity minus backlog."""
    if est_capacity_bps < 0 or period_s < 0 or backlog_bits < 0:
        raise DomainError("budget inputs must be non-negative")
    if horizon_periods < 1:
        raise DomainError(f"horizon_periods must be >= 1, got {horizon_periods}")
    if math.isinf(est_capacity_bps):
        raise DomainError("infinite capacity has no finite budget")
    room = math.floor(est_capacity_bps * period_s * horizon_periods + 1e-9)
    return max(0, int(room) - int(backlog_bits))


# -- the connection -----------------------------------------------------------


@dataclass
class _Flight:
    obj: Object
    stream_id: int
    enqueued_s: float
    tx_bits: float = 0.0  # everything serialized for it, retransmissions included
    # packet mode
    next_packet: int = 0
    n_packets: int = 0
    outstanding: int = 0
    complete: bool = False
    aborted: bool = False

    @property
    def started(self) -> bool:
        return self.tx_bits > 0


@dataclass
class TransportCounters:
    enqueued_bits: int = 0
    delivered_bits: int = 0
    aborted_bits: int = 0
    wasted_bits: float = 0.0
    overhead_bits: float = 0.0
    serialized_bits: float = 0.0
    delivered_objects: int = 0
    reset_objects: int = 0


class Transport:
    """A single connection; owned by one simulation run."""

    def __init__(
        self,
        link: LinkModel,
        *,
        seed: Optional[int] = None,
        estimator: Optional[CapacityEstimator] = None,
        start_s: float = 0.0,
        check: bool = True,
    ) -> None:
        self.link = link
        self.now_s = start_s
        self.start_s = start_s
        self.streams = StreamTable()
        self.queue: list[_Flight] = []
        self.live: dict[int, _Flight] = {}
        self.counters = TransportCounters()
        self.estimator = estimator
        self.check_enabled = check
        self._rng = np.random.default_rng(seed)
        self._link_free = start_s
        self._retx: list[tuple[float, int, _Flight, int]] = []
        self._pending: list[tuple[float, int, TransportEvent]] = []
        self._seq = itertools.count()

    # -- queries --------------------------------------------------------------

    @property
    def capacity_bps(self) -> float:
        return self.link.capacity_bps

    @property
    def initial_window_bits(self) -> int:
        # budget before the estimator has a sample, like a 10-packet initial window
        return 10 * self.link.mtu_bits

    def backlog_bits(self) -> int:
        """Bits of live objects still to be serialized, rounded up."""
        total = 0.0
        for f in self.live.values():
            if not f.complete:
                total += max(0.0, f.obj.size_bits - self._first_tx_bits(f))
        return int(math.ceil(total - 1e-6)) if total > 1e-6 else 0

    def queued_bits(self) -> int:
        return sum(f.obj.size_bits for f in self.live.values())

    def pending_objects(self) -> list[Object]:
        return [f.obj for f in self.live.values()]

    def _first_tx_bits(self, f: _Flight) -> float:
        if self.link.mode is LinkMode.FLUID:
            return f.tx_bits
        return float(min(f.next_packet * self.link.mtu_bits, f.obj.size_bits))

    # -- operations -----------------------------------------------------------

    def enqueue_plan(
        self,
        plan: TransmissionPlan,
        objects: Mapping[int, Object] | Sequence[Object],
        now_s: Optional[float] = None,
    ) -> list[int]:
        """Bind each planned object to a stream and append it to the send queue."""
        now = self.now_s if now_s is None else now_s
        lookup = objects if isinstance(objects, Mapping) else {o.object_id: o for o in objects}
        if len(set(plan.object_ids)) != len(plan.object_ids):
            raise DomainError("plan lists an object twice")
        for oid in plan.object_ids:
            if oid in self.live:
                raise DomainError(f"object {oid} is already in flight")
        stream_ids = []
        for oid in plan.object_ids:
            obj = lookup[oid]
            sid = self.streams.bind(oid, now)
            f = _Flight(obj, sid, now)
            if self.link.mode is LinkMode.PACKET:
                f.n_packets = f.outstanding = -(-obj.size_bits // self.link.mtu_bits)
            self.queue.append(f)
            self.live[oid] = f
            self.counters.enqueued_bits += obj.size_bits
            stream_ids.append(sid)
        return stream_ids

    def supersede(
        self,
        sensor_id: int,
        new_object: Object,
        policy: SupersedePolicy | str = SupersedePolicy.IF_NOT_STARTED,
        now_s: Optional[float] = None,
    ) -> Optional[Reset]:
        """Abort older objects of ``sensor_id`` according to ``policy``."""
        if new_object.sensor_id != sensor_id:
            raise DomainError("new object belongs to a different sensor")
        policy = SupersedePolicy(policy)
        if policy is SupersedePolicy.NEVER:
            return None
        now = self.now_s if now_s is None else now_s
        event = None
        for f in list(self.live.values()):
            if f.obj.sensor_id != sensor_id or f.complete or f.obj.object_id == new_object.object_id:
                continue
            if f.obj.gen_time_s >= new_object.gen_time_s:
                continue
            if policy is SupersedePolicy.IF_NOT_STARTED and f.started:
                continue
            event = self._abort(f, now)
        return event

    def withdraw_unstarted(self) -> list[Object]:
        """Take back queued objects that have not sent a bit, for re-planning."""
        out = []
        for f in list(self.live.values()):
            if f.started or f.complete:
                continue
            del self.live[f.obj.object_id]
            self.queue.remove(f)
            self.streams.release(f.stream_id)
            self.counters.enqueued_bits -= f.obj.size_bits
            out.append(f.obj)
        return out

    def _abort(self, f: _Flight, now: float) -> Reset:
        f.aborted = True
        del self.live[f.obj.object_id]
        if f in self.queue:
            self.queue.remove(f)
        self.streams.reset(f.stream_id, now, self.link.rtt_s)
        c = self.counters
        c.aborted_bits += f.obj.size_bits
        c.wasted_bits += f.tx_bits
        c.reset_objects += 1
        return Reset(f.obj.object_id, f.obj.sensor_id, f.stream_id, now)

    def advance(self, dt_s: float) -> list[TransportEvent]:
        if not dt_s > 0:
            raise DomainError(f"dt_s must be positive, got {dt_s}")
        return self.advance_until(self.now_s + dt_s)

    def advance_until(self, horizon: float) -> list[TransportEvent]:
        """Run the link up to absolute time ``horizon``; returns due events."""
        start = self.now_s
        dt_s = horizon - start
        if not dt_s > 0:
            raise DomainError(f"horizon {horizon} is not after the current time {start}")
        before = self.counters.serialized_bits
        if self.link.mode is LinkMode.FLUID:
            self._advance_fluid(horizon)
        else:
            self._advance_packet(horizon)
        events = []
        while self._pending and self._pending[0][0] <= horizon + TIME_EPS:
            _, _, ev = heapq.heappop(self._pending)
            events.append(self._release(ev))
        self.now_s = horizon
        self.streams.refresh(horizon)
        if self.check_enabled:
            drained = self.counters.serialized_bits - before
            assert drained <= self.capacity_bps * dt_s + self.link.mtu_bits + 1e-6, (
                f"link drained {drained} bits in {dt_s}s"
            )
            self.check_invariants()
        return events

    def _release(self, ev: TransportEvent) -> TransportEvent:
        if isinstance(ev, Delivered):
            f = self.live.pop(ev.object_id)
            self.streams.release(f.stream_id)
            c = self.counters
            c.delivered_bits += f.obj.size_bits
            c.overhead_bits += f.tx_bits - f.obj.size_bits
            c.delivered_objects += 1
        return ev

    def _schedule_delivery(self, f: _Flight, t: float) -> None:
        f.complete = True
        ev = Delivered(f.obj.object_id, f.obj.sensor_id, f.stream_id, t)
        heapq.heappush(self._pending, (t, next(self._seq), ev))

    def _advance_fluid(self, horizon: float) -> None:
        c = self.link.capacity_bps
        cur = max(self.now_s, self._link_free)
        while self.queue and cur < horizon - TIME_EPS:
            f = self.queue[0]
            remaining = f.obj.size_bits - f.tx_bits
            t_done = cur + remaining / c
            if t_done <= horizon + TIME_EPS:
                self._drain(f, cur, t_done, remaining)
                f.tx_bits = float(f.obj.size_bits)
                self.queue.pop(0)
                self._schedule_delivery(f, t_done)
                cur = t_done
            else:
                part = (horizon - cur) * c
                self._drain(f, cur, horizon, part)
                f.tx_bits += part
                cur = horizon
        self._link_free = cur

    def _drain(self, f: _Flight, t0: float, t1: float, bits: float) -> None:
        self.counters.serialized_bits += bits
        e = self.streams.entries[f.stream_id]
        e.bits_acked += bits
        if self.estimator is not None:
            self.estimator.credit(t0, t1, bits)

    def _next_fresh(self) -> Optional[_Flight]:
        for f in self.queue:
            if f.next_packet < f.n_packets:
                return f
        return None

    def _advance_packet(self, horizon: float) -> None:
        c = self.link.capacity_bps
        mtu = self.link.mtu_bits
        while True:
            t = max(self.now_s, self._link_free)
            while self._retx and self._retx[0][2].aborted:
                heapq.heappop(self._retx)
            fresh = None
            if not (self._retx and self._retx[0][0] <= t + TIME_EPS):
                fresh = self._next_fresh()
                if fresh is None:
                    if not self._retx:
                        break
                    t = max(t, self._retx[0][0])
            if t >= horizon - TIME_EPS:
                break
            if fresh is None:
                _, _, f, bits = heapq.heappop(self._retx)
            else:
                f = fresh
                bits = min(mtu, f.obj.size_bits - f.next_packet * mtu)
                f.next_packet += 1
            end = t + bits / c
            self._link_free = end
            f.tx_bits += bits
            self.counters.serialized_bits += bits
            lost = self.link.loss_prob > 0 and self._rng.random() < self.link.loss_prob
            if self.estimator is not None:
                self.estimator.credit(t, end, 0.0 if lost else bits)
            if lost:
                heapq.heappush(self._retx, (t + self.link.rtt_s, next(self._seq), f, bits))
            else:
                self.streams.entries[f.stream_id].bits_acked += bits
                f.outstanding -= 1
                if f.outstanding == 0:
                    self._schedule_delivery(f, end)
            if f.next_packet >= f.n_packets and f in self.queue:
                # every packet is out; only retransmissions remain
                self.queue.remove(f)

    # -- invariants -----------------------------------------------------------

    def check_invariants(self) -> None:
        c = self.counters
        queued = self.queued_bits()
        assert c.enqueued_bits == c.delivered_bits + c.aborted_bits + queued, (
            "bit conservation violated"
        )
        in_flight_tx = sum(f.tx_bits for f in self.live.values())
        assert math.isclose(
            c.serialized_bits,
            c.delivered_bits + c.overhead_bits + c.wasted_bits + in_flight_tx,
            rel_tol=1e-9,
            abs_tol=1e-3,
        ), "link accounting violated"
        elapsed = max(self._link_free, self.now_s) - self.start_s
        assert c.serialized_bits <= self.capacity_bps * elapsed + self.link.mtu_bits + 1e-3, (
            "link exceeded capacity"
        )
        self.streams.check()
