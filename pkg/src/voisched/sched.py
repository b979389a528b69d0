"""The four scheduler policies.

Each maps the pending objects, the receiver's state and a bit budget to an
ordered transmission plan. Objects are considered in arrival order, which
for a simultaneous batch is sensor-index order rotated by the tick index;
the QKP-based schedulers build their instance in that same order, so index
ties inside the solvers resolve exactly as FIFO would.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qkp
from .core import (
    Batch,
    ConfigurationError,
    CorrelationMatrix,
    DomainError,
    Object,
    ReceiverState,
    SensorSpec,
    discount_matrix,
    effective_voi,
    joint_voi,
)


class SchedulerKind(str, enum.Enum):
    FIFO = "fifo"
    VOI_ONLY = "voi"
    CROSS_SENSOR_VOI = "cross_voi"
    EST = "est"

    @classmethod
    def parse(cls, name: str) -> "SchedulerKind":
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "fifo": cls.FIFO,
            "voi": cls.VOI_ONLY,
            "voi_only": cls.VOI_ONLY,
            "voionly": cls.VOI_ONLY,
            "cross_voi": cls.CROSS_SENSOR_VOI,
            "cross_sensor_voi": cls.CROSS_SENSOR_VOI,
            "crosssensorvoi": cls.CROSS_SENSOR_VOI,
            "est": cls.EST,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scheduler {name!r}") from None


KIND_CODES = {
    SchedulerKind.FIFO: 0,
    SchedulerKind.VOI_ONLY: 1,
    SchedulerKind.CROSS_SENSOR_VOI: 2,
    SchedulerKind.EST: 3,
}


@dataclass(frozen=True)
class TransmissionPlan:
    object_ids: tuple[int, ...]
    planned_bits: int
    planned_objective: float

    def __len__(self) -> int:
        return len(self.object_ids)


EMPTY_PLAN = TransmissionPlan((), 0, 0.0)


def arrival_order(objects: Sequence[Object], tick_index: int, n_sensors: int) -> list[Object]:
    """Sensor-index order rotated so sensor ``tick_index mod n`` comes first."""
    rot = tick_index % n_sensors if n_sensors else 0
    return sorted(objects, key=lambda o: ((o.sensor_id - rot) % n_sensors, o.object_id))


def profits(
    kind: SchedulerKind,
    objects: Sequence[Object],
    receiver: ReceiverState,
    specs: Sequence[SensorSpec],
    now_s: float,
) -> np.ndarray:
    if kind is SchedulerKind.EST:
        return np.array(
            [effective_voi(specs[o.sensor_id], receiver, o, now_s) for o in objects]
        )
    return np.array([specs[o.sensor_id].intrinsic_value for o in objects], dtype=float)


def schedule(
    kind: SchedulerKind,
    batch: Batch | Sequence[Object],
    receiver: ReceiverState,
    specs: Sequence[SensorSpec],
    w: CorrelationMatrix,
    budget_bits: int,
    tick_index: int,
    now_s: float | None = None,
    exact_threshold: int = qkp.EXACT_THRESHOLD,
) -> TransmissionPlan:
    if budget_bits < 0:
        raise DomainError(f"budget must be >= 0, got {budget_bits}")
    objects = list(batch.objects if isinstance(batch, Batch) else batch)
    for o in objects:
        if not 0 <= o.sensor_id < len(specs):
            raise ConfigurationError(f"object {o.object_id} has unknown sensor {o.sensor_id}")
    if budget_bits == 0 or not objects:
        return EMPTY_PLAN
    if now_s is None:
        now_s = max(o.gen_time_s for o in objects)
    ordered = arrival_order(objects, tick_index, len(specs))

    if kind is SchedulerKind.FIFO:
        picked, used = [], 0
        for o in ordered:
            if used + o.size_bits <= budget_bits:
                picked.append(o)
                used += o.size_bits
        values = [
            effective_voi(specs[o.sensor_id], receiver, o, now_s) for o in picked
        ]
        sids = [o.sensor_id for o in picked]
        objective = joint_voi(values, range(len(picked)), _sub_w(w, sids))
        return TransmissionPlan(tuple(o.object_id for o in picked), used, objective)

    p = profits(kind, ordered, receiver, specs, now_s)
    sids = [o.sensor_id for o in ordered]
    if kind is SchedulerKind.VOI_ONLY:
        q = None
    else:
        q = discount_matrix(p, w.w[np.ix_(sids, sids)])
    inst = qkp.QkpInstance(p, q, [o.size_bits for o in ordered], budget_bits)
    sel = qkp.solve(inst, exact_threshold)
    chosen = sorted(sel.chosen, key=lambda i: (-(p[i] / inst.sizes[i]), i))
    return TransmissionPlan(
        tuple(ordered[i].object_id for i in chosen), sel.total_size_bits, sel.objective
    )


def _sub_w(w: CorrelationMatrix, sids: Sequence[int]) -> CorrelationMatrix:
    if not sids:
        return CorrelationMatrix.identity(1)
    return CorrelationMatrix(w.w[np.ix_(sids, sids)])


def plan_value(
    object_ids: Sequence[int],
    objects: Sequence[Object],
    receiver: ReceiverState,
    specs: Sequence[SensorSpec],
    w: CorrelationMatrix,
    now_s: float,
) -> float:
    """Joint value of a plan's objects with full temporal gains at ``now_s``."""
    by_id = {o.object_id: o for o in objects}
    chosen = [by_id[i] for i in object_ids]
    values = [effective_voi(specs[o.sensor_id], receiver, o, now_s) for o in chosen]
    if not chosen:
        return 0.0
    return joint_voi(values, range(len(chosen)), _sub_w(w, [o.sensor_id for o in chosen]))
