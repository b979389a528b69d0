import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voisched.core import (
    AlwaysOne,
    Batch,
    ConfigurationError,
    CorrelationMatrix,
    DomainError,
    Exponential,
    Object,
    ReceiverState,
    SensorSpec,
)
from voisched.qkp import QkpInstance, solve_exact
from voisched.scenarios import v2x_batch, v2x_defaults, object_ids
from voisched.sched import (
    EMPTY_PLAN,
    SchedulerKind,
    arrival_order,
    plan_value,
    schedule,
)

K = SchedulerKind
V2X = v2x_defaults()


def _first_batch():
    return v2x_batch(0.0, V2X, object_ids())


def test_parse_aliases():
    assert K.parse("CrossSensorVoi") is K.CROSS_SENSOR_VOI
    assert K.parse("voi-only") is K.VOI_ONLY
    assert K.parse("EST") is K.EST
    with pytest.raises(ValueError):
        K.parse("random")


def test_arrival_order_rotates():
    objs = [Object(i, i, 0.0, 8) for i in range(5)]
    assert [o.sensor_id for o in arrival_order(objs, 0, 5)] == [0, 1, 2, 3, 4]
    assert [o.sensor_id for o in arrival_order(objs, 7, 5)] == [2, 3, 4, 0, 1]


def test_fifo_skips_what_does_not_fit():
    batch = _first_batch()
    plan = schedule(K.FIFO, batch, ReceiverState.empty(5), V2X.specs, V2X.w, 3_000_000, 0)
    # f (1.44M) fits, r fits (2.88M), the rest would overflow
    assert [batch.objects[i].object_id for i in (0, 1)] == list(plan.object_ids)
    # tick 4 puts the LiDAR first; it is skipped and f, r, lft fill 4.0 Mbit exactly
    plan = schedule(K.FIFO, batch, ReceiverState.empty(5), V2X.specs, V2X.w, 4_000_000, 4)
    assert plan.object_ids == tuple(batch.objects[i].object_id for i in (0, 1, 2))
    assert plan.planned_bits == 4_000_000


@pytest.mark.parametrize("kind", list(K))
@pytest.mark.parametrize("budget", [0, 1_000_000, 5_000_000, 12_000_000, 20_000_000])
def test_plans_respect_budget(kind, budget):
    plan = schedule(kind, _first_batch(), ReceiverState.empty(5), V2X.specs, V2X.w, budget, 3)
    assert plan.planned_bits <= budget
    assert len(set(plan.object_ids)) == len(plan.object_ids)
    if budget == 0:
        assert plan == EMPTY_PLAN


def test_cross_sensor_skips_lidar_when_everything_fits():
    batch = _first_batch()
    plan = schedule(K.CROSS_SENSOR_VOI, batch, ReceiverState.empty(5), V2X.specs, V2X.w, batch.total_bits, 0)
    lidar = batch.objects[4].object_id
    assert lidar not in plan.object_ids
    assert plan.planned_objective == pytest.approx(2.35)
    voi = schedule(K.VOI_ONLY, batch, ReceiverState.empty(5), V2X.specs, V2X.w, batch.total_bits, 0)
    assert lidar in voi.object_ids


def test_plan_is_ordered_by_value_density():
    batch = _first_batch()
    plan = schedule(K.VOI_ONLY, batch, ReceiverState.empty(5), V2X.specs, V2X.w, batch.total_bits, 0)
    by_id = {o.object_id: o for o in batch.objects}
    dens = [V2X.specs[by_id[i].sensor_id].intrinsic_value / by_id[i].size_bits for i in plan.object_ids]
    assert dens == sorted(dens, reverse=True)


def test_est_uses_receiver_state():
    batch = v2x_batch(1.0, V2X, object_ids())
    rx = ReceiverState.empty(5)
    for s in range(4):
        rx.record(s, 0.99)  # cameras are fresh, LiDAR never delivered
    plan = schedule(K.EST, batch, rx, V2X.specs, V2X.w, 10_400_000, 10)
    assert plan.object_ids == (batch.objects[4].object_id,)


def test_plan_value_matches_objective_for_fifo():
    batch = _first_batch()
    rx = ReceiverState.empty(5)
    plan = schedule(K.FIFO, batch, rx, V2X.specs, V2X.w, batch.total_bits, 0)
    assert plan_value(plan.object_ids, batch.objects, rx, V2X.specs, V2X.w, 0.0) == plan.planned_objective


def test_errors():
    with pytest.raises(DomainError):
        schedule(K.FIFO, _first_batch(), ReceiverState.empty(5), V2X.specs, V2X.w, -1, 0)
    with pytest.raises(ConfigurationError):
        schedule(K.FIFO, [Object(0, 9, 0.0, 8)], ReceiverState.empty(5), V2X.specs, V2X.w, 100, 0)


# -- equivalences on random batches ------------------------------------------------


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 8))
    values = draw(st.lists(st.floats(0.05, 1), min_size=n, max_size=n))
    sizes = draw(st.lists(st.integers(1, 40), min_size=n, max_size=n))
    w = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = draw(st.sampled_from([0.0, 0.2, 0.5, 0.9]))
    last = draw(st.lists(st.one_of(st.none(), st.floats(0, 0.9)), min_size=n, max_size=n))
    budget = draw(st.integers(0, 150))
    tick = draw(st.integers(0, 20))
    return values, sizes, CorrelationMatrix(w), last, budget, tick


def _setup(values, sizes, last, model):
    specs = tuple(SensorSpec(i, f"s{i}", sizes[i], values[i], model, 0.1) for i in range(len(values)))
    rx = ReceiverState.empty(len(values))
    for i, t in enumerate(last):
        if t is not None:
            rx.record(i, t)
    batch = Batch(1.0, tuple(Object(i, i, 1.0, sizes[i]) for i in range(len(values))))
    return specs, rx, batch


@settings(max_examples=150)
@given(scenarios())
def test_est_equals_voi_only_without_correlation_and_gain(case):
    values, sizes, _, last, budget, tick = case
    specs, rx, batch = _setup(values, sizes, last, AlwaysOne())
    w = CorrelationMatrix.identity(len(values))
    a = schedule(K.EST, batch, rx, specs, w, budget, tick)
    b = schedule(K.VOI_ONLY, batch, rx, specs, w, budget, tick)
    assert set(a.object_ids) == set(b.object_ids)


@settings(max_examples=150)
@given(scenarios())
def test_est_equals_cross_sensor_with_unit_gain(case):
    values, sizes, w, last, budget, tick = case
    specs, rx, batch = _setup(values, sizes, last, AlwaysOne())
    a = schedule(K.EST, batch, rx, specs, w, budget, tick)
    b = schedule(K.CROSS_SENSOR_VOI, batch, rx, specs, w, budget, tick)
    assert a.object_ids == b.object_ids


@settings(max_examples=150)
@given(scenarios())
def test_qkp_schedulers_are_optimal_for_their_objective(case):
    values, sizes, w, last, budget, tick = case
    specs, rx, batch = _setup(values, sizes, last, Exponential(0.2))
    plan = schedule(K.CROSS_SENSOR_VOI, batch, rx, specs, w, budget, tick)
    p = np.array(values)
    q = w.w * np.minimum.outer(p, p)
    np.fill_diagonal(q, 0.0)
    best = solve_exact(QkpInstance(p, q, sizes, budget))
    assert plan.planned_objective == pytest.approx(best.objective, abs=1e-12)
