import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voisched.core import (
    INF,
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
    discount_matrix,
    effective_voi,
    joint_voi,
    update_gain,
)
from voisched.scenarios import v2x_defaults

from oracles import exp_gain, joint_value, logistic_gain

HAPTIC_GAIN = DifferenceLogistic(0.0215, 1.65, 10.0)


def test_exponential_examples():
    assert update_gain(Exponential(0.2), 0.0) == 0.0
    assert update_gain(Exponential(0.2), 0.2) == pytest.approx(0.6321, abs=1e-4)


def test_difference_logistic_examples():
    assert update_gain(HAPTIC_GAIN, 1.65 * 0.0215) == pytest.approx(0.5, abs=1e-12)
    assert update_gain(HAPTIC_GAIN, 0.05) == pytest.approx(0.9988, abs=1e-4)


def test_step_and_sigmoid():
    assert update_gain(Step(0.1), 0.05) == 0.0
    assert update_gain(Step(0.1), 0.1) == 1.0
    assert update_gain(Sigmoid(0.1, 50.0), 0.1) == pytest.approx(0.5)
    assert update_gain(AlwaysOne(), 0.0) == 1.0


@pytest.mark.parametrize("model", [Exponential(0.2), Step(0.1), Sigmoid(0.1, 5), HAPTIC_GAIN, AlwaysOne()])
def test_sentinel_means_full_gain(model):
    assert update_gain(model, INF) == 1.0


@pytest.mark.parametrize("bad", [-1e-9, -1.0, math.nan])
def test_negative_argument_rejected(bad):
    with pytest.raises(DomainError):
        update_gain(Exponential(0.2), bad)


@pytest.mark.parametrize("ctor", [lambda: Exponential(0), lambda: Step(-1), lambda: Sigmoid(0.1, 0), lambda: DifferenceLogistic(0, 1, 1)])
def test_model_parameters_validated(ctor):
    with pytest.raises(DomainError):
        ctor()


models = st.one_of(
    st.builds(Exponential, st.floats(0.01, 5)),
    st.builds(Step, st.floats(0.01, 5)),
    st.builds(Sigmoid, st.floats(0.01, 5), st.floats(0.1, 50)),
    st.builds(DifferenceLogistic, st.floats(0.001, 1), st.floats(0.1, 5), st.floats(0.1, 20)),
    st.just(AlwaysOne()),
)


@given(models, st.floats(0, 100), st.floats(0, 100))
def test_gain_monotone_and_bounded(model, a, b):
    lo, hi = sorted((a, b))
    g_lo, g_hi = update_gain(model, lo), update_gain(model, hi)
    assert 0.0 <= g_lo <= 1.0 and 0.0 <= g_hi <= 1.0
    assert g_lo <= g_hi
    assert g_hi <= update_gain(model, INF)


@given(st.floats(0, 10), st.floats(0.01, 5))
def test_exponential_matches_formula(dt, tau):
    assert update_gain(Exponential(tau), dt) == pytest.approx(exp_gain(dt, tau), rel=1e-12, abs=1e-15)


@given(st.floats(0, 1))
def test_logistic_matches_formula(d):
    assert update_gain(HAPTIC_GAIN, d) == pytest.approx(logistic_gain(d, 0.0215, 1.65, 10), rel=1e-12, abs=1e-300)


# -- effective value ------------------------------------------------------------


def _spec(model=Exponential(0.2), value=0.9, sid=0):
    return SensorSpec(sid, "s", 100, value, model, 0.1)


def test_effective_voi_examples():
    rx = ReceiverState.empty(1)
    obj = Object(0, 0, 1.0, 100)
    assert effective_voi(_spec(value=1.0), rx, obj, 1.0) == 1.0
    rx.record(0, 0.9)
    assert effective_voi(_spec(), rx, obj, 1.0) == pytest.approx(0.3541, abs=1e-4)
    assert effective_voi(_spec(AlwaysOne(), 1.0), rx, obj, 1.0) == 1.0


def test_effective_voi_uses_sample_difference():
    rx = ReceiverState.empty(1)
    rx.record(0, 0.0, 0.5)
    obj = Object(0, 0, 0.001, 32, 0.5 + 0.05)
    assert effective_voi(_spec(HAPTIC_GAIN, 1.0), rx, obj, 0.001) == pytest.approx(0.9988, abs=1e-4)


def test_effective_voi_errors():
    rx = ReceiverState.empty(1)
    with pytest.raises(ConfigurationError):
        effective_voi(_spec(HAPTIC_GAIN), rx, Object(0, 0, 0.0, 32), 0.0)
    with pytest.raises(DomainError):
        effective_voi(_spec(), rx, Object(0, 0, 1.0, 32), 0.5)


def test_sensor_spec_validation():
    with pytest.raises(DomainError):
        SensorSpec(0, "x", 0, 0.5, AlwaysOne(), 0.1)
    with pytest.raises(DomainError):
        SensorSpec(0, "x", 10, 1.5, AlwaysOne(), 0.1)
    assert SensorSpec(0, "x", 10, 0.5, HAPTIC_GAIN, 0.1).is_scalar


def test_batch_rejects_duplicate_sensor():
    with pytest.raises(DomainError):
        Batch(0.0, (Object(0, 1, 0.0, 8), Object(1, 1, 0.0, 8)))
    assert Batch(0.0, (Object(0, 0, 0.0, 8), Object(1, 1, 0.0, 16))).total_bits == 24


# -- correlation and joint value -------------------------------------------------


def test_correlation_matrix_validation():
    with pytest.raises(DomainError):
        CorrelationMatrix([[1, 0.2], [0.3, 1]])
    with pytest.raises(DomainError):
        CorrelationMatrix([[0.5, 0], [0, 1]])
    with pytest.raises(DomainError):
        CorrelationMatrix([[1, 2], [2, 1]])
    assert CorrelationMatrix.identity(3).is_diagonal


def test_joint_voi_examples():
    w = CorrelationMatrix([[1, 0.5], [0.5, 1]])
    assert joint_voi([0.8, 1.0], [], w) == 0.0
    assert joint_voi([0.8, 1.0], [0, 1], w) == pytest.approx(1.4)
    assert joint_voi([1.0, 1.0], [0, 1], CorrelationMatrix([[1, 1], [1, 1]])) == 1.0


def test_joint_voi_spec_defaults_all_gains_one():
    cfg = v2x_defaults()
    values = [s.intrinsic_value for s in cfg.specs]
    assert joint_voi(values, range(5), cfg.w) == pytest.approx(1.79, abs=1e-12)


def test_joint_voi_out_of_range():
    with pytest.raises(DomainError):
        joint_voi([1.0], [1], CorrelationMatrix.identity(1))


@st.composite
def value_sets(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    vals = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    w = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = draw(st.sampled_from([0.0, 0.1, 0.25, 0.6, 1.0]))
    members = draw(st.sets(st.integers(0, n - 1)))
    return vals, CorrelationMatrix(w), members


@given(value_sets())
def test_joint_voi_matches_oracle(case):
    vals, w, members = case
    assert joint_voi(vals, members, w) == pytest.approx(joint_value(vals, members, w.w), abs=1e-12)


@given(value_sets())
def test_discount_never_adds_value(case):
    vals, w, members = case
    total = sum(vals[i] for i in members)
    v = joint_voi(vals, members, w)
    assert v <= total + 1e-12
    no_overlap = all(w.w[i, j] == 0 for i in members for j in members if i != j)
    positive = all(vals[i] > 1e-6 for i in members)
    if no_overlap:
        assert v == pytest.approx(total, abs=1e-12)
    elif positive:
        assert v < total


@given(value_sets())
def test_singleton_is_its_value(case):
    vals, w, _ = case
    for i in range(len(vals)):
        assert joint_voi(vals, [i], w) == vals[i]


@given(value_sets(), st.randoms(use_true_random=False))
def test_permutation_invariance(case, rnd):
    vals, w, members = case
    n = len(vals)
    perm = list(range(n))
    rnd.shuffle(perm)
    inv = np.argsort(perm)
    pv = [vals[perm[k]] for k in range(n)]
    pw = CorrelationMatrix(w.w[np.ix_(perm, perm)])
    pm = [int(inv[i]) for i in members]
    assert joint_voi(pv, pm, pw) == pytest.approx(joint_voi(vals, members, w), abs=1e-12)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.data())
def test_additive_without_correlation(vals, data):
    w = CorrelationMatrix.identity(len(vals))
    members = data.draw(st.sets(st.integers(0, len(vals) - 1)))
    for k in set(range(len(vals))) - members:
        gain = joint_voi(vals, members | {k}, w) - joint_voi(vals, members, w)
        assert gain == pytest.approx(vals[k], abs=1e-12)


def test_discount_matrix_has_zero_diagonal():
    q = discount_matrix([0.5, 0.2], np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert q.tolist() == [[0.0, 0.1], [0.1, 0.0]]
    custom = discount_matrix([0.5, 0.2], np.array([[1.0, 0.5], [0.5, 1.0]]), lambda a, b: a * b)
    assert custom[0, 1] == pytest.approx(0.05)


def test_receiver_state_copy_is_independent():
    rx = ReceiverState.empty(2)
    cp = rx.copy()
    cp.record(0, 1.0, 0.3)
    assert rx.last_delivery_time_s[0] is None
