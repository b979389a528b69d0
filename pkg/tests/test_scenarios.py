import numpy as np
import pytest

from voisched.core import DomainError
from voisched.scenarios import (
    HapticConfig,
    haptic_batch,
    haptic_initial_state,
    haptic_step,
    haptic_trajectory,
    object_ids,
    v2x_batch,
    v2x_correlation,
    v2x_defaults,
)


def test_v2x_rates():
    cfg = v2x_defaults()
    assert cfg.batch_bits == 15_520_000
    assert cfg.peak_rate_bps == pytest.approx(155.2e6, rel=0, abs=1e-6)
    assert cfg.names == ("f", "r", "lft", "rgt", "L")


def test_haptic_rate():
    assert HapticConfig().source_rate_bps == pytest.approx(1.408e6, rel=0, abs=1e-6)


def test_v2x_correlation_structure():
    w = v2x_correlation().w
    assert np.array_equal(w, w.T) and np.all(np.diag(w) == 1)
    f, r, lft, rgt, lidar = range(5)
    assert all(w[lidar, c] == 0.6 for c in (f, r, lft, rgt))
    assert w[f, lft] == w[f, rgt] == 0.2
    assert w[lft, rgt] == 0.1
    assert all(w[r, c] == 0 for c in (f, lft, rgt))


def test_v2x_overrides():
    cfg = v2x_defaults(values={"L": 0.4}, tau_s={"f": 0.5}, sizes_kb={"f": 100})
    assert cfg.specs[4].intrinsic_value == 0.4
    assert cfg.specs[0].temporal_model.tau_s == 0.5
    assert cfg.specs[1].temporal_model.tau_s == 0.2
    assert cfg.specs[0].size_bits == 800_000
    with pytest.raises(DomainError):
        v2x_defaults(w=np.eye(4))


def test_v2x_batches():
    cfg = v2x_defaults()
    ids = object_ids()
    b0 = v2x_batch(0.0, cfg, ids)
    b1 = v2x_batch(0.1, cfg, ids)
    assert len(b0) == 5
    assert [o.sensor_id for o in b0.objects] == list(range(5))
    assert max(o.object_id for o in b0.objects) < min(o.object_id for o in b1.objects)
    assert all(o.sample_value is None for o in b0.objects)
    with pytest.raises(DomainError):
        v2x_batch(0.05, cfg, ids)


def test_haptic_trajectory_reproducible_and_matches_stepping():
    cfg = HapticConfig(n=6)
    a = haptic_trajectory(7, 200, cfg)
    assert np.array_equal(a, haptic_trajectory(7, 200, cfg))
    assert not np.array_equal(a, haptic_trajectory(8, 200, cfg))
    rng = np.random.default_rng(7)
    x = haptic_initial_state(rng, 6)
    assert np.array_equal(x, a[0])
    for k in range(1, 200):
        x = haptic_step(x, rng, cfg.sigma)
        assert np.array_equal(x, a[k])


def test_haptic_walk_stays_in_range_and_has_the_right_spread():
    traj = haptic_trajectory(0, 20_000, HapticConfig(n=4))
    assert traj.min() >= 0 and traj.max() <= 1
    steps = np.diff(traj, axis=0)
    inner = (traj[:-1] > 0.1) & (traj[:-1] < 0.9)
    assert np.std(steps[inner]) == pytest.approx(0.0215, rel=0.03)


def test_haptic_step_rejects_out_of_range_state():
    with pytest.raises(DomainError):
        haptic_step([1.2], np.random.default_rng(0))


def test_haptic_batch():
    cfg = HapticConfig(n=3)
    b = haptic_batch(0.002, [0.1, 0.2, 0.3], cfg, object_ids())
    assert [o.sample_value for o in b.objects] == [0.1, 0.2, 0.3]
    assert b.total_bits == 96
    with pytest.raises(DomainError):
        haptic_batch(0.0015, [0.1, 0.2, 0.3], cfg, object_ids())


def test_haptic_specs():
    cfg = HapticConfig()
    assert len(cfg.specs) == 44 and cfg.w.is_diagonal
    assert all(s.is_scalar and s.intrinsic_value == 1.0 for s in cfg.specs)
