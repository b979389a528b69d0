"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Times the exact QKP solver on random 12- and 18-item instances and one
second of the 44-sensor haptic tick loop for every scheduler, and checks
that both backends return the same answers.
"""
import argparse
import math
import time

import numpy as np

from voisched import _kernels_py
from voisched.kernels import COMPILED, EST, FIFO, VOI_ONLY
from voisched.qkp import EXACT_THRESHOLD, MAX_LOCAL_SEARCH_ITERS
from voisched.scenarios import HapticConfig, haptic_trajectory

if COMPILED:
    from voisched import _kernels


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _qkp_cases(n, count, seed):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        p = rng.random(n)
        q = np.triu(rng.random((n, n)) * 0.3 * (rng.random((n, n)) < 0.5), 1)
        q = q + q.T
        sizes = rng.integers(1, 50, n)
        cases.append((p, q, sizes, int(sum(sizes) * 0.4)))
    return cases


def _tick_args(kind, capacity_bps, traj, cfg):
    return (
        traj, kind, capacity_bps, cfg.tick_s, cfg.sample_bits,
        np.full(cfg.n, cfg.intrinsic_value), cfg.sigma, cfg.center_sigmas, cfg.sharpness,
        EXACT_THRESHOLD, MAX_LOCAL_SEARCH_ITERS,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not COMPILED:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1

    rows = []
    for n, count in ((12, 50), (18, 5)):
        cases = _qkp_cases(n, count, seed=n)
        t_py, a = _best(lambda: [_kernels_py.qkp_exact(*c) for c in cases], args.repeat)
        t_cy, b = _best(lambda: [_kernels.qkp_exact(*c) for c in cases], args.repeat)
        same = all(list(x[0]) == list(y[0]) and x[1] == y[1] for x, y in zip(a, b))
        rows.append((f"qkp_exact n={n} x{count}", t_py, t_cy, same))

    cfg = HapticConfig()
    traj = np.ascontiguousarray(haptic_trajectory(0, 1000, cfg))
    for name, kind in (("fifo", FIFO), ("voi", VOI_ONLY), ("est", EST)):
        for cap in (0.47e6, math.inf):
            call = _tick_args(kind, cap, traj, cfg)
            t_py, a = _best(lambda: _kernels_py.scalar_tick_run(*call), args.repeat)
            t_cy, b = _best(lambda: _kernels.scalar_tick_run(*call), args.repeat)
            same = all(np.array_equal(x, y) for x, y in zip(a, b))
            label = "inf" if math.isinf(cap) else f"{cap / 1e6:g}M"
            rows.append((f"haptic 1 s {name} C={label}", t_py, t_cy, same))

    print(f"{'kernel':34s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  same")
    for name, t_py, t_cy, same in rows:
        print(f"{name:34s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:8.1f}x  {same}")
    return 0 if all(r[3] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
