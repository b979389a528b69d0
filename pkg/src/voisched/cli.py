"""Experiment runner: JSON config in, one CSV row per (scheduler, capacity, seed) out.

Usage::

    voisched --config sweep.json --out results.csv [--trace] [--quiet] [--jobs N]

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from .metrics import RunMetrics, run_metrics
from .scenarios import HapticConfig, V2X_NAMES, V2xConfig, haptic_trajectory, v2x_defaults
from .sched import SchedulerKind
from .sim import RunLog, delivery_trace_rows, fast_path_applies, simulate, simulate_haptic_fast
from .transport import DEFAULT_MTU_BITS, EstimatorKind, LinkMode, SupersedePolicy

log = logging.getLogger("voisched")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CSV_HEADER = (
    "scenario",
    "scheduler",
    "capacity_mbps",
    "seed",
    "normalized_voi",
    "qoe",
    *(f"update_freq_{name}" for name in V2X_NAMES),
    "delivered_objects",
    "wasted_bits",
)

SCENARIOS = ("v2x", "haptic")
DEFAULT_DURATION_S = {"v2x": 60.0, "haptic": 10.0}
DEFAULT_HORIZON = {"v2x": 2.0, "haptic": 1.0}
DEFAULT_SEEDS = tuple(range(20))
HAPTIC_PARAMS = ("n", "sample_bits", "tick_s", "sigma", "jnd", "center_sigmas", "sharpness", "intrinsic_value")
V2X_PARAMS = ("sizes_kb", "values", "tau_s", "w", "period_s")


class ConfigError(ValueError):
    """Bad experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    schedulers: tuple[SchedulerKind, ...]
    capacities_mbps: tuple[float, ...]
    seeds: tuple[int, ...]
    duration_s: float
    mode: LinkMode = LinkMode.FLUID
    loss_prob: float = 0.0
    horizon_periods: float = 1.0
    supersede_policy: SupersedePolicy = SupersedePolicy.IF_NOT_STARTED
    estimator: EstimatorKind = EstimatorKind.ORACLE
    output_path: Optional[str] = None
    # extras beyond the documented keys
    rtt_s: float = 0.02
    mtu_bits: int = DEFAULT_MTU_BITS
    window_rtts: int = 10
    scenario_params: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        if "scenario" not in raw:
            raise ConfigError("missing required key 'scenario'")
        scenario = raw["scenario"]
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown scenario {scenario!r}")

        schedulers = []
        for name in _as_list(raw.get("schedulers", [k.value for k in SchedulerKind]), "schedulers"):
            try:
                kind = SchedulerKind.parse(str(name))
            except ValueError:
                raise ConfigError(f"schedulers: unknown scheduler {name!r}") from None
            if kind not in schedulers:
                schedulers.append(kind)
        if not schedulers:
            raise ConfigError("schedulers: list is empty")

        if "capacities_mbps" not in raw:
            raise ConfigError("missing required key 'capacities_mbps'")
        caps = [_real(c, "capacities_mbps") for c in _as_list(raw["capacities_mbps"], "capacities_mbps")]
        if not caps:
            raise ConfigError("capacities_mbps: list is empty")
        if any(not c > 0 for c in caps):
            raise ConfigError("capacities_mbps: capacities must be positive")

        seeds = _as_list(raw.get("seeds", list(DEFAULT_SEEDS)), "seeds")
        if not seeds:
            raise ConfigError("seeds: list is empty")
        if any(isinstance(s, bool) or not isinstance(s, int) for s in seeds):
            raise ConfigError("seeds: seeds must be integers")

        duration = _real(raw.get("duration_s", DEFAULT_DURATION_S[scenario]), "duration_s")
        if not duration > 0 or math.isinf(duration):
            raise ConfigError("duration_s: must be a positive finite number")
        loss = _real(raw.get("loss_prob", 0.0), "loss_prob")
        if not 0 <= loss < 1:
            raise ConfigError("loss_prob: must lie in [0, 1)")
        horizon = _real(raw.get("horizon_periods", DEFAULT_HORIZON[scenario]), "horizon_periods")
        if not horizon >= 1:
            raise ConfigError("horizon_periods: must be >= 1")
        rtt = _real(raw.get("rtt_s", 0.02), "rtt_s")
        if not rtt > 0:
            raise ConfigError("rtt_s: must be positive")
        mtu = raw.get("mtu_bits", DEFAULT_MTU_BITS)
        if isinstance(mtu, bool) or not isinstance(mtu, int) or mtu <= 0:
            raise ConfigError("mtu_bits: must be a positive integer")
        window = raw.get("window_rtts", 10)
        if isinstance(window, bool) or not isinstance(window, int) or window <= 0:
            raise ConfigError("window_rtts: must be a positive integer")

        params = raw.get("scenario_params", {})
        if not isinstance(params, dict):
            raise ConfigError("scenario_params: must be an object")
        allowed = V2X_PARAMS if scenario == "v2x" else HAPTIC_PARAMS
        for key in params:
            if key not in allowed:
                raise ConfigError(f"scenario_params: unknown {scenario} parameter {key!r}")

        out = raw.get("output_path")
        if out is not None and not isinstance(out, str):
            raise ConfigError("output_path: must be a string")

        cfg = cls(
            scenario=scenario,
            schedulers=tuple(schedulers),
            capacities_mbps=tuple(caps),
            seeds=tuple(seeds),
            duration_s=duration,
            mode=_enum(LinkMode, raw.get("mode", "fluid"), "mode"),
            loss_prob=loss,
            horizon_periods=horizon,
            supersede_policy=_enum(SupersedePolicy, raw.get("supersede_policy", "if_not_started"), "supersede_policy"),
            estimator=_enum(EstimatorKind, raw.get("estimator", "oracle"), "estimator"),
            output_path=out,
            rtt_s=rtt,
            mtu_bits=mtu,
            window_rtts=window,
            scenario_params=dict(params),
        )
        try:
            cfg.build_scenario()
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"scenario_params: {exc}") from None
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def build_scenario(self) -> V2xConfig | HapticConfig:
        if self.scenario == "v2x":
            return v2x_defaults(**self.scenario_params)
        return HapticConfig(**self.scenario_params)

    @property
    def seed_independent(self) -> bool:
        """True when a run consumes no randomness, so every seed gives the same log."""
        return self.scenario == "v2x" and self.loss_prob == 0


def _as_list(value: Any, key: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected a list")
    return value


def _real(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _enum(cls, value: Any, key: str):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"{key}: unknown value {value!r} (expected one of {choices})") from None


# -- running -----------------------------------------------------------------


def _simulate(cfg: ExperimentConfig, scenario, kind: SchedulerKind, capacity_bps: float, seed: int, trajectory, trace: bool) -> RunLog:
    if not trace and fast_path_applies(
        scenario, mode=cfg.mode, horizon_periods=cfg.horizon_periods, estimator=cfg.estimator
    ):
        return simulate_haptic_fast(
            scenario, kind, capacity_bps, cfg.duration_s, seed=seed, trajectory=trajectory
        )
    return simulate(
        scenario,
        kind,
        capacity_bps,
        cfg.duration_s,
        seed=seed,
        mode=cfg.mode,
        loss_prob=cfg.loss_prob,
        rtt_s=cfg.rtt_s,
        mtu_bits=cfg.mtu_bits,
        horizon_periods=cfg.horizon_periods,
        policy=cfg.supersede_policy,
        estimator=cfg.estimator,
        window_rtts=cfg.window_rtts,
        trajectory=trajectory,
        keep_events=trace,
        check=True,
    )


def run_seed(cfg: ExperimentConfig, seed: int, trace_dir: Optional[str] = None) -> list[tuple]:
    """Every (scheduler, capacity) run for one seed, as CSV rows.

    The infinite-capacity reference (every object delivered when generated)
    and the haptic trajectory are computed once and shared by all runs.
    """
    scenario = cfg.build_scenario()
    trajectory = None
    jnd = None
    if isinstance(scenario, HapticConfig):
        n_ticks = int(round(cfg.duration_s / scenario.tick_s))
        trajectory = haptic_trajectory(seed, n_ticks, scenario)
        jnd = scenario.jnd
    if trajectory is not None:
        reference = simulate_haptic_fast(
            scenario, SchedulerKind.FIFO, math.inf, cfg.duration_s, seed=seed, trajectory=trajectory
        )
    else:
        reference = simulate(scenario, SchedulerKind.FIFO, math.inf, cfg.duration_s, seed=seed)
    rows = []
    for kind in cfg.schedulers:
        for cap in cfg.capacities_mbps:
            run = _simulate(cfg, scenario, kind, cap * 1e6, seed, trajectory, trace_dir is not None)
            if trace_dir is not None:
                write_trace(Path(trace_dir) / f"{kind.value}_{cap:g}Mbps_seed{seed}.csv", run)
            rows.append(format_row(cfg.scenario, kind, cap, seed, run_metrics(run, reference, jnd)))
    return rows


def format_row(scenario: str, kind: SchedulerKind, cap_mbps: float, seed: int, m: RunMetrics) -> tuple:
    if scenario == "v2x":
        nv = _fmt(m.normalized_voi)
        freqs = [_fmt(f) for f in m.update_freq_hz]
        qoe = ""
    else:
        nv = ""
        freqs = [""] * len(V2X_NAMES)
        qoe = _fmt(m.qoe)
    return (scenario, kind.value, f"{cap_mbps:g}", str(seed), nv, qoe, *freqs, str(m.delivered_objects), str(m.wasted_bits))


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def _with_seed(row: tuple, seed: int) -> tuple:
    return row[:3] + (str(seed),) + row[4:]


def write_trace(path: Path, run: RunLog) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time_s", "event", "object_id", "sensor_id", "stream_id"))
        for t, name, oid, sid, stream in delivery_trace_rows(run):
            w.writerow((f"{t:.9f}", name, oid, sid, stream))


def collect_rows(cfg: ExperimentConfig, *, jobs: int = 1, trace_dir: Optional[str] = None) -> list[tuple]:
    seeds = list(cfg.seeds)
    if cfg.seed_independent and trace_dir is None:
        # identical logs for every seed: simulate once and relabel
        base = run_seed(cfg, seeds[0])
        rows = [_with_seed(r, s) for s in seeds for r in base]
    elif jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_seed, [cfg] * len(seeds), seeds, [trace_dir] * len(seeds)))
        rows = [r for part in parts for r in part]
    else:
        rows = []
        for s in seeds:
            rows.extend(run_seed(cfg, s, trace_dir))
            log.info("seed %d done", s)
    order = {k.value: i for i, k in enumerate(SchedulerKind)}
    rows.sort(key=lambda r: (order[r[1]], float(r[2]), int(r[3])))
    return rows


def render_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def run_experiment(
    cfg: ExperimentConfig,
    out_path: Optional[str] = None,
    *,
    trace: bool = False,
    jobs: int = 1,
) -> int:
    """Run the sweep and write the CSV. Returns the process exit code."""
    target = out_path or cfg.output_path
    trace_dir = None
    if trace:
        stem = Path(target).with_suffix("") if target else Path("voisched")
        trace_dir = str(stem) + "_trace"
    try:
        rows = collect_rows(cfg, jobs=jobs, trace_dir=trace_dir)
        text = render_csv(rows)
        if target:
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            Path(target).write_text(text)
        else:
            sys.stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - any failure inside a run is a runtime error
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME
    log.info("wrote %d rows", len(rows))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="voisched", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", help="output CSV (defaults to output_path, else stdout)")
    parser.add_argument("--trace", action="store_true", help="write one event CSV per run")
    parser.add_argument("--quiet", action="store_true", help="only report errors")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (one seed each)")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = ExperimentConfig.load(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    if args.jobs < 1:
        log.error("config error: --jobs must be >= 1")
        return EXIT_CONFIG
    return run_experiment(cfg, args.out, trace=args.trace, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
