"""Batch front-end: single simulations, parameter sweeps, trace and profile
tooling. Outputs are plot-ready CSV tables; there is no interactive mode.

Every subcommand reads an optional JSON configuration file plus flag
overrides, takes ``--seed``, and exits non-zero with a message naming the
offending field on bad input. ``VRSTREAM_OUT`` sets the default output
directory for sweeps.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace

from .caching import build_popularity, load_profile_csv, requests_from_traces, save_profile_csv
from .channel import ChannelConfig
from .geometry import FovSpec, build_grid
from .gru import load_model, save_model
from .prediction import (
    PredictionConfig,
    TrainConfig,
    baseline_predictor,
    evaluate_horizon,
    model_predictor,
    train,
)
from .simulator import (
    ExtrapolationPredictor,
    GruPredictor,
    OraclePredictor,
    SimConfig,
    run,
)
from .traces import (
    PRESETS,
    MotionModelParams,
    generate_population,
    generate_traces,
    load_traces,
    save_traces,
)

log = logging.getLogger("vrstream")

METRICS_HEADER = [
    "scheme", "num_users", "horizon", "grid", "seed",
    "mean_delay_ms", "p99_delay_ms", "hd_delivery_rate",
    "quality_transition", "hd_failure_ratio",
]


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------
def sim_config_from_dict(data: dict) -> SimConfig:
    valid = {f.name for f in fields(SimConfig)}
    special = {"num_users"}
    unknown = sorted(set(data) - valid - special)
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {unknown}; valid keys: {sorted(valid | special)}"
        )
    kwargs = {k: v for k, v in data.items() if k in valid}
    if "channel" in kwargs and isinstance(kwargs["channel"], dict):
        cvalid = {f.name for f in fields(ChannelConfig)}
        cunknown = sorted(set(kwargs["channel"]) - cvalid)
        if cunknown:
            raise ConfigError(
                f"unknown channel key(s) {cunknown}; valid keys: {sorted(cvalid)}"
            )
        kwargs["channel"] = ChannelConfig(**kwargs["channel"])
    if "sbs_positions" in kwargs and kwargs["sbs_positions"] is not None:
        kwargs["sbs_positions"] = tuple(tuple(p) for p in kwargs["sbs_positions"])
    try:
        cfg = SimConfig(**kwargs)
        if "num_users" in data:
            cfg = cfg.with_users(int(data["num_users"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _apply_overrides(data: dict, pairs: list[str]) -> dict:
    out = dict(data)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _motion_params(args) -> MotionModelParams:
    params = PRESETS[args.preset]
    overrides = {}
    for name in ("mean_reversion", "volatility", "max_speed", "hotspot_fraction",
                 "attractor_gain"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(params, **overrides) if overrides else params


def _resolve_predictor(spec: str | None, config: SimConfig):
    if spec in (None, "none"):
        return None
    if spec == "oracle":
        return OraclePredictor()
    if spec == "baseline":
        return ExtrapolationPredictor()
    model, extra = load_model(spec)
    return GruPredictor(
        model,
        history_window=int(extra.get("history_window", config.history_window)),
        horizon=int(extra.get("horizon", config.horizon)),
    )


def metrics_row(config: SimConfig, metrics) -> list:
    return [
        config.scheme,
        config.num_users,
        config.horizon,
        f"{config.grid_n}x{config.grid_n}",
        config.seed,
        repr(metrics.mean_delay_ms),
        repr(metrics.p99_delay_ms),
        repr(metrics.hd_delivery_rate),
        repr(metrics.quality_transition),
        repr(metrics.hd_failure_ratio),
    ]


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_generate_traces(args) -> int:
    params = _motion_params(args)
    if args.videos is not None:
        traces = generate_population(args.videos, args.users, args.frames,
                                     params, seed=args.seed)
    else:
        traces = generate_traces(args.users, args.frames, params, seed=args.seed)
    save_traces(traces, args.out)
    print(f"wrote {len(traces)} traces x {args.frames} frames to {args.out}")
    return 0


def cmd_train(args) -> int:
    traces = load_traces(args.traces)
    pred_cfg = PredictionConfig(history_window=args.history, horizon=args.horizon)
    train_cfg = TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        folds=args.folds, hidden=args.hidden, sample_stride=args.stride,
    )
    result = train(traces, pred_cfg, train_cfg, seed=args.seed)
    save_model(result.model, args.out, extra={
        "history_window": args.history, "horizon": args.horizon,
    })
    for k, err in enumerate(result.fold_errors_deg):
        print(f"fold {k}: validation angular error {err:.3f} deg")
    print(f"best fold {result.best_fold}; checkpoint written to {args.out}")
    return 0


def cmd_evaluate_predictor(args) -> int:
    traces = load_traces(args.traces)
    horizons = [int(h) for h in args.horizons.split(",")]
    if args.checkpoint:
        models = {}
        for path in args.checkpoint:
            model, extra = load_model(path)
            models[int(extra["horizon"])] = model
        missing = [h for h in horizons if h not in models]
        if missing:
            raise ConfigError(f"no checkpoint trained for horizon(s) {missing}")
        predictor = model_predictor(models)
    else:
        predictor = baseline_predictor
    table = evaluate_horizon(predictor, traces, horizons,
                             history_window=args.history, stride=args.stride)
    rows = [[h, repr(table[h])] for h in horizons]
    if args.out:
        _write_csv(args.out, ["horizon", "mean_angular_error_deg"], rows)
    for h in horizons:
        print(f"horizon {h:3d}: mean angular error {table[h]:.3f} deg")
    return 0


def cmd_build_popularity(args) -> int:
    traces = load_traces(args.traces)
    grid = build_grid(args.grid_n, args.grid_n, FovSpec(args.fov_yaw, args.fov_pitch))
    records = requests_from_traces(traces, args.users_per_video, grid,
                                   FovSpec(args.fov_yaw, args.fov_pitch))
    profile = build_popularity(records)
    save_profile_csv(profile, args.out)
    print(f"wrote popularity profile for {len(profile.ranked)} (video, frame) "
          f"pairs to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    data = _load_json(args.config) if args.config else {}
    data = _apply_overrides(data, args.set or [])
    if args.seed is not None:
        data["seed"] = args.seed
    config = sim_config_from_dict(data)

    if args.traces:
        traces = load_traces(args.traces)
    else:
        params = _motion_params(args)
        traces = generate_population(config.catalog_size, config.users_per_video,
                                     config.n_frames, params,
                                     seed=config.seed + args.trace_seed_offset)
    predictor = _resolve_predictor(args.predictor, config)
    profile = load_profile_csv(args.profile) if args.profile else None
    metrics = run(config, traces, predictor=predictor, profile=profile)
    rows = [metrics_row(config, metrics)]
    _write_csv(args.out, METRICS_HEADER, rows)
    print(f"{config.scheme}: mean {metrics.mean_delay_ms:.3f} ms, "
          f"p99 {metrics.p99_delay_ms:.3f} ms, hd {metrics.hd_delivery_rate:.4f}, "
          f"transitions {metrics.quality_transition:.4f}")
    return 0


# Sweep tasks run in worker processes; everything they need must be cheap
# to pickle, so each task rebuilds traces and profile from seeds.
def _sweep_task(task: dict) -> list:
    config = sim_config_from_dict(task["config"])
    tspec = task["traces"]
    params = replace(PRESETS[tspec["preset"]], **tspec.get("params", {}))
    traces = generate_population(config.catalog_size, config.users_per_video,
                                 config.n_frames, params,
                                 seed=config.seed + tspec.get("seed_offset", 1))
    profile = None
    if config.uses_cache:
        hist = generate_population(config.catalog_size, config.users_per_video,
                                   config.n_frames, params,
                                   seed=config.seed + tspec.get("history_seed_offset", 9001))
        grid = build_grid(config.grid_n, config.grid_n,
                          FovSpec(config.fov_yaw, config.fov_pitch))
        profile = build_popularity(requests_from_traces(
            hist, config.users_per_video, grid,
            FovSpec(config.fov_yaw, config.fov_pitch), config.n_frames))
    predictor = _resolve_predictor(task["predictor"], config) if config.proactive else None
    metrics = run(config, traces, predictor=predictor, profile=profile)
    return metrics_row(config, metrics)


_SWEEP_KEYS = {"base", "schemes", "sweep", "seeds", "traces", "predictor", "output_dir"}


def cmd_sweep(args) -> int:
    spec = _load_json(args.spec)
    unknown = sorted(set(spec) - _SWEEP_KEYS)
    if unknown:
        raise ConfigError(f"unknown sweep key(s) {unknown}; valid keys: {sorted(_SWEEP_KEYS)}")
    base = spec.get("base", {})
    sim_config_from_dict(base)  # validate keys early
    schemes = spec.get("schemes", ["ml", "ml-cache", "nml", "nml-cache"])
    axes = spec.get("sweep", {})
    valid_axes = {f.name for f in fields(SimConfig)} | {"num_users"}
    bad = sorted(set(axes) - valid_axes)
    if bad:
        raise ConfigError(f"sweep parameter(s) {bad} are not recognized config fields")
    seeds = list(spec.get("seeds", [0]))
    deduped = list(dict.fromkeys(seeds))
    if len(deduped) != len(seeds):
        log.warning("duplicate seeds in sweep spec; deduplicated %d -> %d",
                    len(seeds), len(deduped))
    seeds = deduped
    out_dir = args.out_dir or spec.get("output_dir") or os.environ.get("VRSTREAM_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)

    points = [{}]
    for name, values in axes.items():
        points = [dict(p, **{name: v}) for p in points for v in values]

    tasks = []
    for scheme in schemes:
        for point in points:
            for seed in seeds:
                cfg = dict(base)
                cfg.update(point)
                cfg["scheme"] = scheme
                cfg["seed"] = seed
                tasks.append({
                    "config": cfg,
                    "traces": spec.get("traces", {"preset": "slow"}),
                    "predictor": spec.get("predictor", "baseline"),
                })

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    runs_path = os.path.join(out_dir, "runs.csv")
    _write_csv(runs_path, METRICS_HEADER, rows)

    agg = _aggregate(rows)
    agg_path = os.path.join(out_dir, "aggregate.csv")
    header = ["scheme", "num_users", "horizon", "grid", "n_seeds"]
    for m in METRICS_HEADER[5:]:
        header += [f"{m}_mean", f"{m}_std"]
    _write_csv(agg_path, header, agg)
    print(f"wrote {len(rows)} runs to {runs_path} and {len(agg)} aggregate rows "
          f"to {agg_path}")
    return 0


def _aggregate(rows: list[list]) -> list[list]:
    groups: dict[tuple, list[list[float]]] = {}
    for row in rows:
        key = tuple(row[:4])
        groups.setdefault(key, []).append([float(v) for v in row[5:]])
    out = []
    for key in sorted(groups):
        samples = groups[key]
        cols = list(zip(*samples))
        line = list(key) + [len(samples)]
        for col in cols:
            mean = statistics.fmean(col)
            std = statistics.pstdev(col) if len(col) > 1 else 0.0
            line += [repr(mean), repr(std)]
        out.append(line)
    return out


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def _add_motion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default="slow")
    p.add_argument("--mean-reversion", dest="mean_reversion", type=float)
    p.add_argument("--volatility", type=float)
    p.add_argument("--max-speed", dest="max_speed", type=float)
    p.add_argument("--hotspot-fraction", dest="hotspot_fraction", type=float)
    p.add_argument("--attractor-gain", dest="attractor_gain", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-traces", help="write synthetic head-motion traces")
    p.add_argument("--out", required=True)
    p.add_argument("--users", type=int, default=12, help="users (per video with --videos)")
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--videos", type=int, default=None,
                   help="generate a whole population grouped by video")
    p.add_argument("--seed", type=int, default=0)
    _add_motion_flags(p)
    p.set_defaults(func=cmd_generate_traces)

    p = sub.add_parser("train", help="train the pose predictor")
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", type=int, default=10)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=32)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate-predictor", help="angular error vs horizon table")
    p.add_argument("--traces", required=True)
    p.add_argument("--horizons", default="5,10,15,20,25,30")
    p.add_argument("--history", type=int, default=10)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--checkpoint", action="append", default=[],
                   help="trained checkpoint (repeatable, one per horizon); "
                        "omit to evaluate the extrapolation baseline")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate_predictor)

    p = sub.add_parser("build-popularity", help="per-frame viewport popularity profile")
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=5)
    p.add_argument("--fov-yaw", dest="fov_yaw", type=float, default=100.0)
    p.add_argument("--fov-pitch", dest="fov_pitch", type=float, default=100.0)
    p.add_argument("--users-per-video", dest="users_per_video", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_popularity)

    p = sub.add_parser("simulate", help="run one scheme and write a metrics row")
    p.add_argument("--config", help="JSON file of simulator config keys")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (JSON-parsed value)")
    p.add_argument("--traces", help="trace CSV; omitted: generate from --preset")
    p.add_argument("--trace-seed-offset", dest="trace_seed_offset", type=int, default=1)
    p.add_argument("--predictor", default="baseline",
                   help="oracle | baseline | path to a trained checkpoint | none")
    p.add_argument("--profile", help="popularity profile CSV for cache schemes")
    p.add_argument("--out", default="metrics.csv")
    p.add_argument("--seed", type=int, default=None)
    _add_motion_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep and aggregate metrics")
    p.add_argument("--spec", required=True, help="JSON sweep specification")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="unused; seeds come from the spec")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
