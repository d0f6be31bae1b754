"""Command-line front end.

Subcommands:

* ``run``    -- run one configured experiment or a figure preset, write
  trajectory CSVs plus a JSON manifest.
* ``bounds`` -- evaluate the matching theoretical bound curves on the
  same checkpoint grids, write bound CSVs with term breakdowns.
* ``verify`` -- the randomized sequence-inequality suite; exits nonzero
  on any violation.
* ``fit``    -- log-log rate fit on an existing trajectory CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
Config files are JSON, schema-validated before any computation; unknown
keys are rejected.  Scalar fields can be overridden with dotted-path
flags, e.g. ``--lr.alpha 0.75``.  ``STREAMOPT_THREADS`` caps parallel
replications.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds as _bounds
from .harness import (
    PRESET_NAMES,
    ExperimentConfig,
    config_hash,
    fit_rate,
    preset_configs,
    replicate_paper_figures,
    run_experiment,
)
from .models import make_model
from .optimizers import DivergenceError
from .recursion import run_verification
from .schedules import ConstantBatches, ScheduleError
from .serialize import (
    read_trajectory_csv,
    write_bound_csv,
    write_manifest,
    write_trajectory_csv,
)
from .trajectory import SERIES_FIELDS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_LR_SCHEMA = {
    "type": "object",
    "properties": {
        "c_gamma": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "beta": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["c_gamma", "alpha"],
    "additionalProperties": False,
}

_BATCH_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "constant"},
                "c_rho": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "c_rho"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "varying"},
                "c_rho": {"type": "number", "minimum": 1},
                "rho": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            },
            "required": ["kind", "c_rho", "rho"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "random"},
                "c_low": {"type": "number", "minimum": 1},
                "rho_low": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                "c_high": {"type": "number", "minimum": 1},
                "rho_high": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            },
            "required": ["kind", "c_low", "rho_low", "c_high", "rho_high"],
            "additionalProperties": False,
        },
    ],
}

_MODEL_SCHEMA = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "kind": {"enum": ["linear", "ridge"]},
                "theta_star": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "noise_std": {"type": "number", "minimum": 0},
                "penalty": {"type": "number", "minimum": 0},
            },
            "required": ["theta_star"],
            "additionalProperties": False,
        },
    ]
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": _MODEL_SCHEMA,
        "lr": _LR_SCHEMA,
        "batch": _BATCH_SCHEMA,
        "budget": {"type": "integer", "minimum": 1},
        "replications": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer"},
        "checkpoints": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "integer", "minimum": 1}},
            ]
        },
        "averagers": {
            "type": "array",
            "items": {"enum": ["assg", "wassg"]},
        },
        "wassg_lambda": {"type": "number", "exclusiveMinimum": 0},
        "estimate_fourth_moment": {"type": "boolean"},
        "avg_start": {"type": "integer", "minimum": 0},
        "theta0": {
            "oneOf": [
                {"enum": ["minimizer", "zeros"]},
                {"type": "array", "items": {"type": "number"}},
            ]
        },
        "out": {
            "type": "object",
            "properties": {
                "dir": {"type": "string"},
                "prefix": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["lr", "batch", "budget"],
    "additionalProperties": False,
}


class ConfigError(Exception):
    pass


def _load_config(path: str, overrides: list[str]) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    doc = _apply_overrides(doc, overrides)
    try:
        jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        loc = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {e.message}") from e
    return doc


def _apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply dotted-path overrides like ['--lr.alpha', '0.75']."""
    if len(overrides) % 2:
        raise ConfigError(f"dangling override near {overrides[-1]!r}")
    for flag, raw in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"unexpected argument {flag!r}")
        keys = flag[2:].split(".")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through scalar at {k!r}")
        node[keys[-1]] = value
    return doc


def _config_to_experiment(doc: dict) -> ExperimentConfig:
    doc = {k: v for k, v in doc.items() if k != "out"}
    try:
        return ExperimentConfig.from_dict(doc)
    except (ValueError, ScheduleError, TypeError) as e:
        raise ConfigError(str(e)) from e


def _write_run_outputs(out_dir: Path, prefix: str, cfg, traj) -> dict:
    entries = {}
    for series in traj.series_names:
        fname = f"{prefix}_{series}.csv"
        write_trajectory_csv(out_dir / fname, traj)
        entries[fname] = {"series": series, "config": cfg.to_dict(),
                          "config_hash": config_hash(cfg)}
    return entries


def cmd_run(args, overrides) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = {}
    if args.preset:
        if overrides:
            raise ConfigError("dotted overrides apply to --config runs, not presets")
        kw = {}
        if args.reps:
            kw["replications"] = args.reps
        if args.budget:
            kw["budget"] = args.budget
        if args.seed is not None:
            kw["base_seed"] = args.seed
        result = replicate_paper_figures(args.preset, with_bounds=False, **kw)
        for label, (cfg, traj) in result.runs.items():
            for series in traj.series_names:
                fname = f"{args.preset}_{label}_{series}.csv"
                write_trajectory_csv(out_dir / fname, traj)
                entries[fname] = {
                    "series": series,
                    "config": cfg.to_dict(),
                    "config_hash": config_hash(cfg),
                }
    else:
        doc = _load_config(args.config, overrides)
        if args.reps:
            doc["replications"] = args.reps
        if args.budget:
            doc["budget"] = args.budget
        if args.seed is not None:
            doc["base_seed"] = args.seed
        prefix = doc.get("out", {}).get("prefix", "run")
        cfg = _config_to_experiment(doc)
        traj = run_experiment(cfg)
        entries = _write_run_outputs(out_dir, prefix, cfg, traj)
    write_manifest(out_dir / "manifest.json", entries)
    print(f"wrote {len(entries)} curve file(s) to {out_dir}")
    return EXIT_OK


def cmd_bounds(args, overrides) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = {}
    if args.preset:
        if overrides:
            raise ConfigError("dotted overrides apply to --config runs, not presets")
        configs = preset_configs(args.preset)
        jobs = [(f"{args.preset}_{label}", cfg) for label, cfg in configs.items()]
    else:
        doc = _load_config(args.config, overrides)
        cfg = _config_to_experiment(doc)
        jobs = [(doc.get("out", {}).get("prefix", "bounds"), cfg)]
    for prefix, cfg in jobs:
        t_max, _ = cfg.batch.blocks_within_budget(cfg.budget)
        from .harness import checkpoint_blocks, _resolve_theta0

        blocks = (
            checkpoint_blocks(t_max, cfg.checkpoints)
            if isinstance(cfg.checkpoints, int)
            else np.asarray(cfg.checkpoints, dtype=np.int64)
        )
        model = make_model(cfg.model)
        pc = model.analytic_constants(theta0=_resolve_theta0(model, cfg.theta0))
        constant = isinstance(cfg.batch, ConstantBatches)
        kinds = (
            ("ssg_constant", "assg_constant", "fourth_moment")
            if constant
            else ("ssg_varying", "assg_varying", "fourth_moment")
        )
        fname = f"{prefix}_bounds.csv"
        curves = []
        import warnings as _w

        for kind in kinds:
            with _w.catch_warnings():
                _w.simplefilter("ignore")
                try:
                    curve = _bounds.bound_curve(kind, pc, cfg.lr, cfg.batch, blocks)
                except (ValueError, RuntimeError) as e:
                    raise ConfigError(f"bound {kind} rejected this config: {e}") from e
            curve.meta["config_hash"] = config_hash(cfg)
            curves.append(curve)
        # one file per config; the first curve carries the file, extras suffixed
        for curve in curves:
            kname = curve.meta["kind"]
            f = f"{prefix}_{kname}.csv"
            write_bound_csv(out_dir / f, curve)
            entries[f] = {"bound": kname, "config": cfg.to_dict(),
                          "config_hash": config_hash(cfg)}
        del fname
    write_manifest(out_dir / "manifest.json", entries)
    print(f"wrote {len(entries)} bound file(s) to {out_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verification(
        seed=args.seed,
        cases=args.cases,
        dominance_specs=args.dominance_specs,
        corrupt=args.self_check_corrupt,
    )
    print(report.format_table())
    if args.cases == 0:
        print("warning: zero cases requested; the pass is vacuous")
    return EXIT_OK if report.passed else 1


def cmd_fit(args) -> int:
    traj = read_trajectory_csv(args.input)
    names = [args.series] if args.series else traj.series_names
    for name in names:
        if name not in traj.series_names:
            raise ConfigError(
                f"series {name!r} not in file (has {traj.series_names})"
            )
        fit = fit_rate(traj, name, window=args.window)
        print(
            f"{name}: slope={fit.slope:+.4f} intercept={fit.intercept:+.4f} "
            f"r2={fit.r2:.4f} points={fit.n_points}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="streamopt",
        description="Streaming-gradient experiments, bounds, and verification.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("run", help="run an experiment or figure preset")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--preset", choices=PRESET_NAMES, help="figure preset name")
    q.add_argument("--out", default="out", help="output directory")
    q.add_argument("--reps", type=int, help="override replication count")
    q.add_argument("--budget", type=int, help="override sample budget")
    q.add_argument("--seed", type=int, help="override base seed")

    b = sub.add_parser("bounds", help="evaluate bound curves for a config")
    srcb = b.add_mutually_exclusive_group(required=True)
    srcb.add_argument("--config", help="JSON run configuration")
    srcb.add_argument("--preset", choices=PRESET_NAMES, help="figure preset name")
    b.add_argument("--out", default="out", help="output directory")

    v = sub.add_parser("verify", help="randomized sequence-inequality suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cases", type=int, default=1000)
    v.add_argument("--dominance-specs", type=int, default=200)
    v.add_argument("--self-check-corrupt", action="store_true", help=argparse.SUPPRESS)

    f = sub.add_parser("fit", help="log-log rate fit on a trajectory CSV")
    f.add_argument("--input", required=True)
    f.add_argument("--series", help="series name (default: all present)")
    f.add_argument("--window", type=float, default=0.5)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args, extra)
        if args.command == "bounds":
            return cmd_bounds(args, extra)
        if extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "fit":
            return cmd_fit(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScheduleError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
