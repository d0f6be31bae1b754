"""Monte-Carlo experiment harness.

Runs many independent replications of a streaming estimator, averages
their error curves on a common log-spaced checkpoint grid, fits
log-log convergence rates, and compares empirical curves against the
theoretical bound curves.

Replication ``r`` draws from its own generator seeded ``base_seed + r``,
so runs are reproducible, replications are disjoint, and results do not
depend on execution order.  Set ``STREAMOPT_THREADS`` to run
replications in parallel processes; the aggregation is a deterministic
reduction ordered by replication index either way.

By default every run starts at the model's minimizer.  This isolates
the stationary-phase behaviour the rate criteria measure: with the
aggressive step scales studied here, a cold start inflates the early
iterates by several orders of magnitude, and the averaged estimator
provably drags that transient along for hundreds of thousands of
samples (its initial-condition terms decay only like 1/N^2 from an
enormous constant).  Pass ``theta0="zeros"`` or an explicit vector to
include the cold-start transient.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as _bounds
from .models import make_model
from .optimizers import DivergenceError, run_stream
from .schedules import (
    BatchSchedule,
    ConstantBatches,
    LearningRateParams,
    RandomBatches,
    VaryingBatches,
)
from .trajectory import Trajectory

__all__ = [
    "ExperimentConfig",
    "RateFit",
    "BoundComparison",
    "FigureResult",
    "run_experiment",
    "fit_rate",
    "compare_with_bound",
    "replicate_paper_figures",
    "checkpoint_blocks",
    "config_hash",
    "PRESET_NAMES",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one Monte-Carlo experiment needs.

    ``checkpoints`` is either a point count for the automatic log-spaced
    grid or an explicit strictly increasing list of block indices.
    ``theta0`` is "minimizer", "zeros", or an explicit vector.
    """

    lr: LearningRateParams
    batch: BatchSchedule
    budget: int
    model: object = "paper-d10"
    replications: int = 100
    base_seed: int = 0
    checkpoints: object = 64
    averagers: tuple = ("assg",)
    wassg_lambda: float = 2.0
    estimate_fourth_moment: bool = False
    avg_start: int = 0
    theta0: object = "minimizer"

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        for a in self.averagers:
            if a not in ("assg", "wassg"):
                raise ValueError(f"unknown averager {a!r}")
        if not isinstance(self.checkpoints, int):
            cps = np.asarray(self.checkpoints, dtype=np.int64)
            if cps.size == 0 or cps[0] < 1 or np.any(np.diff(cps) <= 0):
                raise ValueError("checkpoints must be strictly increasing and >= 1")

    def to_dict(self) -> dict:
        return {
            "model": _model_to_dict(self.model),
            "lr": {
                "c_gamma": self.lr.c_gamma,
                "alpha": self.lr.alpha,
                "beta": self.lr.beta,
            },
            "batch": _batch_to_dict(self.batch),
            "budget": self.budget,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "checkpoints": self.checkpoints
            if isinstance(self.checkpoints, int)
            else [int(c) for c in self.checkpoints],
            "averagers": list(self.averagers),
            "wassg_lambda": self.wassg_lambda,
            "estimate_fourth_moment": self.estimate_fourth_moment,
            "avg_start": self.avg_start,
            "theta0": self.theta0
            if isinstance(self.theta0, str)
            else [float(x) for x in np.asarray(self.theta0)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        lr = LearningRateParams(**d["lr"])
        batch = _batch_from_dict(d["batch"])
        kw = {
            k: d[k]
            for k in (
                "budget",
                "replications",
                "base_seed",
                "checkpoints",
                "wassg_lambda",
                "estimate_fourth_moment",
                "avg_start",
                "theta0",
            )
            if k in d
        }
        if "averagers" in d:
            kw["averagers"] = tuple(d["averagers"])
        return cls(lr=lr, batch=batch, model=d.get("model", "paper-d10"), **kw)


def _model_to_dict(model) -> object:
    if isinstance(model, str):
        return model
    if isinstance(model, dict):
        return model
    d = {"theta_star": [float(x) for x in getattr(model, "theta_star", model.minimizer)]}
    d["noise_std"] = float(model.noise_std)
    if hasattr(model, "penalty"):
        d.update(kind="ridge", penalty=float(model.penalty))
        d["theta_star"] = [float(x) for x in model.theta_data]
    else:
        d["kind"] = "linear"
    return d


def _batch_to_dict(batch: BatchSchedule) -> dict:
    if isinstance(batch, ConstantBatches):
        return {"kind": "constant", "c_rho": int(batch.c_rho)}
    if isinstance(batch, VaryingBatches):
        return {"kind": "varying", "c_rho": batch.c_rho, "rho": batch.rho}
    if isinstance(batch, RandomBatches):
        return {
            "kind": "random",
            "c_low": batch.c_low,
            "rho_low": batch.rho_low,
            "c_high": batch.c_high,
            "rho_high": batch.rho_high,
        }
    raise TypeError(f"unknown schedule type {type(batch).__name__}")


def _batch_from_dict(d: dict) -> BatchSchedule:
    kind = d.get("kind")
    if kind == "constant":
        return ConstantBatches(int(d["c_rho"]))
    if kind == "varying":
        return VaryingBatches(float(d["c_rho"]), float(d["rho"]))
    if kind == "random":
        return RandomBatches(
            float(d["c_low"]), float(d["rho_low"]), float(d["c_high"]), float(d["rho_high"])
        )
    raise ValueError(f"unknown batch kind {kind!r}")


def config_hash(cfg: ExperimentConfig | dict) -> str:
    d = cfg.to_dict() if isinstance(cfg, ExperimentConfig) else cfg
    blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def checkpoint_blocks(t_max: int, count: int = 64) -> np.ndarray:
    """Log-spaced, deduplicated block indices from 1 to t_max."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    return np.unique(np.geomspace(1, t_max, count).astype(np.int64))


def _resolve_theta0(model, theta0) -> np.ndarray:
    if isinstance(theta0, str):
        if theta0 == "minimizer":
            return np.asarray(model.minimizer, float).copy()
        if theta0 == "zeros":
            return np.zeros(model.dim)
        raise ValueError(f"unknown theta0 preset {theta0!r}")
    v = np.asarray(theta0, float)
    if v.shape != (model.dim,):
        raise ValueError(f"theta0 has shape {v.shape}, expected ({model.dim},)")
    return v


def _run_one(cfg: ExperimentConfig, rep: int, steps, cps) -> Trajectory:
    model = make_model(cfg.model)
    rng = np.random.default_rng(cfg.base_seed + rep)
    try:
        return run_stream(
            model,
            cfg.lr,
            cfg.batch,
            steps,
            cfg.averagers,
            rng=rng,
            wassg_lambda=cfg.wassg_lambda,
            avg_start=cfg.avg_start,
            budget=None if steps is not None else cfg.budget,
            checkpoints=cps,
            record_fourth=cfg.estimate_fourth_moment,
            theta0=_resolve_theta0(model, cfg.theta0),
        )
    except DivergenceError as e:
        e.seed = cfg.base_seed + rep
        raise DivergenceError(
            e.block, f"replication {rep}, seed {cfg.base_seed + rep}"
        ) from e


def run_experiment(cfg: ExperimentConfig) -> Trajectory:
    """Replication-averaged error curves for one configuration.

    Returns a trajectory whose series are means over replications at
    each checkpoint, with Monte-Carlo standard errors alongside.
    """
    t_max, _ = cfg.batch.blocks_within_budget(cfg.budget)
    if t_max < 1:
        raise ValueError("budget admits no blocks")
    if not cfg.batch.is_deterministic:
        cfg.batch.validate_horizon(t_max)
    if isinstance(cfg.checkpoints, int):
        cps = checkpoint_blocks(t_max, cfg.checkpoints)
    else:
        cps = np.asarray(cfg.checkpoints, dtype=np.int64)
        if cps[-1] > t_max:
            raise ValueError(
                f"checkpoint {cps[-1]} beyond the {t_max} blocks the budget allows"
            )
    steps = t_max if cfg.batch.is_deterministic else None

    n_jobs = int(os.environ.get("STREAMOPT_THREADS", "1") or "1")
    reps = range(cfg.replications)
    if n_jobs > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trajs = list(pool.map(_run_one, *zip(*[(cfg, r, steps, cps) for r in reps])))
    else:
        trajs = [_run_one(cfg, r, steps, cps) for r in reps]

    k = min(len(tr) for tr in trajs)
    t = trajs[0].t[:k]
    if cfg.batch.is_deterministic:
        n_total = trajs[0].n_total[:k].copy()
    else:
        n_total = np.mean([tr.n_total[:k] for tr in trajs], axis=0).round().astype(np.int64)

    meta = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "replications": cfg.replications,
        "seed_range": [cfg.base_seed, cfg.base_seed + cfg.replications - 1],
        "blocks": int(t_max),
    }
    out = {"t": t, "n_total": n_total, "meta": meta}
    r = cfg.replications
    for name in ("mse", "mse_avg", "mse_wavg", "m4"):
        if getattr(trajs[0], name) is None:
            continue
        stack = np.vstack([getattr(tr, name)[:k] for tr in trajs])
        out[name] = stack.mean(axis=0)
        if r > 1:
            out[name + "_se"] = stack.std(axis=0, ddof=1) / math.sqrt(r)
    return Trajectory(**out)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(error) on log(sample count)."""

    slope: float
    intercept: float
    r2: float
    n_points: int


def fit_rate(traj: Trajectory, field: str = "ssg", window: float = 0.5) -> RateFit:
    """Empirical convergence exponent over the final ``window`` of checkpoints.

    ``field`` is a series name ("ssg", "assg", "wassg", "m4").
    Nonpositive values (possible only in noise-free runs) are dropped
    with a warning.  Needs at least five usable checkpoints.
    """
    if not 0 < window <= 1:
        raise ValueError("window must be in (0, 1]")
    y = traj.series(field)
    k = int(math.ceil(window * len(y)))
    xs = traj.n_total[len(y) - k :].astype(float)
    ys = y[len(y) - k :]
    mask = ys > 0
    if not mask.all():
        warnings.warn(
            f"dropping {int((~mask).sum())} nonpositive values from the rate fit",
            stacklevel=2,
        )
    xs, ys = xs[mask], ys[mask]
    if xs.size < 5:
        raise ValueError(f"need >= 5 checkpoints in the fit window, have {xs.size}")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, int(xs.size))


@dataclass
class BoundComparison:
    """Per-checkpoint comparison of an empirical curve against a bound."""

    ratio: np.ndarray  # bound / empirical, inf where the empirical error is 0
    violations: np.ndarray  # checkpoint indices where empirical > bound + 2 SE
    n_checked: int
    field: str

    @property
    def ok(self) -> bool:
        return self.violations.size == 0


def compare_with_bound(
    traj: Trajectory, curve: _bounds.BoundCurve, field: str = "ssg"
) -> BoundComparison:
    """Flag checkpoints where the empirical mean exceeds the bound.

    The bound gets two Monte-Carlo standard errors of slack; root-domain
    bound curves are squared before comparing.
    """
    if not np.array_equal(traj.t, curve.t):
        raise ValueError("trajectory and bound curve use different checkpoint grids")
    emp = traj.series(field)
    se = traj.stderr(field)
    se = np.zeros_like(emp) if se is None else se
    bound = curve.mse_values()
    bad = np.nonzero(emp > bound + 2 * se)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(emp > 0, bound / emp, np.inf)
    return BoundComparison(ratio, bad, len(emp), field)


# ---------------------------------------------------------------------------
# figure presets

PRESET_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig-robustness", "fig6")

_RHO_GRID = (-0.5, 0.0, 0.5)
_VARYING_CRHO = {"fig2": 1, "fig3": 8, "fig4": 64, "fig5": 128}


def preset_configs(
    which: str,
    replications: int = 100,
    budget: int = 100_000,
    base_seed: int = 0,
    **overrides,
) -> dict:
    """Run configurations (label -> ExperimentConfig) of a figure preset."""
    if which not in PRESET_NAMES:
        raise ValueError(f"unknown preset {which!r}; choose from {PRESET_NAMES}")
    common = dict(
        budget=budget, replications=replications, base_seed=base_seed, model="paper-d10"
    )
    common.update(overrides)
    out = {}
    if which == "fig1":
        lr = LearningRateParams(1.0, 2.0 / 3.0, 0.0)
        for c in (1, 8, 64, 128):
            out[f"crho{c}"] = ExperimentConfig(lr=lr, batch=ConstantBatches(c), **common)
    elif which in _VARYING_CRHO:
        lr = LearningRateParams(1.0, 2.0 / 3.0, 0.0)
        c = _VARYING_CRHO[which]
        for r in _RHO_GRID:
            out[f"rho{r:+.2f}"] = ExperimentConfig(
                lr=lr, batch=VaryingBatches(float(c), r), **common
            )
    else:  # fig-robustness / fig6: decay robust to the streaming rate
        lr = LearningRateParams(1.0, 2.0 / 3.0, 1.0 / 3.0)
        if which == "fig6":
            common.setdefault("averagers", ("assg", "wassg"))
        for r in _RHO_GRID:
            out[f"rho{r:+.2f}"] = ExperimentConfig(
                lr=lr, batch=VaryingBatches(8.0, r), **common
            )
    return out


@dataclass
class FigureResult:
    name: str
    runs: dict  # label -> (ExperimentConfig, Trajectory)
    bounds: dict  # "label/kind" -> BoundCurve


def replicate_paper_figures(
    which: str,
    replications: int = 100,
    budget: int = 100_000,
    base_seed: int = 0,
    with_bounds: bool = True,
    **overrides,
) -> FigureResult:
    """Run one figure preset and attach the matching bound curves."""
    configs = preset_configs(
        which, replications=replications, budget=budget, base_seed=base_seed, **overrides
    )
    runs = {}
    curves = {}
    for label, cfg in configs.items():
        traj = run_experiment(cfg)
        runs[label] = (cfg, traj)
        if not with_bounds:
            continue
        model = make_model(cfg.model)
        pc = model.analytic_constants(theta0=_resolve_theta0(model, cfg.theta0))
        constant = isinstance(cfg.batch, ConstantBatches)
        kinds = ("ssg_constant", "assg_constant") if constant else ("ssg_varying", "assg_varying")
        for kind in kinds:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                curves[f"{label}/{kind}"] = _bounds.bound_curve(
                    kind, pc, cfg.lr, cfg.batch, traj.t
                )
    return FigureResult(which, runs, curves)
