"""Non-asymptotic error bounds as numeric curves.

Evaluators for the closed-form upper bounds on the streaming estimators'
errors: the general second-moment bound for any decreasing step sequence,
its constant- and varying-batch specializations, the fourth-moment bound,
and the averaged-iterate bounds (general and specialized).  Each returns
a total plus a named additive decomposition; averaged-iterate bounds live
in the root domain (they bound the root mean squared error).

Transient factors multiply exponentials whose exponents can reach the
thousands for aggressive step scales, so every such product is assembled
in log space; a term whose leading coefficient is zero is exactly zero
regardless of how large its companion constant would be.  Values that
genuinely exceed float range evaluate to ``inf``, which still compares
correctly against empirical curves.

Every "t/2" window boundary is read as ceil(t/2), for both sums and
maxima, so bounds are well-defined at odd block counts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special as sps

from .models import ProblemConstants
from .recursion import half_window_max
from .schedules import (
    BatchSchedule,
    ConstantBatches,
    LearningRateParams,
    VaryingBatches,
)

__all__ = [
    "BoundValue",
    "BoundCurve",
    "DerivedConstants",
    "ssg_bound_general",
    "ssg_delta_curve",
    "fourth_moment_bound",
    "fourth_moment_curve",
    "ssg_bound_constant",
    "ssg_bound_varying",
    "assg_bound_general",
    "assg_bound_constant",
    "assg_bound_varying",
    "derived_constants",
    "bound_curve",
    "loss_gap_bound",
    "BOUND_KINDS",
]

_EQ_TOL = 1e-9  # tolerance for the alpha = 2/3 regime switch


@dataclass(frozen=True)
class BoundValue:
    """A bound total with its additive term decomposition.

    ``domain`` is "mse" for squared-error bounds and "rmse" for
    root-domain (averaged iterate) bounds.  ``factors`` carries optional
    multiplicative diagnostics and does not sum to the total.
    """

    total: float
    terms: dict
    domain: str = "mse"
    factors: dict = field(default_factory=dict)


@dataclass
class BoundCurve:
    """A bound evaluated on a checkpoint grid, with term breakdown.

    The total equals the sum of the breakdown terms at every point and
    every term is nonnegative.
    """

    t: np.ndarray
    n_total: np.ndarray
    total: np.ndarray
    terms: dict
    domain: str = "mse"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        s = sum(self.terms.values())
        both_inf = np.isinf(s) & np.isinf(self.total)
        if not np.all(both_inf | np.isclose(s, self.total, rtol=1e-9)):
            raise ValueError("bound terms do not sum to the total")
        for name, v in self.terms.items():
            if np.any(v < 0):
                raise ValueError(f"bound term {name!r} is negative")

    def mse_values(self) -> np.ndarray:
        """The bound expressed on squared error, whatever its native domain."""
        return self.total**2 if self.domain == "rmse" else self.total

    def equals(self, other: "BoundCurve") -> bool:
        if self.domain != other.domain or set(self.terms) != set(other.terms):
            return False
        same = np.array_equal
        return (
            same(self.t, other.t)
            and same(self.n_total, other.n_total)
            and same(self.total, other.total)
            and all(same(self.terms[k], other.terms[k]) for k in self.terms)
        )


@dataclass(frozen=True)
class DerivedConstants:
    """The finite constants entering the specialized bounds.

    ``a_inf`` and ``a_inf_prime`` come from convergent series summed to a
    certified tail below 1e-15 (relative).  The exponential constants can
    overflow to ``inf`` for large step scales; the bound evaluators work
    in log space internally and are unaffected except where such a
    constant genuinely dominates a term.
    """

    pi_c: float
    pi_v: float
    pi_c_prime: float
    pi_v_prime: float
    big_pi_c: float
    big_pi_v: float
    big_pi_c_prime: float
    big_pi_v_prime: float
    a_inf: float
    a_inf_prime: float
    gamma_c: float
    gamma_v: float


def _log0(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _cexp(coef: float, log_term: float) -> float:
    """coef * exp(log_term), with an exact zero when coef == 0."""
    if coef == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(coef * np.exp(log_term))


def _flag_regime(value: float, what: str) -> None:
    if not 0.5 < value < 1.0:
        warnings.warn(
            f"{what} = {value:g} outside (1/2, 1); the bound is evaluated "
            "but its guarantee does not cover this regime",
            stacklevel=3,
        )


def _schedule_arrays(lr: LearningRateParams, schedule: BatchSchedule, t_max: int):
    n = schedule.sizes(t_max).astype(float)
    return n, lr.step_sizes(n)


# ---------------------------------------------------------------------------
# general bounds (any deterministic schedule, explicit sums)


def ssg_bound_general(
    pc: ProblemConstants, lr: LearningRateParams, schedule: BatchSchedule, t: int
) -> BoundValue:
    """Second-moment bound at block ``t`` for any decreasing step sequence.

    Transient term: product of the strong-convexity decay over the
    trailing half window with the stochastic-Lipschitz and multi-sample
    inflation factors, applied to the initial condition; noise term:
    ``2 sigma^2 / mu`` times the worst step-to-batch ratio on the window.
    At ``t = 1`` the trailing half window degenerates to the single
    block; the stated guarantee regime starts at ``t = 2``.
    """
    if t < 1:
        raise ValueError(f"needs t >= 1, got {t}")
    n, g = _schedule_arrays(lr, schedule, t)
    h = (t + 1) // 2
    s_half = float(g[h - 1 : t].sum())
    p_lip = float((g**2 / n).sum())
    p_multi = float(((n > 1) * g**2).sum())
    base = pc.delta0 + 2 * pc.sigma**2 / pc.c_l**2
    log_subexp = -pc.mu * s_half + 4 * pc.c_l**2 * p_lip + 2 * pc.c_nabla**2 * p_multi
    transient = _cexp(base, log_subexp)
    noise = 2 * pc.sigma**2 / pc.mu * float((g[h - 1 : t] / n[h - 1 : t]).max())
    return BoundValue(
        total=transient + noise,
        terms={"transient": transient, "noise": noise},
        factors={
            "subexp_product": _cexp(1.0, log_subexp),
            "initial_condition": base,
            "noise": noise,
        },
    )


def ssg_delta_curve(
    pc: ProblemConstants, lr: LearningRateParams, schedule: BatchSchedule, t_max: int
) -> np.ndarray:
    """The general second-moment bound at every block 0..t_max (one pass)."""
    n, g = _schedule_arrays(lr, schedule, t_max)
    ts = np.arange(1, t_max + 1)
    h = (ts + 1) // 2
    sg = np.concatenate([[0.0], np.cumsum(g)])
    p_lip = np.concatenate([[0.0], np.cumsum(g**2 / n)])
    p_multi = np.concatenate([[0.0], np.cumsum((n > 1) * g**2)])
    base = pc.delta0 + 2 * pc.sigma**2 / pc.c_l**2
    log_subexp = (
        -pc.mu * (sg[ts] - sg[h - 1])
        + 4 * pc.c_l**2 * p_lip[ts]
        + 2 * pc.c_nabla**2 * p_multi[ts]
    )
    noise = 2 * pc.sigma**2 / pc.mu * half_window_max(g / n)
    out = np.empty(t_max + 1)
    out[0] = pc.delta0
    with np.errstate(over="ignore"):
        out[1:] = (base * np.exp(log_subexp) if base > 0 else 0.0) + noise
    return out


def fourth_moment_bound(
    pc: ProblemConstants, lr: LearningRateParams, schedule: BatchSchedule, t: int
) -> BoundValue:
    """Fourth-moment bound at block ``t`` (transient plus three max terms)."""
    if t < 1:
        raise ValueError(f"needs t >= 1, got {t}")
    curve, parts = _fourth_curve_terms(pc, lr, schedule, t)
    terms = {k: float(v[t]) for k, v in parts.items()}
    return BoundValue(total=float(curve[t]), terms=terms)


def fourth_moment_curve(
    pc: ProblemConstants, lr: LearningRateParams, schedule: BatchSchedule, t_max: int
) -> np.ndarray:
    """The fourth-moment bound at every block 0..t_max."""
    return _fourth_curve_terms(pc, lr, schedule, t_max)[0]


def _fourth_curve_terms(pc, lr, schedule, t_max):
    n, g = _schedule_arrays(lr, schedule, t_max)
    ts = np.arange(1, t_max + 1)
    h = (ts + 1) // 2
    multi = (n > 1).astype(float)
    sg = np.concatenate([[0.0], np.cumsum(g)])
    log_big_pi = (
        32 * pc.c_l**2 * np.concatenate([[0.0], np.cumsum(g**2 / n)])
        + 96 * pc.c_l**4 * np.concatenate([[0.0], np.cumsum(g**4 / n**3)])
        + 228 * pc.c_l**4 * np.concatenate([[0.0], np.cumsum(multi * g**4 / n**2)])
        + 16 * pc.c_nabla**2 * np.concatenate([[0.0], np.cumsum(multi * g**2)])
        + 96 * pc.c_nabla**4 * np.concatenate([[0.0], np.cumsum(multi * g**4)])
    )
    tau4 = pc.tau**4
    base = pc.delta0_4 + 2 * tau4 / pc.c_l**4 + 4 * tau4 * g[0] / (pc.mu * pc.c_l**2 * n[0])
    gn = g / n
    with np.errstate(over="ignore"):
        transient = np.zeros(t_max + 1)
        transient[0] = pc.delta0_4
        if base > 0:
            transient[1:] = base * np.exp(
                -pc.mu * (sg[ts] - sg[h - 1]) + log_big_pi[ts]
            )
        parts = {
            "transient": transient,
            "noise_sq": np.concatenate(
                [[0.0], 32 * tau4 / pc.mu**2 * half_window_max(gn**2)]
            ),
            "noise_cube": np.concatenate(
                [[0.0], 48 * tau4 / pc.mu * half_window_max(gn**3)]
            ),
            "noise_multi": np.concatenate(
                [[0.0], 114 * tau4 / pc.mu * half_window_max(multi * g**3 / n**2)]
            ),
        }
    total = sum(parts.values())
    return total, parts


def assg_bound_general(
    pc: ProblemConstants,
    lr: LearningRateParams,
    schedule: BatchSchedule,
    t: int,
    delta_curve: np.ndarray,
    delta4_curve: np.ndarray,
) -> BoundValue:
    """Root-domain bound on the averaged iterate at block ``t``.

    ``delta_curve`` must bound the raw second moments for blocks
    ``0..t`` and ``delta4_curve`` the fourth moments for ``0..t-1``
    (for instance from :func:`ssg_delta_curve` and
    :func:`fourth_moment_curve`).  Six additive terms: the optimal
    covariance-trace leading term, the step-ratio telescoping sum, the
    last-iterate term, the initial condition, the martingale term, and
    the Hessian-curvature rest term.
    """
    if t < 1:
        raise ValueError(f"needs t >= 1, got {t}")
    delta_curve = np.asarray(delta_curve, float)
    delta4_curve = np.asarray(delta4_curve, float)
    if delta_curve.size < t + 1:
        raise ValueError("delta_curve must cover blocks 0..t")
    if delta4_curve.size < t:
        raise ValueError("delta4_curve must cover blocks 0..t-1")
    n, g = _schedule_arrays(lr, schedule, t)
    big_n = float(n.sum())
    mu = pc.mu
    sq = np.sqrt(delta_curve[: t + 1])
    r = n / g
    tele = float(np.sum(np.abs(r[1:] - r[:-1]) * sq[1:t])) / (big_n * mu)
    last = r[t - 1] / (big_n * mu) * sq[t]
    init = n[0] / (big_n * mu) * (1.0 / g[0] + pc.c_l) * sq[0]
    mart = pc.c_l / (big_n * mu) * math.sqrt(float(np.sum(n[1:] * delta_curve[1:t])))
    if pc.c_delta == 0.0:
        rest = 0.0
    else:
        with np.errstate(over="ignore"):
            rest = pc.c_delta / (big_n * mu) * float(
                np.sum(n * np.sqrt(delta4_curve[:t]))
            )
    terms = {
        "leading": math.sqrt(pc.lambda_cr / big_n),
        "telescope": tele,
        "last_iterate": last,
        "initial": init,
        "martingale": mart,
        "rest": rest,
    }
    return BoundValue(total=sum(terms.values()), terms=terms, domain="rmse")


# ---------------------------------------------------------------------------
# derived constants of the specialized bounds


def _power_exp_series(c: float, p: float, s_pow: float) -> float:
    """sum_{i>=0} i**s_pow * exp(-c * i**p), with a certified truncation.

    The i = 0 term contributes 1 when ``s_pow`` is zero and 0 otherwise.
    Past the summand's mode the tail is monotone, so it is sandwiched
    between two incomplete-gamma integrals; summation stops once the
    midpoint of that sandwich carries a certified relative error below
    1e-15 (1e-12 for extremely slow decays, where the explicit part is
    capped).
    """
    if not (c > 0 and p > 0):
        raise ValueError(
            f"series diverges for scale {c:g} and exponent {p:g}; "
            "the step-decay exponent must stay below 1"
        )
    total = 1.0 if s_pow == 0 else 0.0
    mode = (s_pow / (c * p)) ** (1.0 / p) if s_pow > 0 else 0.0
    i = 1
    chunk = 65_536
    cap = 2**25
    while True:
        idx = np.arange(i, i + chunk, dtype=float)
        total += float(np.sum(idx**s_pow * np.exp(-c * idx**p)))
        i += chunk
        m = i - 1
        if m > mode:
            # sum_{i>m} lies between the integrals from m+1 and from m
            lo = _series_tail(c, p, s_pow, m + 1)
            hi = _series_tail(c, p, s_pow, m)
            est = total + 0.5 * (lo + hi)
            err = 0.5 * (hi - lo)
            if err <= 1e-15 * (1.0 + est):
                return est
            if m >= cap:
                if err <= 1e-12 * (1.0 + est):
                    return est
                raise RuntimeError(
                    "series tail would not certify; scale too small"
                )


def _series_tail(c: float, p: float, s_pow: float, m: int) -> float:
    # integral_m^inf x^s exp(-c x^p) dx via the upper incomplete gamma function
    s_g = (s_pow + 1.0) / p
    z = c * float(m) ** p
    q = sps.gammaincc(s_g, z)
    if q <= 0.0:
        return 0.0
    return math.exp(sps.gammaln(s_g) + math.log(q) - s_g * math.log(c) - math.log(p))


@dataclass(frozen=True)
class _Family:
    """Log-domain constants shared by a specialization family."""

    log_pi: float
    log_pi_prime: float
    log_big_pi: float
    log_big_pi_prime: float
    a_inf: float
    gamma: float


@lru_cache(maxsize=128)
def _constant_family(pc: ProblemConstants, lr: LearningRateParams, c_rho: float) -> _Family:
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    cl2, cn2 = pc.c_l**2, pc.c_nabla**2
    ind = 1.0 if c_rho > 1 else 0.0
    if 2 * a - 1 <= 0:
        # outside the covered regime the square-summability constant blows up
        log_pi = log_big_pi = math.inf
    else:
        log_pi = 4 * a * cg**2 * (2 * cl2 + c_rho * ind * cn2) / (
            (2 * a - 1) * c_rho ** (1 - 2 * b)
        )
        log_big_pi = (
            64 * a * cl2 * cg**2 * c_rho ** (2 * b) / ((2 * a - 1) * c_rho)
            + 192 * cl2**2 * cg**4 * c_rho ** (4 * b - 3)
            + ind * 456 * cl2**2 * cg**4 * c_rho ** (4 * b - 2)
            + ind * 32 * a * cn2 * cg**2 * c_rho ** (2 * b) / (2 * a - 1)
            + ind * 192 * cn2**2 * cg**4 * c_rho ** (4 * b)
        )
    log_pi_prime = _log0(pc.delta0 + 2 * pc.sigma**2 / cl2) + log_pi
    base4 = pc.delta0_4 + 2 * pc.tau**4 / cl2**2 + 4 * pc.tau**4 * cg / (
        pc.mu * cl2 * c_rho ** (1 - b)
    )
    log_big_pi_prime = _log0(base4) + log_big_pi
    a_inf = _power_exp_series(pc.mu * cg * c_rho**b / 2 ** (2 - a), 1 - a, 0.0)
    gamma_c = (
        (1.0 / (cg * c_rho**b) + pc.c_l) * math.sqrt(pc.delta0)
        + _cexp(pc.c_l * math.sqrt(a_inf) / math.sqrt(c_rho), 0.5 * log_pi_prime)
        + _cexp(a_inf / (cg * c_rho**b), 0.5 * log_pi_prime)
        + _cexp(pc.c_delta * a_inf, 0.5 * log_big_pi_prime)
    )
    return _Family(log_pi, log_pi_prime, log_big_pi, log_big_pi_prime, a_inf, gamma_c)


@lru_cache(maxsize=128)
def _varying_family(
    pc: ProblemConstants, lr: LearningRateParams, c_rho: float, rho: float
) -> _Family:
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    cl2, cn2 = pc.c_l**2, pc.c_nabla**2
    rt = max(rho, 0.0)
    dexp = a - b * rt
    phi = ((1 - b) * rt + a) / (1 + rt)
    if 2 * dexp - 1 <= 0:
        # outside the covered regime the square-summability constant blows up
        log_pi = log_big_pi = math.inf
    else:
        log_pi = 4 * dexp * cg**2 * c_rho ** (2 * b) * (2 * cl2 + cn2) / (2 * dexp - 1)
        log_big_pi = 32 * dexp * cg**2 * c_rho ** (2 * b) * (2 * cl2 + cn2) / (
            2 * dexp - 1
        ) + 192 * cg**4 * c_rho ** (4 * b) * (4 * cl2**2 + cn2**2)
    log_pi_prime = _log0(pc.delta0 + 2 * pc.sigma**2 / cl2) + log_pi
    base4 = pc.delta0_4 + 2 * pc.tau**4 / cl2**2 + 4 * pc.tau**4 * cg / (pc.mu * cl2)
    log_big_pi_prime = _log0(base4) + log_big_pi
    p = (1 - phi) * (1 + rt)
    scale = pc.mu * cg * c_rho ** (b if rho >= 0 else 0.0) / 2 ** (1 + p)
    a_inf = _power_exp_series(scale, p, rt)
    gamma_v = (
        (1.0 / (cg * c_rho**b) + pc.c_l) * math.sqrt(pc.delta0)
        + _cexp(2**rt * pc.c_l * math.sqrt(a_inf) / math.sqrt(c_rho), 0.5 * log_pi_prime)
        + _cexp(2.0 * a_inf / (cg * c_rho**b), 0.5 * log_pi_prime)
        + _cexp(2**rt * pc.c_delta * a_inf, 0.5 * log_big_pi_prime)
    )
    return _Family(log_pi, log_pi_prime, log_big_pi, log_big_pi_prime, a_inf, gamma_v)


def _schedule_params(schedule: BatchSchedule) -> tuple[float, float]:
    if isinstance(schedule, ConstantBatches):
        return float(schedule.c_rho), 0.0
    if isinstance(schedule, VaryingBatches):
        return schedule.c_rho, schedule.rho
    raise ValueError("derived constants need a deterministic schedule")


def derived_constants(
    pc: ProblemConstants, lr: LearningRateParams, schedule: BatchSchedule
) -> DerivedConstants:
    """All specialization constants for a (constants, rate, schedule) triple.

    The family matching the schedule is always computed (divergent
    configurations raise); the complementary family is filled in when
    its own series converges and is NaN otherwise.
    """
    c_rho, rho = _schedule_params(schedule)
    own_constant = isinstance(schedule, ConstantBatches)

    def run(fn, own):
        try:
            return fn()
        except (ValueError, RuntimeError):
            if own:
                raise
            return None

    fam_c = run(lambda: _constant_family(pc, lr, c_rho), own_constant)
    fam_v = run(lambda: _varying_family(pc, lr, c_rho, rho), not own_constant)

    def xp(fam, attr):
        if fam is None:
            return math.nan
        with np.errstate(over="ignore"):
            return float(np.exp(getattr(fam, attr)))

    return DerivedConstants(
        pi_c=xp(fam_c, "log_pi"),
        pi_v=xp(fam_v, "log_pi"),
        pi_c_prime=xp(fam_c, "log_pi_prime"),
        pi_v_prime=xp(fam_v, "log_pi_prime"),
        big_pi_c=xp(fam_c, "log_big_pi"),
        big_pi_v=xp(fam_v, "log_big_pi"),
        big_pi_c_prime=xp(fam_c, "log_big_pi_prime"),
        big_pi_v_prime=xp(fam_v, "log_big_pi_prime"),
        a_inf=fam_c.a_inf if fam_c else math.nan,
        a_inf_prime=fam_v.a_inf if fam_v else math.nan,
        gamma_c=fam_c.gamma if fam_c else math.nan,
        gamma_v=fam_v.gamma if fam_v else math.nan,
    )


# ---------------------------------------------------------------------------
# specialized closed forms


def ssg_bound_constant(
    pc: ProblemConstants, lr: LearningRateParams, c_rho: float, n_total: float
) -> BoundValue:
    """Second-moment bound under a constant batch size, in the sample count."""
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    _flag_regime(a, "alpha")
    fam = _constant_family(pc, lr, c_rho)
    base = pc.delta0 + 2 * pc.sigma**2 / pc.c_l**2
    log_decay = -pc.mu * cg * n_total ** (1 - a) / (2 ** (1 - a) * c_rho ** (1 - a - b))
    transient = _cexp(base, log_decay + fam.log_pi)
    asymptotic = 2 ** (1 + a) * pc.sigma**2 * cg / (pc.mu * c_rho ** (1 - a - b) * n_total**a)
    return BoundValue(
        total=transient + asymptotic,
        terms={"transient": transient, "asymptotic": asymptotic},
    )


def ssg_bound_varying(
    pc: ProblemConstants,
    lr: LearningRateParams,
    c_rho: float,
    rho: float,
    n_total: float,
) -> BoundValue:
    """Second-moment bound under polynomially varying batches."""
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    rt = max(rho, 0.0)
    _flag_regime(a - b * rt, "alpha - beta * rho_tilde")
    fam = _varying_family(pc, lr, c_rho, rho)
    phi = ((1 - b) * rt + a) / (1 + rt)
    base = pc.delta0 + 2 * pc.sigma**2 / pc.c_l**2
    log_decay = -pc.mu * cg * n_total ** (1 - phi) / (
        2 ** ((2 + rho) * (1 - phi)) * c_rho ** (1 - b - phi)
    )
    transient = _cexp(base, log_decay + fam.log_pi)
    pos = 1.0 if rho >= 0 else 0.0
    asymptotic = (
        2 ** (1 + (2 + rho) * phi)
        * pc.sigma**2
        * cg
        / (pc.mu * c_rho ** ((1 - b) * pos - phi) * n_total**phi)
    )
    return BoundValue(
        total=transient + asymptotic,
        terms={"transient": transient, "asymptotic": asymptotic},
    )


def _tail_branch(dexp: float, log_n: float, inner_pow: float) -> float:
    """Regime switch of the curvature tail: power / log / constant."""
    if abs(dexp - 2.0 / 3.0) < _EQ_TOL:
        return log_n
    if dexp < 2.0 / 3.0:
        return math.exp(inner_pow)
    return 3 * dexp / (3 * dexp - 2)


def assg_bound_constant(
    pc: ProblemConstants, lr: LearningRateParams, c_rho: float, n_total: float
) -> BoundValue:
    """Root-domain bound on the averaged iterate, constant batches.

    The leading term depends only on the covariance trace and the sample
    count; every other term decays strictly faster than the square root.
    The curvature tail switches regime at alpha = 2/3 (power, log,
    or constant in the sample count).
    """
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    _flag_regime(a, "alpha")
    fam = _constant_family(pc, lr, c_rho)
    mu = pc.mu
    n = float(n_total)
    ind = 1.0 if c_rho > 1 else 0.0
    sqrt_pi_prime = 0.5 * fam.log_pi_prime
    terms = {
        "leading": math.sqrt(pc.lambda_cr / n),
        "telescope_noise": 6 * pc.sigma * c_rho ** ((1 - a - b) / 2)
        / (math.sqrt(cg) * mu**1.5 * n ** (1 - a / 2)),
        "rest_main": 2**a * 6 * pc.c_delta * pc.tau**2 * cg
        / (c_rho ** (1 - a - b) * mu**2 * n**a),
        "last_iterate": _cexp(
            c_rho ** (1 - a - b) * fam.a_inf / (cg * mu * n ** (1 - a)), sqrt_pi_prime
        ),
        "martingale": 2 * pc.c_l * pc.sigma * math.sqrt(cg)
        / (c_rho ** ((1 - a - b) / 2) * mu**1.5 * n ** ((1 + a) / 2)),
        "initial": c_rho * fam.gamma / (mu * n),
        "rest_tail": 0.0
        if pc.c_delta == 0.0
        else (6 + 7 * ind) * 2 ** (1.5 * a) * pc.c_delta * pc.tau**2 * cg**1.5
        * c_rho ** (1.5 * b) / (mu**1.5 * n)
        * _tail_branch(a, math.log(n), (1.5 * a - 1) * math.log(c_rho / n)),
    }
    return BoundValue(total=sum(terms.values()), terms=terms, domain="rmse")


def assg_bound_varying(
    pc: ProblemConstants,
    lr: LearningRateParams,
    c_rho: float,
    rho: float,
    n_total: float,
) -> BoundValue:
    """Root-domain bound on the averaged iterate, varying batches."""
    a, b, cg = lr.alpha, lr.beta, lr.c_gamma
    rt = max(rho, 0.0)
    dexp = a - b * rt
    _flag_regime(dexp, "alpha - beta * rho_tilde")
    fam = _varying_family(pc, lr, c_rho, rho)
    mu = pc.mu
    n = float(n_total)
    phi = ((1 - b) * rt + a) / (1 + rt)
    pos = 1.0 if rho >= 0 else 0.0
    sqrt_pi_prime = 0.5 * fam.log_pi_prime
    terms = {
        "leading": math.sqrt(pc.lambda_cr / n),
        "telescope_noise": 2 ** (3 + phi * (1 + rt)) * pc.sigma
        * c_rho ** ((1 - phi - b) / 2 * pos)
        / (mu**1.5 * math.sqrt(cg) * n ** (1 - phi / 2)),
        "rest_main": 2 ** ((1 + phi) * (1 + rt) - 2) * pc.c_delta * pc.tau**2 * cg
        / (mu**2 * c_rho ** (1 - phi - b) * n**phi),
        "last_iterate": _cexp(
            c_rho ** (1 - phi - b) * fam.a_inf / (mu * cg * n ** (1 - phi)),
            sqrt_pi_prime,
        ),
        "martingale": 2 ** (phi * (1 + rt) / 2) * pc.c_l * pc.sigma * math.sqrt(cg)
        / (mu**1.5 * c_rho ** ((1 - phi - b) / 2 * pos) * n ** ((1 + phi) / 2)),
        "initial": c_rho * fam.gamma / (mu * n),
        "rest_tail": 0.0
        if pc.c_delta == 0.0
        else 2 ** (1.5 * (1 + phi) * (1 + rt)) * pc.c_delta * pc.tau**2 * cg**1.5
        * c_rho ** (1 + 1.5 * b) / (mu**1.5 * c_rho**pos * n)
        * _tail_branch(dexp, math.log(n), 1.5 * (1 - phi) * math.log(n / c_rho)),
    }
    return BoundValue(total=sum(terms.values()), terms=terms, domain="rmse")


def loss_gap_bound(pc: ProblemConstants, delta: float) -> float:
    """Expected-suboptimality bound from a second-moment bound: c_l * delta / 2."""
    return pc.c_l * delta / 2.0


# ---------------------------------------------------------------------------
# curve assembly


BOUND_KINDS = (
    "ssg_general",
    "ssg_constant",
    "ssg_varying",
    "fourth_moment",
    "assg_general",
    "assg_constant",
    "assg_varying",
)


def bound_curve(
    kind: str,
    pc: ProblemConstants,
    lr: LearningRateParams,
    schedule: BatchSchedule,
    blocks,
) -> BoundCurve:
    """Evaluate a bound on a grid of block indices.

    General kinds run one vectorized pass to the horizon and read off
    the grid; closed-form kinds evaluate pointwise in the sample count.
    """
    blocks = np.asarray(blocks, dtype=np.int64)
    if blocks.size == 0 or blocks[0] < 1 or np.any(np.diff(blocks) <= 0):
        raise ValueError("blocks must be strictly increasing indices >= 1")
    t_max = int(blocks[-1])
    sizes = schedule.sizes(t_max)
    n_tot = np.cumsum(sizes)[blocks - 1]
    c_rho, rho = (None, None)
    if kind in ("ssg_constant", "assg_constant", "ssg_varying", "assg_varying"):
        c_rho, rho = _schedule_params(schedule)

    per_point: list[BoundValue] = []
    domain = "mse"
    if kind == "ssg_general":
        per_point = [ssg_bound_general(pc, lr, schedule, int(t)) for t in blocks]
    elif kind == "fourth_moment":
        total, parts = _fourth_curve_terms(pc, lr, schedule, t_max)
        return BoundCurve(
            t=blocks,
            n_total=n_tot,
            total=total[blocks],
            terms={k: v[blocks] for k, v in parts.items()},
            domain="mse",
            meta={"kind": kind},
        )
    elif kind == "assg_general":
        dc = ssg_delta_curve(pc, lr, schedule, t_max)
        d4 = fourth_moment_curve(pc, lr, schedule, t_max)
        per_point = [
            assg_bound_general(pc, lr, schedule, int(t), dc, d4) for t in blocks
        ]
        domain = "rmse"
    elif kind == "ssg_constant":
        per_point = [ssg_bound_constant(pc, lr, c_rho, float(nn)) for nn in n_tot]
    elif kind == "ssg_varying":
        per_point = [ssg_bound_varying(pc, lr, c_rho, rho, float(nn)) for nn in n_tot]
    elif kind == "assg_constant":
        per_point = [assg_bound_constant(pc, lr, c_rho, float(nn)) for nn in n_tot]
        domain = "rmse"
    elif kind == "assg_varying":
        per_point = [
            assg_bound_varying(pc, lr, c_rho, rho, float(nn)) for nn in n_tot
        ]
        domain = "rmse"
    else:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")

    names = list(per_point[0].terms)
    return BoundCurve(
        t=blocks,
        n_total=n_tot,
        total=np.array([bv.total for bv in per_point]),
        terms={k: np.array([bv.terms[k] for bv in per_point]) for k in names},
        domain=domain,
        meta={"kind": kind},
    )
