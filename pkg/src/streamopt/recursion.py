"""Sum-product inequalities and recursive-sequence upper bounds.

Executable versions of the sequence lemmas that power the closed-form
error bounds: telescoping sum-product identities, their weighted
variants, and the two upper bounds for positive sequences satisfying

    delta_t <= (1 - 2*omega*gamma_t + eta_t*gamma_t) * delta_{t-1} + nu_t*gamma_t.

Empty ranges follow the conventions sum() = 0 and prod() = 1, and every
"t/2" boundary is read as ceil(t/2).

The ``full`` bound keeps the pre/post-crossing split around
``t0 = inf{t : eta_t <= omega}``; the ``simple`` bound collapses it and
is never smaller.  Randomized feasibility checks for all of these are in
:func:`run_verification`, which the ``verify`` CLI subcommand drives.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PreconditionError",
    "RecursionSpec",
    "sum_prod_plus",
    "sum_prod_minus",
    "sum_prod_weighted",
    "iterate_recursion",
    "recursive_delta_bound",
    "recursive_delta_bound_curve",
    "random_recursion_spec",
    "run_verification",
    "VerificationReport",
    "half_window_max",
]

_REL_TOL = 1e-9


class PreconditionError(ValueError):
    """A hypothesis of a sequence bound fails; carries the failing index."""

    def __init__(self, msg: str, index: int | None = None):
        self.index = index
        super().__init__(msg if index is None else f"{msg} (first failure at t={index})")


def _seq_array(seq, t_max: int) -> np.ndarray:
    """Values of a sequence for t = 1..t_max, from a callable or array-like."""
    if callable(seq):
        t = np.arange(1, t_max + 1, dtype=float)
        try:
            out = np.asarray(seq(t), dtype=float)
            if out.shape != (t_max,):
                raise TypeError
        except TypeError:
            out = np.array([float(seq(i)) for i in range(1, t_max + 1)])
        return out
    arr = np.asarray(seq, dtype=float)
    if arr.size < t_max:
        raise ValueError(f"sequence shorter ({arr.size}) than horizon {t_max}")
    return arr[:t_max].astype(float)


@dataclass(frozen=True)
class RecursionSpec:
    """Inputs of the recursive bound.

    ``gamma`` and ``eta`` must be strictly positive; the noise sequence
    ``nu`` may touch zero (the homogeneous recursion).  Sequences may be
    array-likes or callables of the (1-based) index; callables are
    evaluated vectorized over the horizon, so very long horizons need no
    pre-materialized arrays.
    """

    gamma: object
    eta: object
    nu: object
    omega: float
    delta0: float

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.delta0 < 0:
            raise ValueError(f"delta0 must be nonnegative, got {self.delta0}")

    def arrays(self, t_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        g = _seq_array(self.gamma, t_max)
        e = _seq_array(self.eta, t_max)
        v = _seq_array(self.nu, t_max)
        for name, a in (("gamma", g), ("eta", e)):
            bad = np.nonzero(~(a > 0))[0]
            if bad.size:
                raise PreconditionError(f"{name} must be positive", int(bad[0]) + 1)
        bad = np.nonzero(v < 0)[0]
        if bad.size:
            raise PreconditionError("nu must be nonnegative", int(bad[0]) + 1)
        return g, e, v


def _back_products(factors: np.ndarray) -> np.ndarray:
    """P[i] = prod of factors[i+1:], for the window sums below."""
    out = np.empty(len(factors))
    acc = 1.0
    for i in range(len(factors) - 1, -1, -1):
        out[i] = acc
        acc *= factors[i]
    return out


def sum_prod_plus(gamma, omega: float, k: int, t: int):
    """Telescoping chain for growing products.

    Returns ``(lhs, mid, rhs)`` with
    ``lhs = sum_{i=k}^t prod_{j=i+1}^t (1 + omega*g_j) * g_i``,
    ``mid = (1/omega) * prod_{j=k}^t (1 + omega*g_j)`` and
    ``rhs = (1/omega) * exp(omega * sum_{j=k}^t g_j)``;
    the chain ``lhs <= mid <= rhs`` always holds.
    """
    if not 1 <= k <= t:
        raise ValueError(f"need 1 <= k <= t, got k={k}, t={t}")
    g = _seq_array(gamma, t)[k - 1 :]
    f = 1.0 + omega * g
    lhs = float(np.sum(_back_products(f) * g))
    mid = float(np.prod(f) / omega)
    rhs = float(np.exp(omega * np.sum(g)) / omega)
    return lhs, mid, rhs


def sum_prod_minus(gamma, omega: float, k: int, t: int):
    """Contraction-window sum: requires omega * g_i <= 1 on the window.

    Returns ``(lhs, 1/omega)`` with
    ``lhs = sum_{i=k}^t prod_{j=i+1}^t (1 - omega*g_j) * g_i``.
    """
    if not 1 <= k <= t:
        raise ValueError(f"need 1 <= k <= t, got k={k}, t={t}")
    g = _seq_array(gamma, t)[k - 1 :]
    bad = np.nonzero(omega * g > 1.0)[0]
    if bad.size:
        raise PreconditionError("omega * gamma_i must be <= 1 on the window",
                                int(bad[0]) + k)
    f = 1.0 - omega * g
    lhs = float(np.sum(_back_products(f) * g))
    return lhs, 1.0 / omega


def sum_prod_weighted(gamma, eta, omega: float, k: int, t: int, sign: str = "plus"):
    """Weighted variants of the sum-product bounds.

    ``plus``: lhs <= (1/omega) * max eta_i * exp(omega * sum g_j);
    ``minus`` (needs omega*g_i <= 1 on the window): lhs <= (1/omega) * max eta_i.
    """
    if not 1 <= k <= t:
        raise ValueError(f"need 1 <= k <= t, got k={k}, t={t}")
    g = _seq_array(gamma, t)[k - 1 :]
    e = _seq_array(eta, t)[k - 1 :]
    emax = float(np.max(e))
    if sign == "plus":
        f = 1.0 + omega * g
        lhs = float(np.sum(_back_products(f) * e * g))
        bound = emax * np.exp(omega * np.sum(g)) / omega
    elif sign == "minus":
        bad = np.nonzero(omega * g > 1.0)[0]
        if bad.size:
            raise PreconditionError("omega * gamma_i must be <= 1 on the window",
                                    int(bad[0]) + k)
        f = 1.0 - omega * g
        lhs = float(np.sum(_back_products(f) * e * g))
        bound = emax / omega
    else:
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    return lhs, float(bound)


def iterate_recursion(spec: RecursionSpec, t_max: int) -> np.ndarray:
    """Exact iteration of the recursion (with equality), delta_0..delta_{t_max}.

    This is the worst admissible sequence, hence the oracle every upper
    bound must dominate.
    """
    g, e, v = spec.arrays(t_max)
    out = np.empty(t_max + 1)
    out[0] = spec.delta0
    d = spec.delta0
    f = 1.0 - 2.0 * spec.omega * g + e * g
    add = v * g
    for i in range(t_max):
        d = f[i] * d + add[i]
        out[i + 1] = d
    return out


def _find_t0(e: np.ndarray, omega: float) -> int | None:
    """First index with eta <= omega, or None if it lies past the horizon."""
    idx = np.nonzero(e <= omega)[0]
    return int(idx[0]) + 1 if idx.size else None


def _check_gamma_after_t0(g: np.ndarray, omega: float, t0: int) -> None:
    bad = np.nonzero(omega * g[t0:] > 1.0)[0]
    if bad.size:
        raise PreconditionError("omega * gamma_t must be <= 1 after the crossing",
                                int(bad[0]) + t0 + 1)


def _check_decreasing(name: str, a: np.ndarray) -> None:
    bad = np.nonzero(np.diff(a) > 0)[0]
    if bad.size:
        raise PreconditionError(f"{name} must be non-increasing", int(bad[0]) + 2)


def half_window_max(v: np.ndarray) -> np.ndarray:
    """out[t-1] = max(v[ceil(t/2)-1 : t]) for t = 1..len(v)."""
    T = len(v)
    out = np.empty(T)
    dq: deque[int] = deque()
    for t in range(1, T + 1):
        while dq and v[dq[-1] - 1] <= v[t - 1]:
            dq.pop()
        dq.append(t)
        h = (t + 1) // 2
        while dq[0] < h:
            dq.popleft()
        out[t - 1] = v[dq[0] - 1]
    return out


def recursive_delta_bound_curve(
    spec: RecursionSpec, t_max: int, variant: str = "simple"
) -> np.ndarray:
    """Upper bound on delta_t for every t = 0..t_max.

    ``simple`` needs positivity plus the step condition after the
    eta/omega crossing; ``full`` additionally needs non-increasing
    sequences and keeps the tighter pre-crossing bookkeeping (with the
    squared product factor on the noise-to-contraction ratio that the
    telescoping argument actually yields).  The simple bound dominates
    the full bound wherever both apply.
    """
    g, e, v = spec.arrays(t_max)
    t0 = _find_t0(e, spec.omega)
    if t0 is not None:
        _check_gamma_after_t0(g, spec.omega, t0)
    if variant == "full":
        # the split form needs the crossing inside the horizon; before it
        # the step condition is about indices the evaluation never reaches
        if t0 is None:
            raise PreconditionError(
                "eta never drops to omega within the horizon", t_max
            )
        for name, a in (("gamma", g), ("eta", e), ("nu", v)):
            _check_decreasing(name, a)
    elif variant != "simple":
        raise ValueError(f"variant must be 'simple' or 'full', got {variant!r}")

    ts = np.arange(1, t_max + 1)
    h = (ts + 1) // 2
    sg = np.concatenate([[0.0], np.cumsum(g)])
    seg = np.concatenate([[0.0], np.cumsum(e * g)])
    decay = np.exp(-spec.omega * (sg[ts] - sg[h - 1]))
    tail = half_window_max(v) / spec.omega

    out = np.empty(t_max + 1)
    out[0] = spec.delta0
    if variant == "simple":
        ratio_max = np.maximum.accumulate(v / e)
        out[1:] = decay * np.exp(2.0 * seg[ts]) * (spec.delta0 + 2.0 * ratio_max) + tail
    else:
        svg = np.concatenate([[0.0], np.cumsum(v * g)])
        ratio_max = np.maximum.accumulate(v / e)
        # pre-crossing sums stop at the current block when it lies
        # before the crossing; the split argument still applies there
        t0e = np.minimum(t0, ts)
        head = (
            np.exp(seg[t0e]) * spec.delta0
            + np.exp(2.0 * seg[t0e]) * ratio_max[t0e - 1]
        )
        mid = np.where(h - 1 >= t0 + 1, svg[np.maximum(h - 1, t0)] - svg[t0], 0.0)
        out[1:] = decay * (head + mid) + tail
    return out


def recursive_delta_bound(spec: RecursionSpec, t: int, variant: str = "simple") -> float:
    """Upper bound on delta_t at a single horizon (see the curve variant)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return spec.delta0
    return float(recursive_delta_bound_curve(spec, t, variant)[t])


# ---------------------------------------------------------------------------
# randomized verification suite


def random_recursion_spec(rng: np.random.Generator, horizon: int) -> RecursionSpec:
    """A random feasible spec for the recursive bounds.

    Power-law sequences, decreasing and positive, with ``omega*gamma_t
    <= 1/2`` everywhere (keeps every recursion factor nonnegative, so
    the exact iterate is the worst admissible sequence) and an
    eta/omega crossing inside the horizon.
    """
    omega = 10.0 ** rng.uniform(-2, 1)
    a_g = rng.uniform(0.55, 0.95)
    c_g = rng.uniform(0.05, 0.5) / omega
    a_e = rng.uniform(0.2, 0.9)
    t_cross = rng.uniform(0.5, max(horizon / 2.0, 1.0))
    c_e = omega * t_cross**a_e
    a_v = rng.uniform(0.3, 1.2)
    c_v = 10.0 ** rng.uniform(-2, 1)
    delta0 = rng.uniform(0.0, 10.0)
    return RecursionSpec(
        gamma=lambda t, c=c_g, a=a_g: c * t**-a,
        eta=lambda t, c=c_e, a=a_e: c * t**-a,
        nu=lambda t, c=c_v, a=a_v: c * t**-a,
        omega=omega,
        delta0=delta0,
    )


@dataclass
class VerificationRow:
    name: str
    cases: int
    violations: int
    worst: float  # largest lhs/bound ratio seen (1.0 = tight)

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class VerificationReport:
    rows: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def format_table(self) -> str:
        w = max(len(r.name) for r in self.rows) + 2
        lines = [f"{'check':<{w}}{'cases':>8}{'violations':>12}{'worst ratio':>14}  status"]
        for r in self.rows:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"{r.name:<{w}}{r.cases:>8}{r.violations:>12}{r.worst:>14.6g}  {status}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} "
                     f"({self.elapsed:.1f}s)")
        return "\n".join(lines)


def run_verification(
    seed: int = 0,
    cases: int = 1000,
    dominance_specs: int = 200,
    dominance_horizon: int = 500,
    corrupt: bool = False,
) -> VerificationReport:
    """Randomized check of every sequence inequality and both recursion bounds.

    ``corrupt`` flips the direction of every comparison; it exists so
    callers can verify the checker actually rejects false claims.
    """
    rng = np.random.default_rng(seed)
    t_start = time.perf_counter()

    def ok(lhs: float, bound: float) -> bool:
        fine = lhs <= bound * (1 + _REL_TOL) + 1e-300
        return (not fine) if corrupt else fine

    report = VerificationReport()

    def run_block(name, fn, n_cases):
        viol, worst = 0, 0.0
        for _ in range(n_cases):
            pairs = fn()
            for lhs, bound in pairs:
                if bound > 0:
                    worst = max(worst, lhs / bound)
                if not ok(lhs, bound):
                    viol += 1
        report.rows.append(VerificationRow(name, n_cases, viol, worst))

    def case_plus():
        L = int(rng.integers(1, 51))
        omega = 10.0 ** rng.uniform(-2, 1)
        g = rng.uniform(1e-3, 3.0, L)
        k = int(rng.integers(1, L + 1))
        lhs, mid, rhs = sum_prod_plus(g, omega, k, L)
        return [(lhs, mid), (mid, rhs)]

    def case_minus():
        L = int(rng.integers(1, 51))
        omega = 10.0 ** rng.uniform(-2, 1)
        g = rng.uniform(1e-6, 1.0, L) / omega
        k = int(rng.integers(1, L + 1))
        lhs, bound = sum_prod_minus(g, omega, k, L)
        return [(lhs, bound)]

    def case_weighted():
        L = int(rng.integers(1, 51))
        omega = 10.0 ** rng.uniform(-2, 1)
        e = rng.uniform(1e-3, 5.0, L)
        k = int(rng.integers(1, L + 1))
        g_plus = rng.uniform(1e-3, 3.0, L)
        lp, bp = sum_prod_weighted(g_plus, e, omega, k, L, "plus")
        g_minus = rng.uniform(1e-6, 1.0, L) / omega
        lm, bm = sum_prod_weighted(g_minus, e, omega, k, L, "minus")
        return [(lp, bp), (lm, bm)]

    def case_recursive():
        L = int(rng.integers(2, 51))
        spec = random_recursion_spec(rng, L)
        exact = iterate_recursion(spec, L)[L]
        full = recursive_delta_bound(spec, L, "full")
        simple = recursive_delta_bound(spec, L, "simple")
        return [(exact, full), (exact, simple), (full, simple)]

    run_block("sum-prod-plus chain", case_plus, cases)
    run_block("sum-prod-minus", case_minus, cases)
    run_block("sum-prod-weighted", case_weighted, cases)
    run_block("recursive-bound (spot)", case_recursive, cases)

    # exact-recursion dominance at every step of longer horizons
    viol, worst = 0, 0.0
    for _ in range(dominance_specs):
        L = int(rng.integers(50, dominance_horizon + 1))
        spec = random_recursion_spec(rng, L)
        exact = iterate_recursion(spec, L)
        full = recursive_delta_bound_curve(spec, L, "full")
        simple = recursive_delta_bound_curve(spec, L, "simple")
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(full[1:] > 0, exact[1:] / full[1:], 0.0)
        worst = max(worst, float(np.max(r)))
        bad = ~(
            (exact[1:] <= full[1:] * (1 + _REL_TOL))
            & (exact[1:] <= simple[1:] * (1 + _REL_TOL))
            & (full[1:] <= simple[1:] * (1 + _REL_TOL))
        )
        hit = bool(bad.any())
        if corrupt:
            hit = not hit
        if hit:
            viol += 1
    report.rows.append(
        VerificationRow("exact-recursion dominance", dominance_specs, viol, worst)
    )

    report.elapsed = time.perf_counter() - t_start
    return report
