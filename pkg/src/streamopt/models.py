"""Gradient oracles with known regularity constants.

Each model is an immutable description of a stream of random losses: it
can sample a batch of fresh observations, evaluate the averaged batch
gradient at a point, and report the constants (strong convexity,
Lipschitz and noise moments, asymptotic covariance trace) that the bound
evaluators need.

The built-in synthetic stream is least-squares linear regression with
standard Gaussian features, for which the expected gradient is exactly
``theta - theta_star`` (identity Hessian).  Gaussian designs have
unbounded conditional moments, so the stochastic Lipschitz and noise
constants are Monte-Carlo estimates, inflated by three standard errors
and flagged as estimated; they are meant for plotting bound curves, not
for certification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ProblemConstants",
    "LinearRegressionModel",
    "RidgeRegressionModel",
    "paper_d10",
    "MODEL_PRESETS",
    "make_model",
]

Batch = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class ProblemConstants:
    """Regularity constants of a stream of random losses.

    Attributes
    ----------
    mu : float
        Strong-convexity constant of the expected loss.
    c_nabla : float
        Lipschitz constant of the expected gradient.
    c_l : float
        Stochastic Lipschitz constant of the per-sample gradients
        (conditional moments up to order four).
    sigma : float
        Second-moment bound on the gradient noise at the optimum.
    tau : float
        Fourth-moment bound on the gradient noise at the optimum.
    c_delta : float
        Lipschitz constant of the Hessian (zero for quadratic losses).
    lambda_cr : float
        Trace of H^-1 S H^-1 at the optimum, with H the Hessian and S
        the gradient-noise covariance; the constant in the optimal
        ``lambda_cr / N`` rate of the averaged iterate.
    delta0, delta0_4 : float
        Second and fourth moments of the initial error.
    estimated : frozenset[str]
        Names of fields that are Monte-Carlo estimates rather than exact.
    """

    mu: float
    c_nabla: float
    c_l: float
    sigma: float
    tau: float
    c_delta: float
    lambda_cr: float
    delta0: float
    delta0_4: float
    estimated: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for name in ("mu", "c_nabla", "c_l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma", "tau", "c_delta", "lambda_cr", "delta0", "delta0_4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mu > self.c_nabla:
            raise ValueError("mu cannot exceed c_nabla")
        if self.sigma > self.tau:
            raise ValueError("sigma cannot exceed tau")

    def replace(self, **kw) -> "ProblemConstants":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class LinearRegressionModel:
    """Streaming least squares: y = <x, theta_star> + eps.

    Features are i.i.d. standard Gaussian vectors, the noise is
    independent zero-mean Gaussian with standard deviation
    ``noise_std``.  The per-sample loss is half the squared residual, so
    the expected gradient at ``theta`` is ``theta - theta_star``.
    """

    theta_star: np.ndarray
    noise_std: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_star", np.asarray(self.theta_star, float))
        if self.theta_star.ndim != 1 or self.theta_star.size < 1:
            raise ValueError("theta_star must be a nonempty vector")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def dim(self) -> int:
        return self.theta_star.size

    @property
    def minimizer(self) -> np.ndarray:
        return self.theta_star

    def sample_batch(self, n: int, rng: np.random.Generator) -> Batch:
        """Draw ``n`` i.i.d. observations (one feature draw, one noise draw)."""
        if n < 1:
            raise ValueError(f"batch size must be >= 1, got {n}")
        x = rng.standard_normal((n, self.dim))
        y = x @ self.theta_star + self.noise_std * rng.standard_normal(n)
        return x, y

    def batch_gradient(self, theta: np.ndarray, batch: Batch) -> np.ndarray:
        """Mean of the per-sample gradients x_i (<x_i, theta> - y_i)."""
        x, y = batch
        if theta.shape != (self.dim,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.dim},)")
        if x.shape[0] == 0:
            raise ValueError("batch must be nonempty")
        return x.T @ (x @ theta - y) / x.shape[0]

    def expected_gradient(self, theta: np.ndarray) -> np.ndarray:
        return theta - self.theta_star

    def analytic_constants(
        self,
        draws: int = 100_000,
        seed: int = 0,
        theta0: np.ndarray | None = None,
    ) -> ProblemConstants:
        """Problem constants for this stream.

        Exact for the identity-Hessian quantities: mu = c_nabla = 1,
        c_delta = 0, lambda_cr = dim * noise_std**2.  The stochastic
        Lipschitz constant and the noise moment bounds are Monte-Carlo
        estimates over ``draws`` samples (moment mean plus three
        standard errors, then the 1/p root), flagged in ``estimated``.
        ``delta0`` is taken for a deterministic start at ``theta0``
        (default: the zero vector).
        """
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((draws, self.dim))
        xnorm = np.einsum("ij,ij->i", x, x) ** 0.5

        # gradient-difference moments along a fixed direction (isotropic design)
        proj = np.abs(x[:, 0])
        c_l = max(_moment_bound(proj**p * xnorm**p, p) for p in (1, 2, 3, 4))

        eps = np.abs(self.noise_std * rng.standard_normal(draws))
        sigma = _moment_bound(eps**2 * xnorm**2, 2)
        tau = max(_moment_bound(eps**p * xnorm**p, p) for p in (1, 2, 3, 4))
        tau = max(tau, sigma)

        if theta0 is None:
            theta0 = np.zeros(self.dim)
        d0 = float(np.sum((theta0 - self.theta_star) ** 2))
        return ProblemConstants(
            mu=1.0,
            c_nabla=1.0,
            c_l=c_l,
            sigma=sigma,
            tau=tau,
            c_delta=0.0,
            lambda_cr=self.dim * self.noise_std**2,
            delta0=d0,
            delta0_4=d0**2,
            estimated=frozenset({"c_l", "sigma", "tau"}),
        )


def _moment_bound(samples: np.ndarray, p: int) -> float:
    """Conservative 1/p-root of a moment: mean plus three standard errors."""
    m = float(samples.mean())
    se = float(samples.std(ddof=1)) / len(samples) ** 0.5
    return (m + 3 * se) ** (1 / p)


@dataclass(frozen=True)
class RidgeRegressionModel:
    """The linear stream with an L2 penalty on the parameters.

    The per-sample loss is half the squared residual plus
    ``penalty/2 * ||theta||^2``, so the expected loss is strongly convex
    with constant ``1 + penalty`` and its minimizer shrinks to
    ``theta_data / (1 + penalty)``.
    """

    theta_data: np.ndarray
    noise_std: float = 1.0
    penalty: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_data", np.asarray(self.theta_data, float))
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")

    @property
    def dim(self) -> int:
        return self.theta_data.size

    @property
    def minimizer(self) -> np.ndarray:
        return self.theta_data / (1.0 + self.penalty)

    def sample_batch(self, n: int, rng: np.random.Generator) -> Batch:
        x = rng.standard_normal((n, self.dim))
        y = x @ self.theta_data + self.noise_std * rng.standard_normal(n)
        return x, y

    def batch_gradient(self, theta: np.ndarray, batch: Batch) -> np.ndarray:
        x, y = batch
        return x.T @ (x @ theta - y) / x.shape[0] + self.penalty * theta

    def expected_gradient(self, theta: np.ndarray) -> np.ndarray:
        return (1.0 + self.penalty) * theta - self.theta_data

    def analytic_constants(
        self,
        draws: int = 100_000,
        seed: int = 0,
        theta0: np.ndarray | None = None,
    ) -> ProblemConstants:
        base = LinearRegressionModel(self.theta_data, self.noise_std)
        pc = base.analytic_constants(draws=draws, seed=seed)
        rng = np.random.default_rng(seed + 1)
        x = rng.standard_normal((draws, self.dim))
        eps = self.noise_std * rng.standard_normal(draws)
        g = x * (x @ (self.minimizer - self.theta_data) - eps)[:, None]
        g += self.penalty * self.minimizer
        gnorm = np.sqrt((g**2).sum(axis=1))
        sigma = _moment_bound(gnorm**2, 2)
        tau = max(sigma, max(_moment_bound(gnorm**p, p) for p in (1, 2, 3, 4)))
        lam = float((gnorm**2).mean()) / (1.0 + self.penalty) ** 2
        if theta0 is None:
            theta0 = np.zeros(self.dim)
        d0 = float(np.sum((theta0 - self.minimizer) ** 2))
        return pc.replace(
            mu=1.0 + self.penalty,
            c_nabla=1.0 + self.penalty,
            c_l=pc.c_l + self.penalty,
            sigma=sigma,
            tau=tau,
            lambda_cr=lam,
            delta0=d0,
            delta0_4=d0**2,
            estimated=pc.estimated | {"sigma", "tau", "lambda_cr"},
        )


def paper_d10() -> LinearRegressionModel:
    """The built-in 10-dimensional regression preset."""
    return LinearRegressionModel(
        theta_star=np.array([-4.0, -3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
        noise_std=1.0,
    )


MODEL_PRESETS = {"paper-d10": paper_d10}


def make_model(spec):
    """Resolve a model from a preset name, a config mapping, or an instance."""
    if isinstance(spec, str):
        try:
            return MODEL_PRESETS[spec]()
        except KeyError:
            raise ValueError(f"unknown model preset {spec!r}") from None
    if isinstance(spec, dict):
        kind = spec.get("kind", "linear")
        if kind == "linear":
            return LinearRegressionModel(
                np.asarray(spec["theta_star"], float), spec.get("noise_std", 1.0)
            )
        if kind == "ridge":
            return RidgeRegressionModel(
                np.asarray(spec["theta_star"], float),
                spec.get("noise_std", 1.0),
                spec.get("penalty", 0.1),
            )
        raise ValueError(f"unknown model kind {kind!r}")
    return spec
