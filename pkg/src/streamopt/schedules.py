"""Learning-rate and streaming-batch schedules.

A streaming run consumes one batch of ``n_t`` fresh samples per block
``t = 1, 2, ...``.  The step size couples a polynomial time decay with the
current batch size,

    gamma_t = c_gamma * n_t**beta * t**(-alpha),

and batch sizes follow one of three families: constant, polynomially
varying ``n_t ~ c_rho * t**rho``, or random sizes confined between two
polynomial envelopes.  The effective error-decay exponent ``phi`` of the
resulting run is derived from ``(alpha, beta, rho)``.

All schedule objects are immutable and safe to share across concurrent
replications; random draws take an external generator per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScheduleError",
    "LearningRateParams",
    "BatchSchedule",
    "ConstantBatches",
    "VaryingBatches",
    "RandomBatches",
    "RateExponents",
    "rate_exponents",
]


class ScheduleError(ValueError):
    """Invalid schedule configuration."""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LearningRateParams:
    """Hyper-parameters of the step-size schedule.

    Parameters
    ----------
    c_gamma : float
        Positive scale of the step size.
    alpha : float
        Time-decay exponent, in (0, 1].
    beta : float
        Batch-size exponent, in [0, 1].  ``beta=0`` decouples the step
        size from the batch size.
    """

    c_gamma: float
    alpha: float
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not self.c_gamma > 0:
            raise ScheduleError(f"c_gamma must be positive, got {self.c_gamma}")
        if not 0 < self.alpha <= 1:
            raise ScheduleError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.beta <= 1:
            raise ScheduleError(f"beta must be in [0, 1], got {self.beta}")

    def step_size(self, n_t: int, t: int) -> float:
        """Step size for block ``t`` consuming a batch of size ``n_t``.

        Strictly positive; for a fixed batch size it is decreasing in ``t``.
        """
        if t < 1:
            raise ScheduleError(f"block index must be >= 1, got {t}")
        if n_t < 1:
            raise ScheduleError(f"batch size must be >= 1, got {n_t}")
        return self.c_gamma * n_t**self.beta * t**-self.alpha

    def step_sizes(self, sizes: np.ndarray) -> np.ndarray:
        """Vectorized step sizes for blocks ``1..len(sizes)``."""
        t = np.arange(1, len(sizes) + 1, dtype=float)
        return self.c_gamma * np.asarray(sizes, float) ** self.beta * t**-self.alpha


class BatchSchedule:
    """Base class for streaming-batch schedules.

    Every generated batch size is an integer >= 1.  Deterministic
    subclasses additionally support vectorized size queries and exact
    cumulative sample counts.
    """

    is_deterministic = True

    def batch_size(self, t: int, rng: np.random.Generator | None = None) -> int:
        raise NotImplementedError

    def sizes(self, t_max: int) -> np.ndarray:
        """Batch sizes for blocks ``1..t_max`` (deterministic schedules only)."""
        raise NotImplementedError

    def cumulative_samples(self, t: int) -> int:
        """Total samples consumed by blocks ``1..t``; zero for ``t = 0``.

        Rejected for random schedules, whose sample count is
        path-dependent and must be read from the optimizer state.
        """
        if t < 0:
            raise ScheduleError(f"t must be >= 0, got {t}")
        if t == 0:
            return 0
        return int(self.sizes(t).sum())

    def blocks_within_budget(self, budget: int) -> tuple[int, int]:
        """Largest block count T with ``cumulative_samples(T) <= budget``.

        Returns ``(T, N_T)``.  For random schedules this uses the lower
        envelope, giving an upper bound on the reachable block count.
        """
        if budget < self.batch_floor(1):
            raise ScheduleError(f"budget {budget} smaller than the first batch")
        total = 0
        t = 0
        chunk = 4096
        while True:
            lo = t + 1
            hi = t + chunk
            ns = self._floor_sizes(lo, hi)
            csum = total + np.cumsum(ns)
            over = np.nonzero(csum > budget)[0]
            if over.size:
                k = int(over[0])
                return t + k, int(total if k == 0 else csum[k - 1])
            total = int(csum[-1])
            t = hi

    def batch_floor(self, t: int) -> int:
        """Smallest batch size block ``t`` can produce."""
        return self.batch_size(t)

    def _floor_sizes(self, lo: int, hi: int) -> np.ndarray:
        return self.sizes(hi)[lo - 1 :]

    def validate_horizon(self, t_max: int) -> None:
        """Check the schedule can produce valid batches for ``t <= t_max``."""


@dataclass(frozen=True)
class ConstantBatches(BatchSchedule):
    """Fixed batch size ``c_rho`` at every block."""

    c_rho: int

    def __post_init__(self) -> None:
        if not (isinstance(self.c_rho, (int, np.integer)) and self.c_rho >= 1):
            raise ScheduleError(f"c_rho must be a positive integer, got {self.c_rho}")

    def batch_size(self, t: int, rng: np.random.Generator | None = None) -> int:
        if t < 1:
            raise ScheduleError(f"block index must be >= 1, got {t}")
        return self.c_rho

    def sizes(self, t_max: int) -> np.ndarray:
        return np.full(t_max, self.c_rho, dtype=np.int64)

    def cumulative_samples(self, t: int) -> int:
        if t < 0:
            raise ScheduleError(f"t must be >= 0, got {t}")
        return self.c_rho * t


@dataclass(frozen=True)
class VaryingBatches(BatchSchedule):
    """Polynomially varying batches ``n_t = round(c_rho * t**rho)``.

    Rounding is half-up and the result is clamped below at 1, so the
    integer sizes track ``c_rho * t**rho`` with vanishing relative error.
    """

    c_rho: float
    rho: float

    def __post_init__(self) -> None:
        if not self.c_rho >= 1:
            raise ScheduleError(f"c_rho must be >= 1, got {self.c_rho}")
        if not -1 < self.rho < 1:
            raise ScheduleError(f"rho must be in (-1, 1), got {self.rho}")

    def batch_size(self, t: int, rng: np.random.Generator | None = None) -> int:
        if t < 1:
            raise ScheduleError(f"block index must be >= 1, got {t}")
        return max(1, _round_half_up(self.c_rho * t**self.rho))

    def sizes(self, t_max: int) -> np.ndarray:
        t = np.arange(1, t_max + 1, dtype=float)
        return np.maximum(1, np.floor(self.c_rho * t**self.rho + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class RandomBatches(BatchSchedule):
    """Random batch sizes confined to ``[c_low * t**rho_low, c_high * t**rho_high]``.

    Sizes are drawn uniformly over the admissible integer range; the
    envelopes only constrain, they do not prescribe a distribution.
    """

    c_low: float
    rho_low: float
    c_high: float
    rho_high: float

    is_deterministic = False

    def __post_init__(self) -> None:
        if not (self.c_low >= 1 and self.c_high >= 1):
            raise ScheduleError("envelope scales must be >= 1")
        if not (-1 < self.rho_low < 1 and -1 < self.rho_high < 1):
            raise ScheduleError("envelope exponents must be in (-1, 1)")
        if self.rho_low > self.rho_high:
            raise ScheduleError("rho_low must not exceed rho_high")
        if self.c_low > self.c_high and self.rho_low == self.rho_high:
            raise ScheduleError("lower envelope exceeds upper envelope")

    def _interval(self, t: int) -> tuple[int, int]:
        lo = max(1, math.ceil(self.c_low * t**self.rho_low))
        hi = math.floor(self.c_high * t**self.rho_high)
        return lo, hi

    def batch_size(self, t: int, rng: np.random.Generator | None = None) -> int:
        if t < 1:
            raise ScheduleError(f"block index must be >= 1, got {t}")
        lo, hi = self._interval(t)
        if lo > hi:
            raise ScheduleError(
                f"empty batch-size interval [{lo}, {hi}] at block {t}; "
                "run validate_horizon() on this schedule"
            )
        if rng is None:
            raise ScheduleError("random schedule needs a generator")
        return int(rng.integers(lo, hi + 1))

    def batch_floor(self, t: int) -> int:
        return self._interval(t)[0]

    def _floor_sizes(self, lo: int, hi: int) -> np.ndarray:
        t = np.arange(lo, hi + 1, dtype=float)
        return np.maximum(1, np.ceil(self.c_low * t**self.rho_low)).astype(np.int64)

    def sizes(self, t_max: int) -> np.ndarray:
        raise ScheduleError("random schedules have no deterministic size sequence")

    def cumulative_samples(self, t: int) -> int:
        raise ScheduleError(
            "cumulative samples of a random schedule are path-dependent; "
            "read them from the optimizer state"
        )

    def validate_horizon(self, t_max: int) -> None:
        for t in range(1, t_max + 1):
            lo, hi = self._interval(t)
            if lo > hi:
                raise ScheduleError(
                    f"empty batch-size interval [{lo}, {hi}] at block {t}"
                )


@dataclass(frozen=True)
class RateExponents:
    """Effective decay exponent of a (learning rate, batch schedule) pair.

    ``phi`` is the error-decay exponent in the cumulative sample count,
    ``rho_tilde`` the positive part of the streaming rate, and ``valid``
    flags whether the hyper-parameters fall in the regime the rate
    guarantees cover (``alpha - beta * rho_tilde`` in (1/2, 1)).  Values
    are still computed outside that regime.
    """

    phi: float
    rho_tilde: float
    valid: bool


def rate_exponents(lr: LearningRateParams, schedule: BatchSchedule) -> RateExponents:
    """Effective rate exponents for a schedule pair.

    Constant schedules give ``phi = alpha``.  Varying schedules give
    ``phi = ((1 - beta) * rho_tilde + alpha) / (1 + rho_tilde)`` with
    ``rho_tilde = max(rho, 0)``.  Random schedules give the pessimistic
    ``phi' = ((1 - beta) * rho_low + alpha) / (1 + rho_high)``.
    """
    a, b = lr.alpha, lr.beta
    if isinstance(schedule, ConstantBatches):
        rho_tilde = 0.0
        phi = a
    elif isinstance(schedule, VaryingBatches):
        rho_tilde = max(schedule.rho, 0.0)
        phi = ((1 - b) * rho_tilde + a) / (1 + rho_tilde)
    elif isinstance(schedule, RandomBatches):
        rho_tilde = max(schedule.rho_high, 0.0)
        phi = ((1 - b) * schedule.rho_low + a) / (1 + schedule.rho_high)
    else:
        raise TypeError(f"unknown schedule type {type(schedule).__name__}")
    valid = 0.5 < a - b * rho_tilde < 1
    return RateExponents(phi=phi, rho_tilde=rho_tilde, valid=valid)
