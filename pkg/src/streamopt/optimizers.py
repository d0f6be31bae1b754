"""Streaming gradient estimators.

Three estimators over a stream of batches:

* SSG -- plain stochastic gradient, one step per batch with the averaged
  batch gradient;
* ASSG -- sample-count-weighted running average of the SSG iterates,
  maintained with the recursion ``avg_t = avg_{t-1} + (n_t / N_t) *
  (theta_{t-1} - avg_{t-1})`` (kept here as a compensated weighted sum,
  which is the same recursion evaluated stably);
* WASSG -- the log-weighted variant whose block ``t`` weight is
  ``n_t * log(1 + t)**lam``, emphasizing recent iterates.

Update order within block ``t`` is load-bearing: averages consume the
pre-step iterate ``theta_{t-1}``, then the SSG step advances the
counters.  Flipping it silently changes the averaged estimator's index
convention and its convergence behaviour.
"""

from __future__ import annotations

import math

import numpy as np

from .schedules import BatchSchedule, LearningRateParams
from .trajectory import Trajectory

__all__ = ["DivergenceError", "OptimizerState", "run_stream"]


class DivergenceError(RuntimeError):
    """A replication produced a non-finite gradient."""

    def __init__(self, block: int, detail: str = ""):
        self.block = block
        self.seed = None
        super().__init__(
            f"non-finite gradient at block {block}" + (f" ({detail})" if detail else "")
        )


class _KahanVector:
    """Compensated running sum of weighted vectors."""

    __slots__ = ("total", "_comp")

    def __init__(self, dim: int):
        self.total = np.zeros(dim)
        self._comp = np.zeros(dim)

    def add(self, w: float, vec: np.ndarray) -> None:
        y = w * vec - self._comp
        s = self.total + y
        np.subtract(s, self.total, out=self._comp)
        self._comp -= y
        self.total = s


class OptimizerState:
    """Mutable per-replication state: iterate, averages, counters.

    One state per replication; never shared.  ``theta_bar`` and
    ``theta_bar_w`` are the plain and log-weighted averages of the
    iterates seen so far, both zero before the first update by
    convention.
    """

    __slots__ = ("t", "n_total", "theta", "_bar", "_bar_wsum", "_wbar", "_wsum", "_wsum_c")

    def __init__(self, theta0: np.ndarray):
        self.t = 0
        self.n_total = 0
        self.theta = np.asarray(theta0, float).copy()
        self._bar = _KahanVector(self.theta.size)
        self._bar_wsum = 0
        self._wbar = _KahanVector(self.theta.size)
        self._wsum = 0.0
        self._wsum_c = 0.0

    @property
    def theta_bar(self) -> np.ndarray:
        if self._bar_wsum == 0:
            return np.zeros(self.theta.size)
        return self._bar.total / self._bar_wsum

    @property
    def w_sum(self) -> float:
        return self._wsum

    @property
    def theta_bar_w(self) -> np.ndarray:
        if self._wsum == 0.0:
            return np.zeros(self.theta.size)
        return self._wbar.total / self._wsum

    def assg_update(self, n_t: int) -> "OptimizerState":
        """Fold the pre-step iterate into the running average with weight n_t.

        Call once per block, before ``ssg_step``.
        """
        if n_t < 1:
            raise ValueError(f"batch size must be >= 1, got {n_t}")
        self._bar.add(float(n_t), self.theta)
        self._bar_wsum += n_t
        return self

    def wassg_update(self, n_t: int, lam: float) -> "OptimizerState":
        """Fold the pre-step iterate in with weight n_t * log(1 + t)**lam."""
        if lam <= 0:
            raise ValueError(f"lam must be positive, got {lam}")
        if n_t < 1:
            raise ValueError(f"batch size must be >= 1, got {n_t}")
        w = n_t * math.log1p(self.t + 1) ** lam
        self._wbar.add(w, self.theta)
        y = w - self._wsum_c
        s = self._wsum + y
        self._wsum_c = (s - self._wsum) - y
        self._wsum = s
        return self

    def ssg_step(self, grad: np.ndarray, gamma_t: float, n_t: int) -> "OptimizerState":
        """One gradient step; advances the block and sample counters.

        ``grad`` must be the averaged batch gradient at the current
        iterate.  Averages are not touched (separate update).
        """
        if gamma_t <= 0:
            raise ValueError(f"step size must be positive, got {gamma_t}")
        if n_t < 1:
            raise ValueError(f"batch size must be >= 1, got {n_t}")
        if not np.isfinite(grad).all():
            raise DivergenceError(self.t + 1)
        self.theta = self.theta - gamma_t * grad
        self.t += 1
        self.n_total += n_t
        return self


def run_stream(
    model,
    lr: LearningRateParams,
    batches: BatchSchedule,
    steps: int | None,
    averagers=("assg",),
    *,
    rng: np.random.Generator,
    wassg_lambda: float = 2.0,
    avg_start: int = 0,
    budget: int | None = None,
    checkpoints=None,
    record_fourth: bool = False,
    theta0: np.ndarray | None = None,
) -> Trajectory:
    """Run one replication of a streaming estimator and record its errors.

    Each block draws its batch size, samples the batch, evaluates the
    averaged gradient at the current iterate, folds that iterate into
    the tracked averages (skipped for the first ``avg_start`` blocks),
    and then takes the SSG step.  Squared errors against the model's
    minimizer are recorded after the step, at every block or only at the
    given checkpoint block indices.

    Either ``steps`` fixes the number of blocks, or ``budget`` runs
    until the next batch would exceed the sample budget (needed for
    random schedules, whose block count is path-dependent).
    """
    if steps is None and budget is None:
        raise ValueError("either steps or budget is required")
    if steps is not None and steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    track_assg = "assg" in averagers
    track_wassg = "wassg" in averagers

    target = model.minimizer
    state = OptimizerState(np.zeros(model.dim) if theta0 is None else theta0)
    if checkpoints is None:
        cps = None
    else:
        cps = np.asarray(checkpoints, dtype=np.int64)
        if cps.size and (np.any(np.diff(cps) <= 0) or cps[0] < 1):
            raise ValueError("checkpoints must be strictly increasing block indices")

    rec_t: list[int] = []
    rec_n: list[int] = []
    rec = {"mse": []}
    if track_assg:
        rec["mse_avg"] = []
    if track_wassg:
        rec["mse_wavg"] = []
    if record_fourth:
        rec["m4"] = []

    k = 0  # next checkpoint pointer
    t = 0
    while True:
        if steps is not None and t >= steps:
            break
        n = batches.batch_size(t + 1, rng)
        if budget is not None and state.n_total + n > budget:
            break
        t += 1
        gamma = lr.step_size(n, t)
        batch = model.sample_batch(n, rng)
        grad = model.batch_gradient(state.theta, batch)
        if t > avg_start:
            if track_assg:
                state.assg_update(n)
            if track_wassg:
                state.wassg_update(n, wassg_lambda)
        state.ssg_step(grad, gamma, n)

        if cps is None:
            take = True
        elif k < cps.size and t == cps[k]:
            take = True
            k += 1
        else:
            take = False
        if take:
            diff = state.theta - target
            err = float(diff @ diff)
            rec_t.append(t)
            rec_n.append(state.n_total)
            rec["mse"].append(err)
            if track_assg:
                d = state.theta_bar - target
                rec["mse_avg"].append(float(d @ d))
            if track_wassg:
                d = state.theta_bar_w - target
                rec["mse_wavg"].append(float(d @ d))
            if record_fourth:
                rec["m4"].append(err * err)

    return Trajectory(
        t=np.asarray(rec_t, dtype=np.int64),
        n_total=np.asarray(rec_n, dtype=np.int64),
        mse=np.asarray(rec["mse"]),
        mse_avg=np.asarray(rec["mse_avg"]) if track_assg else None,
        mse_wavg=np.asarray(rec["mse_wavg"]) if track_wassg else None,
        m4=np.asarray(rec["m4"]) if record_fourth else None,
        meta={"blocks": t},
    )
