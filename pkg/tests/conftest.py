"""Shared fixtures.

The acceptance criteria reuse a handful of expensive Monte-Carlo runs;
they are computed lazily once per session and cached, so unit tests
never pay for them.
"""

from __future__ import annotations

import numpy as np
import pytest

import streamopt as so

# acceptance experiment definitions (seeds fixed a priori)
_ACCEPTANCE_CONFIGS = {
    "crho1": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.ConstantBatches(1),
        budget=100_000,
        replications=50,
        base_seed=101,
        averagers=("assg",),
    ),
    "crho8": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.ConstantBatches(8),
        budget=100_000,
        replications=100,
        base_seed=202,
        averagers=("assg",),
        estimate_fourth_moment=True,
    ),
    "rob-0.5": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 1 / 3),
        batch=so.VaryingBatches(8.0, -0.5),
        budget=100_000,
        replications=100,
        base_seed=303,
        averagers=("assg", "wassg"),
    ),
    "rob0": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 1 / 3),
        batch=so.VaryingBatches(8.0, 0.0),
        budget=100_000,
        replications=100,
        base_seed=304,
        averagers=("assg", "wassg"),
    ),
    "rob+0.5": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 1 / 3),
        batch=so.VaryingBatches(8.0, 0.5),
        budget=100_000,
        replications=100,
        base_seed=305,
        averagers=("assg", "wassg"),
    ),
    "accel+0.5": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.VaryingBatches(8.0, 0.5),
        budget=100_000,
        replications=100,
        base_seed=404,
        averagers=(),
    ),
    "noise1": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.ConstantBatches(1),
        budget=2_048,
        replications=100,
        base_seed=505,
        averagers=(),
    ),
    "noise128": so.ExperimentConfig(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.ConstantBatches(128),
        budget=2_048,
        replications=100,
        base_seed=505,
        averagers=(),
    ),
}


class _RunCache:
    def __init__(self):
        self._trajectories = {}
        self._elapsed = {}

    def config(self, name: str) -> so.ExperimentConfig:
        return _ACCEPTANCE_CONFIGS[name]

    def trajectory(self, name: str) -> so.Trajectory:
        if name not in self._trajectories:
            import time

            t0 = time.perf_counter()
            self._trajectories[name] = so.run_experiment(_ACCEPTANCE_CONFIGS[name])
            self._elapsed[name] = time.perf_counter() - t0
        return self._trajectories[name]

    def elapsed(self, name: str) -> float:
        self.trajectory(name)
        return self._elapsed[name]


@pytest.fixture(scope="session")
def acceptance_runs() -> _RunCache:
    return _RunCache()


@pytest.fixture(scope="session")
def paper_constants() -> so.ProblemConstants:
    """Estimated constants for the d=10 preset, warm start (delta0 = 0)."""
    model = so.paper_d10()
    return model.analytic_constants(seed=7, theta0=model.minimizer)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
