"""Streaming stochastic gradient methods with averaging, their
non-asymptotic error bounds, and a Monte-Carlo experiment harness."""

from .bounds import (
    BoundCurve,
    BoundValue,
    DerivedConstants,
    assg_bound_constant,
    assg_bound_general,
    assg_bound_varying,
    bound_curve,
    derived_constants,
    fourth_moment_bound,
    fourth_moment_curve,
    loss_gap_bound,
    ssg_bound_constant,
    ssg_bound_general,
    ssg_bound_varying,
    ssg_delta_curve,
)
from .harness import (
    BoundComparison,
    ExperimentConfig,
    FigureResult,
    RateFit,
    compare_with_bound,
    fit_rate,
    replicate_paper_figures,
    run_experiment,
)
from .models import (
    LinearRegressionModel,
    ProblemConstants,
    RidgeRegressionModel,
    make_model,
    paper_d10,
)
from .optimizers import DivergenceError, OptimizerState, run_stream
from .recursion import (
    PreconditionError,
    RecursionSpec,
    iterate_recursion,
    recursive_delta_bound,
    recursive_delta_bound_curve,
    run_verification,
    sum_prod_minus,
    sum_prod_plus,
    sum_prod_weighted,
)
from .schedules import (
    BatchSchedule,
    ConstantBatches,
    LearningRateParams,
    RandomBatches,
    RateExponents,
    ScheduleError,
    VaryingBatches,
    rate_exponents,
)
from .trajectory import Trajectory

__version__ = "0.1.0"
