"""Risk ratio estimation and variance estimation for case-cohort studies."""

__version__ = "0.1.0"

from .design import CaseCohortSample, Cohort, CohortRecord, build_stacked, sample_case_cohort
from .errors import (
    AggregationError,
    CalibrationError,
    ComputationError,
    ConfigError,
    ContractViolation,
    InputError,
    ModelValidityError,
    SeparationError,
)
from .model import (
    CovarianceEstimate,
    FitResult,
    StackedDataset,
    fit_logistic,
    log_likelihood,
    model_covariance,
    robust_covariance,
    score,
    wald_ci,
)
from .resampling import BootstrapResult, bootstrap_variance, resample_naive, resample_proposed
from .simgen import (
    SimParams,
    calibrate_intercept,
    generate_cohort,
    marginal_event_rate,
    default_params,
)
from .study import ScenarioConfig, StudyReport, coverage, run_scenario
