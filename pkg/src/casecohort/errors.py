"""Exception hierarchy.

Input problems (bad arguments, malformed files) derive from ``InputError``;
numerical failures derive from ``ComputationError``. The CLI maps the two
families to distinct exit codes.
"""


class CaseCohortError(Exception):
    """Base class for all package errors."""


class InputError(CaseCohortError, ValueError):
    """Invalid user-supplied data, file or configuration."""


class ContractViolation(InputError):
    """A function was called with arguments outside its domain."""


class ConfigError(InputError):
    """One or more invalid configuration values.

    All violations are collected in ``problems`` so they can be reported at once.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ComputationError(CaseCohortError, RuntimeError):
    """A numerical procedure could not produce a usable result."""


class SeparationError(ComputationError):
    """Weighted information matrix is singular or the estimates diverge.

    Raised for perfect separation and for collinear covariates.
    """


class ModelValidityError(ComputationError, ValueError):
    """A log-link event probability would fall outside [0, 1]."""


class CalibrationError(ComputationError):
    """No parameter value reaches the requested target."""


class AggregationError(ComputationError):
    """Too many bootstrap replicates or simulations failed."""
