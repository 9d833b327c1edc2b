"""Exception and warning types raised across the package."""


class SvyLassoError(Exception):
    """Base class for all package errors."""


class SchemaError(SvyLassoError, KeyError):
    """Input table or config does not declare a required column or key."""

    def __str__(self):
        return Exception.__str__(self)


class ValidationError(SvyLassoError, ValueError):
    """Input values violate an invariant (e.g. a non-positive weight)."""


class EncodingError(SvyLassoError, ValueError):
    """A category cannot be mapped onto the design matrix."""


class DegenerateVariableError(EncodingError):
    """A covariate keeps fewer than two categories after filtering."""


class DesignStateError(SvyLassoError, RuntimeError):
    """Operation is not valid for the current state of a design matrix."""


class ConfigError(SvyLassoError, ValueError):
    """Invalid generator, solver or run configuration."""


class ContractError(SvyLassoError, ValueError):
    """Arguments violate an operation's precondition."""


class InferenceError(SvyLassoError, ArithmeticError):
    """Inference cannot proceed (singular Hessian, empty selection, ...)."""


class UndefinedAUCError(SvyLassoError, ValueError):
    """AUC requested for data with a single response class."""


class ConvergenceWarning(UserWarning):
    """Iterative solver stopped before meeting its tolerance."""
