"""Exception types shared across the package."""


class HyperstabError(Exception):
    """Base class for all package-specific errors."""


class InvalidElementError(HyperstabError):
    """Element data is malformed: wrong shape/support or non-finite entries."""


class AlgebraMismatchError(HyperstabError):
    """Operands belong to different algebra descriptors."""


class UnsupportedHypothesisError(HyperstabError):
    """A structural hypothesis (algebra flag, field kind) does not hold."""


class UnsupportedSchemeError(HyperstabError):
    """Iteration scheme outside the supported |d| > 1 forward regime."""


class InvalidEvaluationError(HyperstabError):
    """Non-finite values appeared while evaluating an iteration."""


class NumericDegeneracyError(HyperstabError):
    """A linear-algebra oracle hit rank deficiency beyond the expected kernel."""


class RejectedConfigError(HyperstabError):
    """Experiment configuration violates a validation invariant."""


class ConfigError(HyperstabError):
    """Malformed configuration file or CLI arguments."""
