class NoiseTunerError(RuntimeError):
    """Raised for user-facing noisetuner failures."""


class InvalidArgumentError(NoiseTunerError, ValueError):
    """Raised when an operation receives arguments that violate its preconditions."""


class ConfigError(NoiseTunerError):
    """Raised when an experiment config cannot be parsed or fails validation."""


class NonFiniteStateError(NoiseTunerError):
    """Raised when training produces non-finite parameters or baselines."""
