"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or infeasible configuration."""


class UsageError(RuntimeError):
    """An operation was called in a state that does not allow it."""


class ValidationError(ValueError):
    """An input value violates an operation's preconditions."""


class CheckpointError(RuntimeError):
    """A checkpoint file is malformed or built for another architecture."""


class SchemaError(ValueError):
    """A report file does not match the expected schema version."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss or otherwise diverged."""
