"""Exception types shared across the package."""


class LatresError(Exception):
    """Base class for all package errors."""


class ValidationError(LatresError, ValueError):
    """An argument violates an operation's contract."""


class ConfigurationError(LatresError):
    """A config document or checkpoint is malformed or inconsistent."""


class IngestionError(LatresError):
    """A dataset source could not be read."""


class CheckpointError(LatresError):
    """A checkpoint file is corrupt or incompatible."""


class TrainingDiverged(LatresError):
    """A training loss became non-finite; a diagnostic snapshot is attached.

    Attributes:
        snapshot_path: where the offending batch was dumped, or None.
    """

    def __init__(self, message, snapshot_path=None):
        super().__init__(message)
        self.snapshot_path = snapshot_path
