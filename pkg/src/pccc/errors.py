"""Exception hierarchy.

``ValidationError`` covers bad inputs (the CLI maps it to exit code 2);
everything else derived from ``PcccError`` is a runtime failure (exit 3).
"""


class PcccError(Exception):
    pass


class ValidationError(PcccError, ValueError):
    pass


class SingularMatrixError(ValidationError):
    pass


class EmptyMaskError(ValidationError):
    pass


class ZeroVectorError(ValidationError):
    pass


class InvalidDepthError(ValidationError):
    pass


class ShapeMismatchError(ValidationError):
    pass


class ManifestError(ValidationError):
    pass


class EmptyCloudError(PcccError):
    pass


class EstimationError(PcccError):
    """A statistical estimator could not produce an estimate."""


class NonFiniteError(PcccError):
    pass


class DivergenceError(PcccError):
    pass


class NoVisibleSurfaceError(PcccError):
    pass


class CheckpointError(PcccError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass
