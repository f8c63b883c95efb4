"""Exception hierarchy.

Every error carries a human-readable ``detail`` and the process exit status the
CLI uses when the error escapes a subcommand.
"""

from typing import Any, Optional


class EgostoryError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None, **context: Any):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code
        self.context = context

    def to_dict(self) -> dict:
        payload = {"error": type(self).__name__, "detail": self.detail, "exit_code": self.exit_code}
        if self.context:
            payload["context"] = self.context
        return payload


class ConfigError(EgostoryError):
    exit_code = 2


# 📦 Bundle
class BundleError(EgostoryError):
    exit_code = 3


class BundleSchemaError(BundleError):
    def __init__(self, detail: str, field_path: str = "", frame_index: Optional[int] = None):
        super().__init__(detail, field_path=field_path, frame_index=frame_index)
        self.field_path = field_path
        self.frame_index = frame_index


class BundleValidationError(BundleError):
    def __init__(self, detail: str, violations: Optional[list] = None):
        super().__init__(detail)
        self.violations = list(violations or [])


class DescriptorDimensionError(BundleValidationError):
    pass


# 🧮 Modelling
class CueError(EgostoryError):
    exit_code = 4


class ModelError(EgostoryError):
    exit_code = 5


class InsufficientSamplesError(ModelError):
    pass


class DegenerateDesignError(ModelError):
    pass


class ModelCompatibilityError(ModelError):
    pass


class SegmentationError(EgostoryError):
    exit_code = 6


class SelectionError(EgostoryError):
    exit_code = 7


class InstanceTooLargeError(SelectionError):
    pass


class EvaluationError(EgostoryError):
    exit_code = 8


class SynthSpecError(EgostoryError):
    exit_code = 9


class ProtocolError(EgostoryError):
    """Train/test video overlap without an explicit override."""

    exit_code = 10


# 🗂️ Storage
class StorageError(EgostoryError):
    """Filesystem or run-registry failure outside the pipeline's own checks."""

    exit_code = 11
