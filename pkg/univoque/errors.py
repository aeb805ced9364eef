# univoque/errors.py
from typing import Any, Dict, Optional


class UnivoqueError(Exception):
    """Base class for every anticipated failure in the package"""

    exit_code = 1
    http_status = 500

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': type(self).__name__,
            'detail': self.message,
            'details': self.details,
        }


class InputError(UnivoqueError):
    exit_code = 2
    http_status = 422


class PrefixTooShort(InputError):
    pass


class NoDeviationWithinPrefix(InputError):
    pass


class DomainError(UnivoqueError):
    """A partial operation was applied outside its domain"""

    exit_code = 2
    http_status = 422


class NotPrimitive(DomainError):
    pass


class NotAdmissible(DomainError):
    pass


class NotApplicable(DomainError):
    pass


class PreconditionError(DomainError):
    pass


class PrecisionExhausted(UnivoqueError):
    exit_code = 3
    http_status = 422


class ToleranceNotReached(UnivoqueError):
    """Carries the best-effort result that missed the requested tolerance"""

    exit_code = 4
    http_status = 200

    def __init__(self, message: str, estimate: Any = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.estimate = estimate


class UnknownAtDepth(UnivoqueError):
    exit_code = 4
    http_status = 200


class NonContraction(UnivoqueError):
    exit_code = 4
    http_status = 422


class ResourceError(UnivoqueError):
    exit_code = 5
    http_status = 413


class InternalConsistencyError(UnivoqueError):
    exit_code = 1
    http_status = 500
