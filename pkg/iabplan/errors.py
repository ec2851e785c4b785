"""
Error types for the IAB planner.

Every failure the engine raises derives from IabError and carries a stable
code, an optional detail payload and the CLI exit code it maps to.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_REFUSED = 4


class IabError(Exception):
    code = "IAB_ERROR"
    exit_code = EXIT_RUNTIME

    def __init__(self, message: str, detail: Any = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def envelope(self) -> Dict[str, Any]:
        return error_envelope(self.code, self.message, self.detail)

    def __reduce__(self):
        return (self.__class__, (self.message, self.detail))


class ParameterError(IabError):
    """A numeric parameter is outside its domain (negative density, r <= 0, ...)."""

    code = "INVALID_PARAMETER"
    exit_code = EXIT_CONFIG


class DegenerateSegmentError(ParameterError):
    code = "DEGENERATE_SEGMENT"


class ConfigurationError(IabError):
    code = "INVALID_CONFIG"
    exit_code = EXIT_CONFIG


class ConsistencyError(IabError):
    code = "INCONSISTENT_STATE"


class UndefinedCoverageError(IabError):
    code = "UNDEFINED_COVERAGE"


class InfeasibleRegionError(IabError):
    code = "INFEASIBLE_REGION"
    exit_code = EXIT_CONFIG


class SearchRefusedError(IabError):
    """Exhaustive enumeration would exceed the configured cap."""

    code = "SEARCH_REFUSED"
    exit_code = EXIT_REFUSED


class BapEncodeError(IabError):
    code = "BAP_ENCODE"


class BapDecodeError(IabError):
    code = "BAP_DECODE"


class RoutingTableError(IabError):
    code = "INVALID_ROUTING_TABLE"
    exit_code = EXIT_CONFIG


class LoopDetectedError(IabError):
    code = "ROUTING_LOOP"


def error_envelope(code: str, message: str, detail: Optional[Any] = None) -> Dict[str, Any]:
    """
    Create a standardized error envelope.

    Returns: {"error": {"code": str, "message": str, "detail": any}}
    """
    error_obj: Dict[str, Any] = {"code": code, "message": message}
    if detail is not None:
        error_obj["detail"] = detail
    return {"error": error_obj}
