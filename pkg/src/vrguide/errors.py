"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class GuideError(Exception):
    """Base class for every engine error."""

    code = "guide_error"

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


# --- scene ---------------------------------------------------------------

class MalformedScene(GuideError):
    code = "malformed_scene"


class DuplicateObjectId(GuideError):
    code = "duplicate_object_id"


class AnchorBlocked(GuideError):
    code = "anchor_blocked"


class EmptyDescription(GuideError):
    code = "empty_description"


class UnknownObject(GuideError):
    code = "unknown_object"


# --- pathfinding ----------------------------------------------------------

class Unreachable(GuideError):
    code = "unreachable"


class InvalidEndpoint(GuideError):
    code = "invalid_endpoint"


# --- guide FSM ------------------------------------------------------------

class NotGrabbable(GuideError):
    code = "not_grabbable"


class UnknownTarget(GuideError):
    code = "unknown_target"


class GuideBusy(GuideError):
    """Navigation requested while an escort is already underway."""

    code = "guide_busy"


# --- intent pipeline -------------------------------------------------------

class EmptyQuery(GuideError):
    code = "empty_query"


class AmbiguousReference(GuideError):
    code = "ambiguous_reference"

    def __init__(self, message: str, candidates: list[str]):
        super().__init__(message)
        self.candidates = candidates

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), "candidates": self.candidates}


class UnknownReference(GuideError):
    code = "unknown_reference"


class NonCanonicalName(GuideError):
    code = "non_canonical_name"

    def __init__(self, message: str, suggestion: str | None = None):
        super().__init__(message)
        self.suggestion = suggestion

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), "suggestion": self.suggestion}


class UnknownAction(GuideError):
    code = "unknown_action"


class BackendUnavailable(GuideError):
    code = "backend_unavailable"


class QueryInFlight(GuideError):
    code = "query_in_flight"


# --- personas ---------------------------------------------------------------

class UnknownPersona(GuideError):
    code = "unknown_persona"


class MalformedPersonaPack(GuideError):
    code = "malformed_persona_pack"
