"""Shared exception hierarchy.

Every service-level failure raises a ``ServiceError`` subclass; the HTTP
gateway maps them to status codes in one place, and library users get a
stable ``code`` string per failure mode.
"""


class ServiceError(Exception):
    """Base class for all domain errors."""

    code = "ServiceError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# --- geometry / vector validation ---

class ValidationFailed(ServiceError):
    code = "ValidationFailed"


class OutOfBounds(ValidationFailed):
    code = "OutOfBounds"


class DegenerateGeometry(ValidationFailed):
    code = "DegenerateGeometry"


class MalformedKeys(ValidationFailed):
    code = "MalformedKeys"


class UnsupportedKind(ServiceError):
    code = "UnsupportedKind"


# --- tiles ---

class DecodeError(ServiceError):
    code = "DecodeError"


class StorageError(ServiceError):
    code = "StorageError"


class TileOutOfRange(ServiceError):
    code = "TileOutOfRange"


class LevelOutOfRange(ServiceError):
    code = "LevelOutOfRange"


class ImageNotFound(ServiceError):
    code = "ImageNotFound"


class DimensionMismatch(ServiceError):
    code = "DimensionMismatch"


# --- store / lifecycle ---

class NotFound(ServiceError):
    code = "NotFound"


class PermissionDenied(ServiceError):
    code = "PermissionDenied"


class Deleted(ServiceError):
    code = "Deleted"


class TemplateNotInProduct(ServiceError):
    code = "TemplateNotInProduct"


class UnknownPlaceholder(ServiceError):
    code = "UnknownPlaceholder"


class BadFilter(ServiceError):
    code = "BadFilter"


# --- screening ---

class PatchLargerThanImage(ServiceError):
    code = "PatchLargerThanImage"


class CellOutOfRange(ServiceError):
    code = "CellOutOfRange"


# --- layout maps ---

class EmptyClass(ServiceError):
    code = "EmptyClass"


class SourceUnavailable(ServiceError):
    code = "SourceUnavailable"


class ScoreOutOfRange(ServiceError):
    code = "ScoreOutOfRange"


class CanvasTooSmall(ServiceError):
    code = "CanvasTooSmall"


class EmptyCell(ServiceError):
    code = "EmptyCell"


class NoCellsInView(ServiceError):
    code = "NoCellsInView"


# --- federation ---

class NotVirtual(ServiceError):
    code = "NotVirtual"


class TokenRevoked(ServiceError):
    code = "TokenRevoked"


class PeerUnreachable(ServiceError):
    code = "PeerUnreachable"


class AuthFailure(ServiceError):
    code = "AuthFailure"
