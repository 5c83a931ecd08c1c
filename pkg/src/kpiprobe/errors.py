"""Error taxonomy shared by all collector backends."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ErrorKind(enum.Enum):
    TRANSPORT_DOWN = "TRANSPORT_DOWN"
    TIMEOUT = "TIMEOUT"
    AUTH_FAILED = "AUTH_FAILED"
    PARSE_FAILED = "PARSE_FAILED"
    DIALECT_UNSUPPORTED = "DIALECT_UNSUPPORTED"
    PROTOCOL_VIOLATION = "PROTOCOL_VIOLATION"


class CollectorError(Exception):
    """Base class for all structured collection failures.

    Carries the raw payload that triggered the failure whenever one exists,
    so failed responses stay auditable.
    """

    kind: ErrorKind = ErrorKind.TRANSPORT_DOWN

    def __init__(self, detail: str, raw: bytes | str | None = None):
        super().__init__(detail)
        self.detail = detail
        self.raw = raw


class TransportDown(CollectorError):
    kind = ErrorKind.TRANSPORT_DOWN


class CollectTimeout(CollectorError):
    kind = ErrorKind.TIMEOUT


class AuthFailed(CollectorError):
    kind = ErrorKind.AUTH_FAILED


class ParseFailed(CollectorError):
    kind = ErrorKind.PARSE_FAILED


class DialectUnsupported(CollectorError):
    kind = ErrorKind.DIALECT_UNSUPPORTED


class ProtocolViolation(CollectorError):
    kind = ErrorKind.PROTOCOL_VIOLATION


class NoCoverageEntry(KeyError):
    """Raised when a (method, device) pair has no coverage matrix entry."""


@dataclass(frozen=True)
class CollectError:
    """One logged collection failure inside a series' run metadata."""

    kind: ErrorKind
    detail: str
    timestamp: float
    raw: bytes | str | None = None

    @classmethod
    def from_exception(cls, exc: CollectorError, timestamp: float) -> "CollectError":
        return cls(kind=exc.kind, detail=exc.detail, timestamp=timestamp, raw=exc.raw)
