from .service import (
    AlreadyRegistered,
    AuditRow,
    Denied,
    DigestMismatch,
    MalformedBatch,
    NoResults,
    PlatformError,
    PlatformService,
    StoredBatch,
    UnknownPseudonym,
)

__all__ = [
    "AlreadyRegistered",
    "AuditRow",
    "Denied",
    "DigestMismatch",
    "MalformedBatch",
    "NoResults",
    "PlatformError",
    "PlatformService",
    "StoredBatch",
    "UnknownPseudonym",
]
