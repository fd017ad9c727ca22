"""Exception hierarchy. Every error carries a stable machine-readable code.

Codes double as wire-level error identifiers: the CLI prints them and the
HTTP service returns them in ``{"error": CODE, "detail": ...}`` bodies.
"""

from __future__ import annotations


class VistrailError(Exception):
    """Base for all domain errors."""

    code = "ERROR"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}" if self.detail else self.code


class OpNotApplicableError(VistrailError):
    """A primitive op referenced a missing id or reused a live one."""

    code = "OP_NOT_APPLICABLE"

    def __init__(self, offending_id: int, detail: str = ""):
        super().__init__(detail or f"id {offending_id}")
        self.offending_id = offending_id


class UnknownVersionError(VistrailError):
    code = "UNKNOWN_VERSION"

    def __init__(self, version: int):
        super().__init__(f"unknown version {version}")
        self.version = version


class InvalidOpsError(VistrailError):
    """Op list rejected at append time; nothing was recorded."""

    code = "INVALID_OPS"

    def __init__(self, index: int, reason: str):
        super().__init__(f"op {index}: {reason}")
        self.index = index
        self.reason = reason


class UnknownTagError(VistrailError):
    code = "UNKNOWN_TAG"


class CycleError(VistrailError):
    code = "CYCLE"


class DuplicatePackageError(VistrailError):
    code = "DUPLICATE_PACKAGE"


class UnknownDescriptorError(VistrailError):
    code = "UNKNOWN_DESCRIPTOR"


class ValidationFailedError(VistrailError):
    """Workflow failed full validation; the report rides along."""

    code = "VALIDATION_FAILED"

    def __init__(self, report):
        super().__init__("; ".join(str(v) for v in report.violations))
        self.report = report


class ModuleError(VistrailError):
    """A module implementation failed; captured into the execution log."""

    code = "MODULE_ERROR"


class NotFoundError(VistrailError):
    code = "NOT_FOUND"


class CorruptDataError(VistrailError):
    """Stored bytes no longer match their content hash."""

    code = "CORRUPT"


class FormatError(VistrailError):
    """Malformed or unknown-format-version input file."""

    code = "FORMAT_ERROR"

    def __init__(self, location: str, detail: str = ""):
        super().__init__(f"{location}: {detail}" if detail else location)
        self.location = location


class IOFailureError(VistrailError):
    code = "IO_ERROR"


class PlanStaleError(VistrailError):
    code = "PLAN_STALE"


class BlockedModulesError(VistrailError):
    code = "BLOCKED_MODULES"

    def __init__(self, blocked):
        super().__init__(", ".join(f"module {b.module_id}: {b.reason}" for b in blocked))
        self.blocked = blocked


class EmptyPlanError(VistrailError):
    code = "EMPTY_PLAN"


class UnknownMashupError(VistrailError):
    code = "UNKNOWN_MASHUP"


class UnknownAliasError(VistrailError):
    code = "UNKNOWN_ALIAS"


class BadAliasError(VistrailError):
    code = "BAD_ALIAS"

    def __init__(self, alias: str, reason: str):
        super().__init__(f"{alias}: {reason}")
        self.alias = alias
        self.reason = reason


class BadValueError(VistrailError):
    code = "BAD_VALUE"


class LockedError(VistrailError):
    code = "LOCKED"
