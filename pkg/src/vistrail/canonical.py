"""Canonical JSON encoding shared by every on-disk artifact and API response.

One rendering for one value: object keys sorted lexicographically, 2-space
indent, "\n" line endings, floats in shortest round-trip decimal form,
NaN/Infinity rejected. Files are UTF-8 and end with a newline, and writes
go through a temp file + rename so a crash never leaves a torn file.
"""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .errors import FormatError, IOFailureError

TIMESTAMP_FMT = "%Y-%m-%dT%H:%M:%SZ"


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def canonical_dump_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IOFailureError(f"{path}: {exc}") from exc


def write_canonical(path: Path, obj: Any) -> None:
    atomic_write_bytes(path, canonical_dump_bytes(obj))


def load_json(path: Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailureError(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), f"invalid JSON: {exc}") from exc


def format_timestamp(ts: datetime) -> str:
    """Render a UTC instant at seconds precision (the action wire format)."""
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FMT)


def parse_timestamp(text: str, location: str = "timestamp") -> datetime:
    try:
        return datetime.strptime(text, TIMESTAMP_FMT).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise FormatError(location, f"bad timestamp {text!r}") from exc


def now_utc() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


# -- strict object readers ---------------------------------------------------
#
# Loaders are strict: a key the schema does not know is a FORMAT_ERROR, not
# silently ignored data. `location` strings build up JSON-pointer-ish paths
# ("actions[3].ops[0]") so parse failures point at the offending node.


def expect_object(value: Any, location: str) -> dict:
    if not isinstance(value, dict):
        raise FormatError(location, f"expected object, got {type(value).__name__}")
    return value


def expect_array(value: Any, location: str) -> list:
    if not isinstance(value, list):
        raise FormatError(location, f"expected array, got {type(value).__name__}")
    return value


def expect_str(value: Any, location: str) -> str:
    if not isinstance(value, str):
        raise FormatError(location, f"expected string, got {type(value).__name__}")
    return value


def expect_int(value: Any, location: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise FormatError(location, f"expected integer, got {type(value).__name__}")
    return value


def expect_bool(value: Any, location: str) -> bool:
    if not isinstance(value, bool):
        raise FormatError(location, f"expected boolean, got {type(value).__name__}")
    return value


def check_fields(obj: dict, location: str, required: set[str], optional: set[str] = frozenset()) -> None:
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise FormatError(location, f"unknown field {sorted(unknown)[0]!r}")
    missing = required - set(obj)
    if missing:
        raise FormatError(location, f"missing field {sorted(missing)[0]!r}")
