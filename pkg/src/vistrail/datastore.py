"""Content-addressed data store with linear version chains.

Objects live at ``objects/<first2>/<rest>`` keyed by the SHA-256 of their
bytes; ``refs.json`` carries names and version links. Content is immutable:
there is no delete and no overwrite, and reads re-hash the bytes so silent
corruption surfaces as an error instead of wrong data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .canonical import (
    atomic_write_bytes,
    check_fields,
    expect_array,
    expect_int,
    expect_object,
    expect_str,
    format_timestamp,
    load_json,
    now_utc,
    parse_timestamp,
    write_canonical,
)
from .errors import CorruptDataError, IOFailureError, NotFoundError

EMPTY_CONTENT_HASH = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class DataRef:
    content_hash: str
    size_bytes: int
    created_at: datetime = field(compare=False)
    name: str | None = None
    version_of: str | None = None  # predecessor content hash

    def __post_init__(self):
        if len(self.content_hash) != 64 or any(c not in "0123456789abcdef" for c in self.content_hash):
            raise ValueError(f"not a lowercase hex SHA-256: {self.content_hash!r}")


def ref_to_obj(ref: DataRef) -> dict:
    return {
        "hash": ref.content_hash,
        "size": ref.size_bytes,
        "name": ref.name,
        "version_of": ref.version_of,
        "created_at": format_timestamp(ref.created_at),
    }


def ref_from_obj(obj: object, location: str) -> DataRef:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"hash", "size", "name", "version_of", "created_at"})
    name = obj["name"]
    version_of = obj["version_of"]
    return DataRef(
        content_hash=expect_str(obj["hash"], f"{location}.hash"),
        size_bytes=expect_int(obj["size"], f"{location}.size"),
        name=expect_str(name, f"{location}.name") if name is not None else None,
        version_of=expect_str(version_of, f"{location}.version_of") if version_of is not None else None,
        created_at=parse_timestamp(expect_str(obj["created_at"], f"{location}.created_at"), f"{location}.created_at"),
    )


class DataStore:
    """Directory-backed store. Writes are temp-file-then-rename, so a
    concurrent identical put is harmless."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        self.refs_path = self.root / "refs.json"
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self._refs: dict[str, DataRef] = {}
        if self.refs_path.exists():
            self._load_refs()

    def _load_refs(self) -> None:
        obj = expect_object(load_json(self.refs_path), str(self.refs_path))
        check_fields(obj, str(self.refs_path), {"refs"})
        for i, robj in enumerate(expect_array(obj["refs"], "refs")):
            ref = ref_from_obj(robj, f"refs[{i}]")
            self._refs[ref.content_hash] = ref

    def _save_refs(self) -> None:
        refs = [ref_to_obj(self._refs[h]) for h in sorted(self._refs)]
        write_canonical(self.refs_path, {"refs": refs})

    def _object_path(self, h: str) -> Path:
        return self.objects_dir / h[:2] / h[2:]

    def ref(self, h: str) -> DataRef:
        if h not in self._refs:
            raise NotFoundError(h)
        return self._refs[h]

    def has(self, h: str) -> bool:
        return h in self._refs or self._object_path(h).exists()

    def put(self, data: bytes, name: str | None = None) -> DataRef:
        """Store bytes, returning their ref. Idempotent: identical bytes map
        to the same hash and are not stored twice."""
        h = content_hash(data)
        existing = self._refs.get(h)
        if existing is not None:
            if name is not None and existing.name is None:
                existing = DataRef(h, existing.size_bytes, existing.created_at, name, existing.version_of)
                self._refs[h] = existing
                self._save_refs()
            return existing
        path = self._object_path(h)
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            atomic_write_bytes(path, data)
        ref = DataRef(content_hash=h, size_bytes=len(data), created_at=now_utc(), name=name)
        self._refs[h] = ref
        self._save_refs()
        return ref

    def get(self, h: str) -> bytes:
        """Read bytes by hash; the store self-verifies the content on read."""
        path = self._object_path(h)
        if not path.exists():
            raise NotFoundError(h)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise IOFailureError(f"{path}: {exc}") from exc
        if content_hash(data) != h:
            raise CorruptDataError(f"object {h} fails hash verification")
        return data

    def new_version(self, predecessor: str, data: bytes, name: str | None = None) -> DataRef:
        """Store ``data`` as the successor of ``predecessor`` in a linear
        version chain. Re-putting the predecessor's own bytes is a no-op."""
        if predecessor not in self._refs:
            raise NotFoundError(predecessor)
        h = content_hash(data)
        if h == predecessor:
            return self._refs[predecessor]
        if h in self._refs:
            # only attach a link if the ref is still chainless and linking
            # cannot close a cycle through the predecessor's own history
            existing = self._refs[h]
            if existing.version_of is None and h not in self._history_hashes(predecessor):
                existing = DataRef(h, existing.size_bytes, existing.created_at, existing.name or name, predecessor)
                self._refs[h] = existing
                self._save_refs()
            return self._refs[h]
        path = self._object_path(h)
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_bytes(path, data)
        ref = DataRef(content_hash=h, size_bytes=len(data), created_at=now_utc(), name=name, version_of=predecessor)
        self._refs[h] = ref
        self._save_refs()
        return ref

    def _history_hashes(self, h: str) -> set[str]:
        seen = set()
        cur: str | None = h
        while cur is not None and cur in self._refs and cur not in seen:
            seen.add(cur)
            cur = self._refs[cur].version_of
        return seen

    def history(self, h: str) -> list[DataRef]:
        """The version chain from ``h`` back to its first version."""
        chain = []
        cur: str | None = h
        seen: set[str] = set()
        while cur is not None:
            if cur in seen:
                raise CorruptDataError(f"version chain through {h} has a cycle")
            seen.add(cur)
            chain.append(self.ref(cur))
            cur = chain[-1].version_of
        return chain

    def refs(self) -> list[DataRef]:
        return [self._refs[h] for h in sorted(self._refs)]
