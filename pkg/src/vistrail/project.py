"""Project directory: one vistrail plus its data, runs, packages, and config.

Layout::

    <root>/project.vtj    the vistrail
    <root>/data/          content-addressed store (objects/ + refs.json)
    <root>/runs/          one canonical JSON log per execution
    <root>/packages/      loadable package manifests (*.pkgj)
    <root>/config.json    {"allow_external_tools": bool, "default_user": str}
    <root>/HEAD           current version id (CLI convenience)
    <root>/.lock          present only while a writer is active

Mutations are single-writer: take the lock, edit, save, release. The env
vars ``VT_PROJECT`` (root override), ``VT_USER`` (action author) and
``VT_CLOCK`` (fixed action timestamp, for reproducible scripted sessions)
are honored by the CLI and service layers built on top of this.
"""

from __future__ import annotations

import os
import uuid
from datetime import datetime
from pathlib import Path

from .builtins import EngineConfig, register_builtins
from .canonical import (
    check_fields,
    expect_bool,
    expect_object,
    expect_str,
    load_json,
    now_utc,
    parse_timestamp,
    write_canonical,
)
from .datastore import DataStore
from .engine import ExecutionStore
from .errors import FormatError, LockedError, UnknownVersionError, VistrailError
from .provenance import Vistrail, load, save
from .registry import PackageRegistry, load_package_manifest

VISTRAIL_FILE = "project.vtj"
CONFIG_FILE = "config.json"
HEAD_FILE = "HEAD"
LOCK_FILE = ".lock"


class ProjectLock:
    """Exclusive on-disk writer lock (O_CREAT|O_EXCL); not reentrant."""

    def __init__(self, root: Path):
        self.path = Path(root) / LOCK_FILE
        self._fd: int | None = None

    def acquire(self) -> None:
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.write(self._fd, str(os.getpid()).encode())
        except FileExistsError:
            raise LockedError(f"another writer holds {self.path}") from None

    def release(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
            self.path.unlink(missing_ok=True)

    def __enter__(self) -> "ProjectLock":
        self.acquire()
        return self

    def __exit__(self, *exc) -> None:
        self.release()


class Project:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- creation / discovery -------------------------------------------------

    @staticmethod
    def init(root: str | Path, vistrail_id: str | None = None, default_user: str = "user") -> "Project":
        root = Path(root)
        if (root / VISTRAIL_FILE).exists():
            raise VistrailError(f"project already initialized at {root}")
        root.mkdir(parents=True, exist_ok=True)
        (root / "data").mkdir(exist_ok=True)
        (root / "runs").mkdir(exist_ok=True)
        (root / "packages").mkdir(exist_ok=True)
        save(Vistrail.create(vistrail_id or str(uuid.uuid4())), root / VISTRAIL_FILE)
        write_canonical(root / CONFIG_FILE, {"allow_external_tools": False, "default_user": default_user})
        (root / HEAD_FILE).write_text("0\n", encoding="utf-8")
        project = Project(root)
        DataStore(root / "data")  # lay out objects/ + refs.json home
        return project

    @staticmethod
    def discover(start: str | Path | None = None) -> "Project":
        """The project at $VT_PROJECT, or the nearest ancestor of the cwd
        containing a project.vtj."""
        env = os.environ.get("VT_PROJECT")
        if env:
            root = Path(env)
            if not (root / VISTRAIL_FILE).exists():
                raise VistrailError(f"VT_PROJECT={env} is not a project (no {VISTRAIL_FILE})")
            return Project(root)
        cur = Path(start or Path.cwd()).resolve()
        for candidate in (cur, *cur.parents):
            if (candidate / VISTRAIL_FILE).exists():
                return Project(candidate)
        raise VistrailError(f"no project found from {cur} upward (run `vt init` first)")

    # -- paths ----------------------------------------------------------------

    @property
    def vistrail_path(self) -> Path:
        return self.root / VISTRAIL_FILE

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def packages_dir(self) -> Path:
        return self.root / "packages"

    # -- pieces ---------------------------------------------------------------

    def lock(self) -> ProjectLock:
        return ProjectLock(self.root)

    def load_vistrail(self) -> Vistrail:
        return load(self.vistrail_path)

    def save_vistrail(self, vt: Vistrail) -> None:
        save(vt, self.vistrail_path)

    def data_store(self) -> DataStore:
        return DataStore(self.root / "data")

    def exec_store(self) -> ExecutionStore:
        return ExecutionStore.open(self.runs_dir) if self.runs_dir.exists() else ExecutionStore(self.runs_dir)

    def registry(self) -> PackageRegistry:
        """Builtins plus every manifest under packages/, in filename order."""
        reg = register_builtins(PackageRegistry())
        if self.packages_dir.exists():
            for path in sorted(self.packages_dir.glob("*.pkgj")):
                reg.register_package(load_package_manifest(path))
        return reg

    def config(self) -> dict:
        path = self.root / CONFIG_FILE
        if not path.exists():
            return {"allow_external_tools": False, "default_user": "user"}
        obj = expect_object(load_json(path), str(path))
        check_fields(obj, str(path), {"allow_external_tools", "default_user"})
        return {
            "allow_external_tools": expect_bool(obj["allow_external_tools"], "allow_external_tools"),
            "default_user": expect_str(obj["default_user"], "default_user"),
        }

    def engine_config(self) -> EngineConfig:
        return EngineConfig(allow_external_tools=self.config()["allow_external_tools"])

    # -- HEAD -----------------------------------------------------------------

    def head(self) -> int:
        try:
            return int((self.root / HEAD_FILE).read_text(encoding="utf-8").strip())
        except (OSError, ValueError):
            return 0

    def set_head(self, version: int) -> None:
        (self.root / HEAD_FILE).write_text(f"{version}\n", encoding="utf-8")

    def checkout(self, vt: Vistrail, version: int) -> None:
        if not vt.has_version(version):
            raise UnknownVersionError(version)
        self.set_head(version)

    # -- clock / author -------------------------------------------------------

    def action_author(self) -> str:
        return os.environ.get("VT_USER") or self.config()["default_user"]

    @staticmethod
    def action_clock() -> datetime:
        """Action timestamps come from VT_CLOCK when set, so scripted sessions
        can produce byte-identical vistrails."""
        fixed = os.environ.get("VT_CLOCK")
        if fixed:
            try:
                return parse_timestamp(fixed, "VT_CLOCK")
            except FormatError:
                raise VistrailError(f"VT_CLOCK must look like 2024-01-01T00:00:00Z, got {fixed!r}")
        return now_utc()
