"""Append-only action tree with materialization by replay.

A vistrail never stores workflows. It stores the edit actions that produced
them; any version is rebuilt on demand by replaying the root-to-version path.
Version 0 is the implicit empty workflow and has no action record. Actions
are immutable once appended and ids (actions, modules, connections) are
allocated from counters that never go backwards, so an op means the same
thing on every branch.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .canonical import (
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
from .errors import (
    BadValueError,
    FormatError,
    InvalidOpsError,
    OpNotApplicableError,
    UnknownTagError,
    UnknownVersionError,
)
from .model import (
    AddConnection,
    AddModule,
    EMPTY_WORKFLOW,
    PrimitiveOp,
    Value,
    Workflow,
    apply_op,
    op_from_obj,
    op_to_obj,
    value_from_obj,
    value_to_obj,
)

FORMAT_VERSION = 1
ROOT_VERSION = 0


@dataclass(frozen=True)
class Action:
    """One atomic edit step; its id is the version it creates."""

    action_id: int
    parent_id: int
    timestamp: datetime = field(compare=False)  # recorded, not part of identity
    user: str
    note: str
    ops: tuple[PrimitiveOp, ...]

    def __post_init__(self):
        if self.action_id <= self.parent_id:
            raise ValueError(f"action {self.action_id} must exceed parent {self.parent_id}")
        if not self.ops:
            raise ValueError(f"action {self.action_id} has no ops")


@dataclass(frozen=True)
class MashupAlias:
    alias: str
    module_id: int
    param_name: str
    default: Value
    choices: tuple[Value, ...] | None = None


@dataclass(frozen=True)
class Mashup:
    """Parameter-aliased, re-runnable view over one pinned workflow version."""

    mashup_id: str
    version: int
    title: str
    aliases: tuple[MashupAlias, ...] = ()

    def alias(self, name: str) -> MashupAlias | None:
        return next((a for a in self.aliases if a.alias == name), None)


@dataclass
class Vistrail:
    vistrail_id: str
    actions: dict[int, Action] = field(default_factory=dict)
    next_action_id: int = 1
    next_module_id: int = 1
    next_connection_id: int = 1
    tags: dict[str, int] = field(default_factory=dict)
    annotations: dict[int, dict[str, str]] = field(default_factory=dict)
    mashups: dict[str, Mashup] = field(default_factory=dict)

    @staticmethod
    def create(vistrail_id: str | None = None) -> "Vistrail":
        return Vistrail(vistrail_id=vistrail_id or str(uuid.uuid4()))

    def has_version(self, v: int) -> bool:
        return v == ROOT_VERSION or v in self.actions

    def require_version(self, v: int) -> None:
        if not self.has_version(v):
            raise UnknownVersionError(v)

    def versions(self) -> list[int]:
        return [ROOT_VERSION] + sorted(self.actions)

    def children(self, v: int) -> list[int]:
        return sorted(a.action_id for a in self.actions.values() if a.parent_id == v)

    def allocate_module_id(self) -> int:
        mid = self.next_module_id
        self.next_module_id += 1
        return mid

    def allocate_connection_id(self) -> int:
        cid = self.next_connection_id
        self.next_connection_id += 1
        return cid

    def used_module_ids(self) -> set[int]:
        return {
            op.module.module_id
            for a in self.actions.values()
            for op in a.ops
            if isinstance(op, AddModule)
        }

    def used_connection_ids(self) -> set[int]:
        return {
            op.connection.connection_id
            for a in self.actions.values()
            for op in a.ops
            if isinstance(op, AddConnection)
        }


# -- core operations ---------------------------------------------------------


def append_action(
    vt: Vistrail,
    parent: int,
    ops: list[PrimitiveOp],
    user: str = "",
    note: str = "",
    timestamp: datetime | None = None,
) -> int:
    """Append one action under ``parent`` and return the new version id.

    All-or-nothing: every op is replay-checked against the materialized
    parent (and id freshness checked against the entire tree) before
    anything is recorded.
    """
    vt.require_version(parent)
    if not ops:
        raise InvalidOpsError(0, "empty op list")

    used_modules = vt.used_module_ids()
    used_connections = vt.used_connection_ids()
    state = materialize(vt, parent)
    for i, op in enumerate(ops):
        if isinstance(op, AddModule):
            mid = op.module.module_id
            if mid <= 0:
                raise InvalidOpsError(i, f"module id {mid} must be positive")
            if mid in used_modules:
                raise InvalidOpsError(i, f"module id {mid} was already used in this vistrail")
            used_modules.add(mid)
        elif isinstance(op, AddConnection):
            cid = op.connection.connection_id
            if cid <= 0:
                raise InvalidOpsError(i, f"connection id {cid} must be positive")
            if cid in used_connections:
                raise InvalidOpsError(i, f"connection id {cid} was already used in this vistrail")
            used_connections.add(cid)
        try:
            state = apply_op(state, op)
        except OpNotApplicableError as exc:
            raise InvalidOpsError(i, str(exc)) from exc

    version = vt.next_action_id
    vt.actions[version] = Action(
        action_id=version,
        parent_id=parent,
        timestamp=timestamp or now_utc(),
        user=user,
        note=note,
        ops=tuple(ops),
    )
    vt.next_action_id = version + 1
    if used_modules:
        vt.next_module_id = max(vt.next_module_id, max(used_modules) + 1)
    if used_connections:
        vt.next_connection_id = max(vt.next_connection_id, max(used_connections) + 1)
    return version


def path_to_root(vt: Vistrail, v: int) -> list[int]:
    """Version ids from the root to ``v``, inclusive (root first)."""
    vt.require_version(v)
    path = []
    cur = v
    while cur != ROOT_VERSION:
        path.append(cur)
        cur = vt.actions[cur].parent_id
    path.append(ROOT_VERSION)
    path.reverse()
    return path


def materialize(vt: Vistrail, v: int) -> Workflow:
    """Replay all actions on the root-to-``v`` path over the empty workflow."""
    w = EMPTY_WORKFLOW
    for version in path_to_root(vt, v)[1:]:
        for op in vt.actions[version].ops:
            w = apply_op(w, op)
    return w


def materialize_all(vt: Vistrail) -> dict[int, Workflow]:
    """Every version's workflow, each built from its parent's. Equivalent to
    materialize() per version but linear in total op count."""
    out: dict[int, Workflow] = {ROOT_VERSION: EMPTY_WORKFLOW}
    for version in sorted(vt.actions):
        action = vt.actions[version]
        w = out[action.parent_id]
        for op in action.ops:
            w = apply_op(w, op)
        out[version] = w
    return out


def tag(vt: Vistrail, v: int, name: str) -> None:
    """Point ``name`` at version ``v``; re-tagging an existing name moves it."""
    vt.require_version(v)
    if not name:
        raise BadValueError("tag name must be non-empty")
    vt.tags[name] = v


def untag(vt: Vistrail, name: str) -> None:
    if name not in vt.tags:
        raise UnknownTagError(name)
    del vt.tags[name]


def resolve_tag(vt: Vistrail, name: str) -> int:
    if name not in vt.tags:
        raise UnknownTagError(name)
    return vt.tags[name]


def annotate(vt: Vistrail, v: int, key: str, value: str) -> None:
    vt.require_version(v)
    vt.annotations.setdefault(v, {})[key] = value


@dataclass(frozen=True)
class VersionEntry:
    version_id: int
    parent_id: int | None
    timestamp: datetime | None
    user: str
    note: str
    tags: tuple[str, ...]


def version_tree(vt: Vistrail) -> list[VersionEntry]:
    tags_by_version: dict[int, list[str]] = {}
    for name, v in vt.tags.items():
        tags_by_version.setdefault(v, []).append(name)
    entries = [
        VersionEntry(
            version_id=ROOT_VERSION,
            parent_id=None,
            timestamp=None,
            user="",
            note="",
            tags=tuple(sorted(tags_by_version.get(ROOT_VERSION, []))),
        )
    ]
    for v in sorted(vt.actions):
        a = vt.actions[v]
        entries.append(
            VersionEntry(
                version_id=v,
                parent_id=a.parent_id,
                timestamp=a.timestamp,
                user=a.user,
                note=a.note,
                tags=tuple(sorted(tags_by_version.get(v, []))),
            )
        )
    return entries


# -- diff --------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterChange:
    module_id: int
    param_name: str
    value_in_v1: Value | None  # None = unset on that side
    value_in_v2: Value | None


@dataclass(frozen=True)
class VersionDelta:
    added_modules: frozenset[int]
    deleted_modules: frozenset[int]
    shared_modules: frozenset[int]
    parameter_changes: tuple[ParameterChange, ...]
    added_connections: frozenset[int]
    deleted_connections: frozenset[int]

    @property
    def empty(self) -> bool:
        """No differences (shared modules are context, not a difference)."""
        return not (
            self.added_modules
            or self.deleted_modules
            or self.parameter_changes
            or self.added_connections
            or self.deleted_connections
        )


def lowest_common_ancestor(vt: Vistrail, v1: int, v2: int) -> int:
    ancestors = set(path_to_root(vt, v1))
    for v in reversed(path_to_root(vt, v2)):
        if v in ancestors:
            return v
    return ROOT_VERSION


def delta_between(w1: Workflow, w2: Workflow) -> VersionDelta:
    """Structural delta of two workflows. Because ids are never reused, set
    comparison on ids is exact."""
    ids1, ids2 = set(w1.modules), set(w2.modules)
    shared = ids1 & ids2
    changes = []
    for mid in sorted(shared):
        p1 = w1.modules[mid].parameter_values
        p2 = w2.modules[mid].parameter_values
        for name in sorted(set(p1) | set(p2)):
            if p1.get(name) != p2.get(name):
                changes.append(ParameterChange(mid, name, p1.get(name), p2.get(name)))
    return VersionDelta(
        added_modules=frozenset(ids2 - ids1),
        deleted_modules=frozenset(ids1 - ids2),
        shared_modules=frozenset(shared),
        parameter_changes=tuple(changes),
        added_connections=frozenset(set(w2.connections) - set(w1.connections)),
        deleted_connections=frozenset(set(w1.connections) - set(w2.connections)),
    )


def diff(vt: Vistrail, v1: int, v2: int) -> VersionDelta:
    """Delta derived from recorded actions: materialize the lowest common
    ancestor once, then replay each branch's ops down to v1 and v2."""
    vt.require_version(v1)
    vt.require_version(v2)
    lca = lowest_common_ancestor(vt, v1, v2)
    base = materialize(vt, lca)

    def branch(target: int) -> Workflow:
        path = path_to_root(vt, target)
        w = base
        for version in path[path.index(lca) + 1 :]:
            for op in vt.actions[version].ops:
                w = apply_op(w, op)
        return w

    return delta_between(branch(v1), branch(v2))


# -- serialization (.vtj) ----------------------------------------------------


def action_to_obj(a: Action) -> dict:
    return {
        "id": a.action_id,
        "parent": a.parent_id,
        "timestamp": format_timestamp(a.timestamp),
        "user": a.user,
        "note": a.note,
        "ops": [op_to_obj(op) for op in a.ops],
    }


def action_from_obj(obj: object, location: str) -> Action:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"id", "parent", "timestamp", "user", "note", "ops"})
    ops_raw = expect_array(obj["ops"], f"{location}.ops")
    if not ops_raw:
        raise FormatError(f"{location}.ops", "empty op list")
    action_id = expect_int(obj["id"], f"{location}.id")
    parent_id = expect_int(obj["parent"], f"{location}.parent")
    if action_id <= parent_id:
        raise FormatError(f"{location}.id", f"action {action_id} must exceed parent {parent_id}")
    return Action(
        action_id=action_id,
        parent_id=parent_id,
        timestamp=parse_timestamp(expect_str(obj["timestamp"], f"{location}.timestamp"), f"{location}.timestamp"),
        user=expect_str(obj["user"], f"{location}.user"),
        note=expect_str(obj["note"], f"{location}.note"),
        ops=tuple(op_from_obj(op, f"{location}.ops[{i}]") for i, op in enumerate(ops_raw)),
    )


def mashup_to_obj(m: Mashup) -> dict:
    aliases = []
    for a in m.aliases:
        entry = {
            "alias": a.alias,
            "module_id": a.module_id,
            "parameter": a.param_name,
            "default": value_to_obj(a.default),
        }
        if a.choices is not None:
            entry["choices"] = [value_to_obj(c) for c in a.choices]
        aliases.append(entry)
    return {"id": m.mashup_id, "version": m.version, "title": m.title, "aliases": aliases}


def mashup_from_obj(obj: object, location: str) -> Mashup:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"id", "version", "title", "aliases"})
    aliases = []
    for i, aobj in enumerate(expect_array(obj["aliases"], f"{location}.aliases")):
        aloc = f"{location}.aliases[{i}]"
        aobj = expect_object(aobj, aloc)
        check_fields(aobj, aloc, {"alias", "module_id", "parameter", "default"}, optional={"choices"})
        choices = None
        if "choices" in aobj:
            choices = tuple(
                value_from_obj(c, f"{aloc}.choices[{j}]")
                for j, c in enumerate(expect_array(aobj["choices"], f"{aloc}.choices"))
            )
        aliases.append(
            MashupAlias(
                alias=expect_str(aobj["alias"], f"{aloc}.alias"),
                module_id=expect_int(aobj["module_id"], f"{aloc}.module_id"),
                param_name=expect_str(aobj["parameter"], f"{aloc}.parameter"),
                default=value_from_obj(aobj["default"], f"{aloc}.default"),
                choices=choices,
            )
        )
    return Mashup(
        mashup_id=expect_str(obj["id"], f"{location}.id"),
        version=expect_int(obj["version"], f"{location}.version"),
        title=expect_str(obj["title"], f"{location}.title"),
        aliases=tuple(aliases),
    )


def vistrail_to_obj(vt: Vistrail) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "vistrail_id": vt.vistrail_id,
        "counters": {
            "action": vt.next_action_id,
            "module": vt.next_module_id,
            "connection": vt.next_connection_id,
        },
        "actions": [action_to_obj(vt.actions[v]) for v in sorted(vt.actions)],
        "tags": dict(sorted(vt.tags.items())),
        "annotations": {
            str(v): dict(sorted(keys.items())) for v, keys in sorted(vt.annotations.items()) if keys
        },
        "mashups": [mashup_to_obj(vt.mashups[mid]) for mid in sorted(vt.mashups)],
    }


def vistrail_from_obj(obj: object, location: str = "vistrail") -> Vistrail:
    obj = expect_object(obj, location)
    check_fields(
        obj,
        location,
        {"format_version", "vistrail_id", "counters", "actions", "tags", "annotations", "mashups"},
    )
    fmt = expect_int(obj["format_version"], f"{location}.format_version")
    if fmt != FORMAT_VERSION:
        raise FormatError(f"{location}.format_version", f"unsupported format_version {fmt}")

    counters = expect_object(obj["counters"], f"{location}.counters")
    check_fields(counters, f"{location}.counters", {"action", "module", "connection"})

    vt = Vistrail(
        vistrail_id=expect_str(obj["vistrail_id"], f"{location}.vistrail_id"),
        next_action_id=expect_int(counters["action"], f"{location}.counters.action"),
        next_module_id=expect_int(counters["module"], f"{location}.counters.module"),
        next_connection_id=expect_int(counters["connection"], f"{location}.counters.connection"),
    )

    for i, aobj in enumerate(expect_array(obj["actions"], f"{location}.actions")):
        action = action_from_obj(aobj, f"{location}.actions[{i}]")
        if action.action_id in vt.actions:
            raise FormatError(f"{location}.actions[{i}]", f"duplicate action id {action.action_id}")
        vt.actions[action.action_id] = action

    for i, action in enumerate(vt.actions.values()):
        if not vt.has_version(action.parent_id):
            raise FormatError(f"{location}.actions", f"action {action.action_id}: unknown parent {action.parent_id}")

    for name, v in expect_object(obj["tags"], f"{location}.tags").items():
        v = expect_int(v, f"{location}.tags.{name}")
        if not vt.has_version(v):
            raise FormatError(f"{location}.tags.{name}", f"unknown version {v}")
        vt.tags[name] = v

    for vs, keys in expect_object(obj["annotations"], f"{location}.annotations").items():
        try:
            v = int(vs)
        except ValueError as exc:
            raise FormatError(f"{location}.annotations.{vs}", "version key must be an integer string") from exc
        if not vt.has_version(v):
            raise FormatError(f"{location}.annotations.{vs}", f"unknown version {v}")
        keys = expect_object(keys, f"{location}.annotations.{vs}")
        vt.annotations[v] = {k: expect_str(val, f"{location}.annotations.{vs}.{k}") for k, val in keys.items()}

    for i, mobj in enumerate(expect_array(obj["mashups"], f"{location}.mashups")):
        m = mashup_from_obj(mobj, f"{location}.mashups[{i}]")
        if m.mashup_id in vt.mashups:
            raise FormatError(f"{location}.mashups[{i}]", f"duplicate mashup id {m.mashup_id}")
        if not vt.has_version(m.version):
            raise FormatError(f"{location}.mashups[{i}].version", f"unknown version {m.version}")
        vt.mashups[m.mashup_id] = m

    # counters must strictly exceed every id in use
    max_action = max(vt.actions, default=0)
    if vt.next_action_id <= max_action:
        raise FormatError(f"{location}.counters.action", f"counter {vt.next_action_id} <= max action id {max_action}")
    max_module = max(vt.used_module_ids(), default=0)
    if vt.next_module_id <= max_module:
        raise FormatError(f"{location}.counters.module", f"counter {vt.next_module_id} <= max module id {max_module}")
    max_conn = max(vt.used_connection_ids(), default=0)
    if vt.next_connection_id <= max_conn:
        raise FormatError(
            f"{location}.counters.connection", f"counter {vt.next_connection_id} <= max connection id {max_conn}"
        )
    return vt


def save(vt: Vistrail, path: str | Path) -> None:
    """Canonical, atomic write: same vistrail in, same bytes out."""
    write_canonical(Path(path), vistrail_to_obj(vt))


def load(path: str | Path) -> Vistrail:
    return vistrail_from_obj(load_json(Path(path)), str(path))
