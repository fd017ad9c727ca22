"""Parameter-aliased, re-runnable views over a pinned workflow version.

A mashup binds friendly alias names to (module, parameter) targets of one
exact version id (never a tag, so later edits cannot change what a published
mashup runs). Running one never creates a new version: bindings become
ephemeral overrides and the run's provenance lives in its execution log.
"""

from __future__ import annotations

import uuid

from .builtins import EngineConfig
from .datastore import DataStore
from .engine import ExecutionLog, ExecutionStore, execute
from .errors import BadAliasError, BadValueError, UnknownAliasError, UnknownMashupError
from .model import Value
from .provenance import Mashup, MashupAlias, Vistrail, materialize
from .registry import PackageRegistry


def create_mashup(
    vt: Vistrail,
    version: int,
    title: str,
    aliases: list[MashupAlias],
    reg: PackageRegistry,
    mashup_id: str | None = None,
) -> str:
    """Validate alias targets against the pinned version and store the mashup
    inside the vistrail (it serializes with it)."""
    vt.require_version(version)
    w = materialize(vt, version)
    seen_names: set[str] = set()
    seen_targets: set[tuple[int, str]] = set()
    for a in aliases:
        if not a.alias:
            raise BadAliasError(a.alias, "EMPTY_NAME")
        if a.alias in seen_names:
            raise BadAliasError(a.alias, "DUPLICATE")
        seen_names.add(a.alias)
        mod = w.modules.get(a.module_id)
        if mod is None:
            raise BadAliasError(a.alias, f"UNKNOWN_MODULE: {a.module_id}")
        desc = reg.try_lookup(mod.descriptor_key)
        param = desc.parameter(a.param_name) if desc else None
        if param is None:
            raise BadAliasError(a.alias, f"UNKNOWN_PARAM: {a.module_id}.{a.param_name}")
        target = (a.module_id, a.param_name)
        if target in seen_targets:
            raise BadAliasError(a.alias, f"DUPLICATE_TARGET: {a.module_id}.{a.param_name}")
        seen_targets.add(target)
        if not a.default.matches(param.value_type):
            raise BadAliasError(a.alias, f"TYPE_MISMATCH: default is {a.default.kind.value}")
        for choice in a.choices or ():
            if not choice.matches(param.value_type):
                raise BadAliasError(a.alias, f"TYPE_MISMATCH: choice {choice.render()}")

    mid = mashup_id or str(uuid.uuid4())
    vt.mashups[mid] = Mashup(mashup_id=mid, version=version, title=title, aliases=tuple(aliases))
    return mid


def execute_mashup(
    vt: Vistrail,
    mashup_id: str,
    bindings: dict[str, Value],
    reg: PackageRegistry,
    store: DataStore,
    config: EngineConfig | None = None,
    exec_store: ExecutionStore | None = None,
) -> ExecutionLog:
    """Run the pinned version with alias bindings as parameter overrides;
    unbound aliases fall back to their declared defaults."""
    mashup = vt.mashups.get(mashup_id)
    if mashup is None:
        raise UnknownMashupError(mashup_id)
    for name in bindings:
        if mashup.alias(name) is None:
            raise UnknownAliasError(name)

    w = materialize(vt, mashup.version)
    overrides: dict[tuple[int, str], Value] = {}
    for a in mashup.aliases:
        value = bindings.get(a.alias, a.default)
        if a.choices is not None and value not in a.choices:
            raise BadValueError(f"{a.alias}: {value.render()} is not one of the declared choices")
        mod = w.modules.get(a.module_id)
        desc = reg.try_lookup(mod.descriptor_key) if mod else None
        param = desc.parameter(a.param_name) if desc else None
        if param is not None and not value.matches(param.value_type):
            raise BadValueError(f"{a.alias}: expects {param.value_type.value}, got {value.kind.value}")
        overrides[(a.module_id, a.param_name)] = value

    return execute(
        vt,
        mashup.version,
        reg,
        store,
        overrides=overrides,
        config=config,
        exec_store=exec_store,
        note=f"mashup:{mashup_id}",
    )
