"""Workflow execution with complete, persisted logging.

Runs a materialized version in topological order and records, per module,
the resolved parameters, every input and output value, timing, and status.
Module failures are data (captured into the log, downstream modules become
``skipped``); only broken preconditions raise. A log is persisted only after
every dataref it mentions resolves in the data store.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .builtins import EngineConfig, ExternalToolFailure, run_builtin
from .canonical import (
    check_fields,
    expect_array,
    expect_int,
    expect_object,
    expect_str,
    load_json,
    write_canonical,
)
from .datastore import DataStore
from .errors import FormatError, ModuleError, NotFoundError, ValidationFailedError
from .model import (
    DescriptorKey,
    ModuleDescriptor,
    Value,
    ValidationReport,
    Violation,
    Workflow,
    topological_order,
    validate_workflow,
    value_from_obj,
    value_to_obj,
)
from .provenance import Vistrail, materialize
from .registry import PackageRegistry

LOG_TIMESTAMP_FMT = "%Y-%m-%dT%H:%M:%S.%fZ"  # microseconds: module timings matter here


def _format_instant(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(LOG_TIMESTAMP_FMT)


def _parse_instant(text: str, location: str) -> datetime:
    try:
        return datetime.strptime(text, LOG_TIMESTAMP_FMT).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise FormatError(location, f"bad timestamp {text!r}") from exc


def _now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class ModuleExecution:
    module_id: int
    descriptor_key: DescriptorKey
    started_at: datetime
    finished_at: datetime
    status: str  # success | failed | skipped
    resolved_params: dict[str, Value] = field(default_factory=dict)
    inputs: dict[str, Value] = field(default_factory=dict)
    outputs: dict[str, Value] = field(default_factory=dict)
    error: str | None = None
    command: str | None = None  # ExternalTool: fully substituted command line
    exit_code: int | None = None


@dataclass(frozen=True)
class ExecutionLog:
    exec_id: str
    vistrail_id: str
    version: int
    started_at: datetime
    finished_at: datetime
    status: str  # success | failed | partial
    note: str = ""
    module_executions: tuple[ModuleExecution, ...] = ()


def resolve_parameters(
    desc: ModuleDescriptor,
    stored: dict[str, Value],
    overrides: dict[str, Value],
) -> dict[str, Value]:
    """overrides > stored values > descriptor defaults, per declared parameter."""
    out: dict[str, Value] = {}
    for param in desc.parameters:
        if param.name in overrides:
            out[param.name] = overrides[param.name]
        elif param.name in stored:
            out[param.name] = stored[param.name]
        else:
            out[param.name] = param.default
    return out


def run_module(
    descriptor_key: DescriptorKey,
    inputs: dict[str, Value],
    params: dict[str, Value],
    store: DataStore,
    reg: PackageRegistry,
    config: EngineConfig | None = None,
) -> dict[str, Value]:
    """Run one module in isolation; raises MODULE_ERROR on failure."""
    desc = reg.lookup_descriptor(descriptor_key)
    resolved = resolve_parameters(desc, params, {})
    return run_builtin(desc, inputs, resolved, store, config or EngineConfig()).outputs


def _check_overrides(w: Workflow, reg: PackageRegistry, overrides: dict[tuple[int, str], Value]) -> None:
    violations = []
    for (mid, name), value in sorted(overrides.items()):
        mod = w.modules.get(mid)
        if mod is None:
            violations.append(Violation("BAD_PARAM", f"override targets missing module {mid}", module_id=mid))
            continue
        desc = reg.try_lookup(mod.descriptor_key)
        param = desc.parameter(name) if desc else None
        if param is None:
            violations.append(Violation("BAD_PARAM", f"override targets unknown parameter {mid}.{name}", module_id=mid))
        elif not value.matches(param.value_type):
            violations.append(
                Violation(
                    "BAD_PARAM",
                    f"override {mid}.{name} expects {param.value_type.value}, got {value.kind.value}",
                    module_id=mid,
                )
            )
    if violations:
        raise ValidationFailedError(ValidationReport(tuple(violations)))


def execute(
    vt: Vistrail,
    version: int,
    reg: PackageRegistry,
    store: DataStore,
    overrides: dict[tuple[int, str], Value] | None = None,
    config: EngineConfig | None = None,
    exec_store: "ExecutionStore | None" = None,
    note: str = "",
) -> ExecutionLog:
    """Execute a version and return (and optionally persist) its log."""
    overrides = overrides or {}
    config = config or EngineConfig()
    w = materialize(vt, version)
    report = validate_workflow(w, reg)
    if not report.ok:
        raise ValidationFailedError(report)
    _check_overrides(w, reg, overrides)

    started = _now()
    order = topological_order(w)
    entries: list[ModuleExecution] = []
    produced: dict[int, ModuleExecution] = {}

    for mid in order:
        mod = w.modules[mid]
        desc = reg.lookup_descriptor(mod.descriptor_key)
        mod_overrides = {name: v for (omid, name), v in overrides.items() if omid == mid}
        resolved = resolve_parameters(desc, mod.parameter_values, mod_overrides)

        upstream_bad = False
        inputs: dict[str, Value] = {}
        for c in sorted(w.connections.values(), key=lambda c: c.connection_id):
            if c.target_module != mid:
                continue
            src = produced[c.source_module]
            if src.status != "success":
                upstream_bad = True
                continue
            if c.source_port in src.outputs:
                inputs[c.target_port] = src.outputs[c.source_port]

        t0 = _now()
        if upstream_bad:
            entry = ModuleExecution(
                module_id=mid,
                descriptor_key=mod.descriptor_key,
                started_at=t0,
                finished_at=t0,
                status="skipped",
                resolved_params=resolved,
            )
        else:
            try:
                result = run_builtin(desc, inputs, resolved, store, config)
                entry = ModuleExecution(
                    module_id=mid,
                    descriptor_key=mod.descriptor_key,
                    started_at=t0,
                    finished_at=_now(),
                    status="success",
                    resolved_params=resolved,
                    inputs=inputs,
                    outputs=result.outputs,
                    command=result.command,
                    exit_code=result.exit_code,
                )
            except ModuleError as exc:
                entry = ModuleExecution(
                    module_id=mid,
                    descriptor_key=mod.descriptor_key,
                    started_at=t0,
                    finished_at=_now(),
                    status="failed",
                    resolved_params=resolved,
                    inputs=inputs,
                    error=str(exc),
                    command=exc.command if isinstance(exc, ExternalToolFailure) else None,
                    exit_code=exc.exit_code if isinstance(exc, ExternalToolFailure) else None,
                )
        produced[mid] = entry
        entries.append(entry)

    status = "failed" if any(e.status == "failed" for e in entries) else "success"
    log = ExecutionLog(
        exec_id=str(uuid.uuid4()),
        vistrail_id=vt.vistrail_id,
        version=version,
        started_at=started,
        finished_at=_now(),
        status=status,
        note=note,
        module_executions=tuple(entries),
    )
    _check_datarefs_resolve(log, store)
    if exec_store is not None:
        exec_store.append(log)
    return log


def _check_datarefs_resolve(log: ExecutionLog, store: DataStore) -> None:
    # strong provenance link: a log may never cite data the store cannot serve
    for entry in log.module_executions:
        for values in (entry.resolved_params, entry.inputs, entry.outputs):
            for name, value in values.items():
                if value.kind.value == "dataref" and not store.has(value.raw):
                    raise NotFoundError(f"log {log.exec_id}: module {entry.module_id} {name} -> {value.raw}")


# -- log store & queries -------------------------------------------------------


class ExecutionStore:
    """Append-only collection of logs, optionally mirrored to a directory as
    one canonical JSON file per run."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self._logs: dict[str, ExecutionLog] = {}

    @staticmethod
    def open(root: str | Path) -> "ExecutionStore":
        store = ExecutionStore(root)
        for path in sorted(store.root.glob("*.json")):
            log = log_from_obj(load_json(path), str(path))
            store._logs[log.exec_id] = log
        return store

    def append(self, log: ExecutionLog) -> None:
        if log.exec_id in self._logs:
            raise ValueError(f"exec_id {log.exec_id} already stored")
        self._logs[log.exec_id] = log
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            write_canonical(self.root / f"{log.exec_id}.json", log_to_obj(log))

    def get(self, exec_id: str) -> ExecutionLog:
        if exec_id not in self._logs:
            raise NotFoundError(exec_id)
        return self._logs[exec_id]

    def query(
        self,
        version: int | None = None,
        since: datetime | None = None,
        until: datetime | None = None,
        status: str | None = None,
    ) -> list[ExecutionLog]:
        out = []
        for log in self._logs.values():
            if version is not None and log.version != version:
                continue
            if since is not None and log.started_at < since:
                continue
            if until is not None and log.started_at > until:
                continue
            if status is not None and log.status != status:
                continue
            out.append(log)
        return sorted(out, key=lambda l: (l.started_at, l.exec_id))


def query_log(
    exec_store: ExecutionStore,
    version: int | None = None,
    since: datetime | None = None,
    until: datetime | None = None,
    status: str | None = None,
) -> list[ExecutionLog]:
    return exec_store.query(version=version, since=since, until=until, status=status)


# -- serialization ---------------------------------------------------------------


def _values_obj(values: dict[str, Value]) -> dict:
    return {name: value_to_obj(v) for name, v in sorted(values.items())}


def module_execution_to_obj(e: ModuleExecution) -> dict:
    obj = {
        "module_id": e.module_id,
        "package": e.descriptor_key[0],
        "package_version": e.descriptor_key[1],
        "name": e.descriptor_key[2],
        "started_at": _format_instant(e.started_at),
        "finished_at": _format_instant(e.finished_at),
        "status": e.status,
        "resolved_params": _values_obj(e.resolved_params),
        "inputs": _values_obj(e.inputs),
        "outputs": _values_obj(e.outputs),
        "error": e.error,
    }
    if e.command is not None:
        obj["command"] = e.command
    if e.exit_code is not None:
        obj["exit_code"] = e.exit_code
    return obj


def log_to_obj(log: ExecutionLog) -> dict:
    return {
        "exec_id": log.exec_id,
        "vistrail_id": log.vistrail_id,
        "version": log.version,
        "started_at": _format_instant(log.started_at),
        "finished_at": _format_instant(log.finished_at),
        "status": log.status,
        "note": log.note,
        "module_executions": [module_execution_to_obj(e) for e in log.module_executions],
    }


def _values_from_obj(obj: object, location: str) -> dict[str, Value]:
    obj = expect_object(obj, location)
    return {name: value_from_obj(v, f"{location}.{name}") for name, v in obj.items()}


def module_execution_from_obj(obj: object, location: str) -> ModuleExecution:
    obj = expect_object(obj, location)
    check_fields(
        obj,
        location,
        {
            "module_id", "package", "package_version", "name", "started_at",
            "finished_at", "status", "resolved_params", "inputs", "outputs", "error",
        },
        optional={"command", "exit_code"},
    )
    status = expect_str(obj["status"], f"{location}.status")
    if status not in ("success", "failed", "skipped"):
        raise FormatError(f"{location}.status", f"unknown status {status!r}")
    error = obj["error"]
    return ModuleExecution(
        module_id=expect_int(obj["module_id"], f"{location}.module_id"),
        descriptor_key=(
            expect_str(obj["package"], f"{location}.package"),
            expect_str(obj["package_version"], f"{location}.package_version"),
            expect_str(obj["name"], f"{location}.name"),
        ),
        started_at=_parse_instant(expect_str(obj["started_at"], f"{location}.started_at"), f"{location}.started_at"),
        finished_at=_parse_instant(expect_str(obj["finished_at"], f"{location}.finished_at"), f"{location}.finished_at"),
        status=status,
        resolved_params=_values_from_obj(obj["resolved_params"], f"{location}.resolved_params"),
        inputs=_values_from_obj(obj["inputs"], f"{location}.inputs"),
        outputs=_values_from_obj(obj["outputs"], f"{location}.outputs"),
        error=expect_str(error, f"{location}.error") if error is not None else None,
        command=expect_str(obj["command"], f"{location}.command") if "command" in obj else None,
        exit_code=expect_int(obj["exit_code"], f"{location}.exit_code") if "exit_code" in obj else None,
    )


def log_from_obj(obj: object, location: str = "log") -> ExecutionLog:
    obj = expect_object(obj, location)
    check_fields(
        obj,
        location,
        {"exec_id", "vistrail_id", "version", "started_at", "finished_at", "status", "note", "module_executions"},
    )
    status = expect_str(obj["status"], f"{location}.status")
    if status not in ("success", "failed", "partial"):
        raise FormatError(f"{location}.status", f"unknown status {status!r}")
    return ExecutionLog(
        exec_id=expect_str(obj["exec_id"], f"{location}.exec_id"),
        vistrail_id=expect_str(obj["vistrail_id"], f"{location}.vistrail_id"),
        version=expect_int(obj["version"], f"{location}.version"),
        started_at=_parse_instant(expect_str(obj["started_at"], f"{location}.started_at"), f"{location}.started_at"),
        finished_at=_parse_instant(expect_str(obj["finished_at"], f"{location}.finished_at"), f"{location}.finished_at"),
        status=status,
        note=expect_str(obj["note"], f"{location}.note"),
        module_executions=tuple(
            module_execution_from_obj(e, f"{location}.module_executions[{i}]")
            for i, e in enumerate(expect_array(obj["module_executions"], f"{location}.module_executions"))
        ),
    )


def comparable_log_obj(log: ExecutionLog) -> dict:
    """Log as a plain object with volatile identity stripped (exec_id and all
    timestamps), for reproducibility comparisons."""
    obj = log_to_obj(log)
    obj.pop("exec_id")
    obj.pop("started_at")
    obj.pop("finished_at")
    for entry in obj["module_executions"]:
        entry.pop("started_at")
        entry.pop("finished_at")
    return obj
