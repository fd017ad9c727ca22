"""The ``seed.basic`` builtin package: descriptors plus executable behavior.

Version 1.0 is the working set; version 2.0 exists to exercise upgrades
(Add's output port is renamed ``out`` -> ``result``, everything else is an
identity migration). Implementations are looked up by (package, module name)
and emit on whatever output ports the resolved descriptor declares, so a
renamed port needs no special-cased code.
"""

from __future__ import annotations

import csv
import io
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .datastore import DataStore, EMPTY_CONTENT_HASH
from .errors import ModuleError, NotFoundError
from .model import ModuleDescriptor, Parameter, Port, Value, ValueType
from .registry import Package, PackageRegistry, UpgradeRule

BASIC_PACKAGE = "seed.basic"
MODULE_NAMES = ("Add", "Concat", "Constant", "CsvColumnStats", "ExternalTool", "Multiply", "ReadData", "WriteData")


def _descriptors(version: str, add_output: str) -> tuple[ModuleDescriptor, ...]:
    f = ValueType.FLOAT
    s = ValueType.STRING
    d = ValueType.DATAREF
    return (
        ModuleDescriptor(
            BASIC_PACKAGE, version, "Add",
            input_ports=(Port("a", f), Port("b", f)),
            output_ports=(Port(add_output, f),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "Concat",
            input_ports=(Port("a", s), Port("b", s)),
            output_ports=(Port("out", s),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "Constant",
            output_ports=(Port("out", ValueType.ANY),),
            parameters=(Parameter("value", ValueType.ANY, Value.integer(0)),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "CsvColumnStats",
            input_ports=(Port("in", d),),
            output_ports=(Port("mean", f), Port("min", f), Port("max", f)),
            parameters=(Parameter("column", s, Value.string("")),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "ExternalTool",
            input_ports=(Port("in", d),),
            output_ports=(Port("out", d),),
            parameters=(Parameter("command_template", s, Value.string("")),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "Multiply",
            input_ports=(Port("a", f), Port("b", f)),
            output_ports=(Port("out", f),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "ReadData",
            output_ports=(Port("out", d),),
            parameters=(Parameter("ref", d, Value.dataref(EMPTY_CONTENT_HASH)),),
        ),
        ModuleDescriptor(
            BASIC_PACKAGE, version, "WriteData",
            input_ports=(Port("in", s),),
            output_ports=(Port("out", d),),
        ),
    )


def basic_package_v1() -> Package:
    return Package(BASIC_PACKAGE, "1.0", descriptors=_descriptors("1.0", add_output="out"))


def basic_package_v2() -> Package:
    rules = tuple(
        UpgradeRule(
            from_package=BASIC_PACKAGE,
            from_version="1.0",
            from_module=name,
            to_version="2.0",
            to_module=name,
            port_map={"out": "result"} if name == "Add" else {},
        )
        for name in MODULE_NAMES
    )
    return Package(BASIC_PACKAGE, "2.0", descriptors=_descriptors("2.0", add_output="result"), upgrade_rules=rules)


def register_builtins(reg: PackageRegistry) -> PackageRegistry:
    reg.register_package(basic_package_v1())
    reg.register_package(basic_package_v2())
    return reg


# -- execution ----------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    allow_external_tools: bool = False
    external_tool_timeout: float = 60.0


@dataclass
class ModuleResult:
    outputs: dict[str, Value] = field(default_factory=dict)
    command: str | None = None  # ExternalTool only
    exit_code: int | None = None


class ExternalToolFailure(ModuleError):
    """Nonzero exit: the substituted command and exit code still reach the log."""

    def __init__(self, detail: str, command: str, exit_code: int):
        super().__init__(detail)
        self.command = command
        self.exit_code = exit_code


def _require_number(inputs: dict[str, Value], port: str) -> float:
    if port not in inputs:
        raise ModuleError(f"MISSING_INPUT: {port}")
    v = inputs[port]
    if v.kind not in (ValueType.INTEGER, ValueType.FLOAT):
        raise ModuleError(f"TYPE_MISMATCH: {port} expects a number, got {v.kind.value}")
    return float(v.raw)


def _require_string(values: dict[str, Value], name: str, what: str = "input") -> str:
    if name not in values:
        raise ModuleError(f"MISSING_{what.upper()}: {name}")
    v = values[name]
    if v.kind is not ValueType.STRING:
        raise ModuleError(f"TYPE_MISMATCH: {name} expects string, got {v.kind.value}")
    return v.raw


def _require_dataref(values: dict[str, Value], name: str, what: str = "input") -> str:
    if name not in values:
        raise ModuleError(f"MISSING_{what.upper()}: {name}")
    v = values[name]
    if v.kind is not ValueType.DATAREF:
        raise ModuleError(f"TYPE_MISMATCH: {name} expects dataref, got {v.kind.value}")
    return v.raw


def _finite(x: float) -> Value:
    try:
        return Value.real(x)
    except ValueError as exc:
        raise ModuleError(f"NON_FINITE_RESULT: {x!r}") from exc


def _run_add(desc, inputs, params, store, config):
    out = desc.output_ports[0].name
    return ModuleResult({out: _finite(_require_number(inputs, "a") + _require_number(inputs, "b"))})


def _run_multiply(desc, inputs, params, store, config):
    out = desc.output_ports[0].name
    return ModuleResult({out: _finite(_require_number(inputs, "a") * _require_number(inputs, "b"))})


def _run_concat(desc, inputs, params, store, config):
    out = desc.output_ports[0].name
    return ModuleResult({out: Value.string(_require_string(inputs, "a") + _require_string(inputs, "b"))})


def _run_constant(desc, inputs, params, store, config):
    out = desc.output_ports[0].name
    return ModuleResult({out: params["value"]})


def _run_read_data(desc, inputs, params, store, config):
    ref = _require_dataref(params, "ref", what="param")
    try:
        store.get(ref)
    except NotFoundError as exc:
        raise ModuleError(f"NOT_FOUND: {ref}") from exc
    return ModuleResult({desc.output_ports[0].name: Value.dataref(ref)})


def _run_write_data(desc, inputs, params, store, config):
    text = _require_string(inputs, "in")
    ref = store.put(text.encode("utf-8"))
    return ModuleResult({desc.output_ports[0].name: Value.dataref(ref.content_hash)})


def _run_csv_column_stats(desc, inputs, params, store, config):
    ref = _require_dataref(inputs, "in")
    column = _require_string(params, "column", what="param")
    try:
        data = store.get(ref)
    except NotFoundError as exc:
        raise ModuleError(f"NOT_FOUND: {ref}") from exc
    try:
        rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
    except UnicodeDecodeError as exc:
        raise ModuleError(f"BAD_CSV: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise ModuleError("BAD_CSV: no header row")
    header = rows[0]
    if column not in header:
        raise ModuleError(f"COLUMN_NOT_FOUND: {column}")
    idx = header.index(column)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if idx >= len(row):
            raise ModuleError(f"BAD_CSV: row {lineno} has no column {column!r}")
        try:
            values.append(float(row[idx]))
        except ValueError as exc:
            raise ModuleError(f"BAD_CELL: row {lineno}, column {column!r}: {row[idx]!r}") from exc
    if not values:
        raise ModuleError(f"NO_ROWS: column {column!r} has no data rows")
    return ModuleResult(
        {
            "mean": _finite(sum(values) / len(values)),
            "min": _finite(min(values)),
            "max": _finite(max(values)),
        }
    )


def _run_external_tool(desc, inputs, params, store, config):
    """Substitutes {input} in the command template with a temp file holding
    the input bytes, runs the command, and stores stdout as a new dataref.
    Nondeterministic by nature; disabled unless the project opts in."""
    if not config.allow_external_tools:
        raise ModuleError("EXTERNAL_TOOLS_DISABLED: set allow_external_tools=true in config.json")
    template = _require_string(params, "command_template", what="param")
    if not template.strip():
        raise ModuleError("MISSING_PARAM: command_template")
    ref = _require_dataref(inputs, "in")
    try:
        data = store.get(ref)
    except NotFoundError as exc:
        raise ModuleError(f"NOT_FOUND: {ref}") from exc

    with tempfile.NamedTemporaryFile(prefix="vt-tool-", delete=False) as f:
        f.write(data)
        input_path = f.name
    try:
        argv = [part.replace("{input}", input_path) for part in shlex.split(template)]
        command = " ".join(argv)
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=config.external_tool_timeout)
        except OSError as exc:
            raise ModuleError(f"SPAWN_FAILED: {exc}")
        except subprocess.TimeoutExpired:
            raise ModuleError(f"TIMEOUT: {command}")
    finally:
        Path(input_path).unlink(missing_ok=True)

    out_ref = store.put(proc.stdout)
    if proc.returncode != 0:
        raise ExternalToolFailure(f"EXIT_{proc.returncode}: {command}", command, proc.returncode)
    return ModuleResult(
        outputs={desc.output_ports[0].name: Value.dataref(out_ref.content_hash)},
        command=command,
        exit_code=proc.returncode,
    )


IMPLEMENTATIONS = {
    "Add": _run_add,
    "Multiply": _run_multiply,
    "Concat": _run_concat,
    "Constant": _run_constant,
    "ReadData": _run_read_data,
    "WriteData": _run_write_data,
    "CsvColumnStats": _run_csv_column_stats,
    "ExternalTool": _run_external_tool,
}


def find_implementation(package_id: str, module_name: str):
    """Executable behavior exists for builtins only; declared third-party
    descriptors validate but cannot run."""
    if package_id != BASIC_PACKAGE:
        return None
    return IMPLEMENTATIONS.get(module_name)


def run_builtin(
    desc: ModuleDescriptor,
    inputs: dict[str, Value],
    params: dict[str, Value],
    store: DataStore,
    config,
) -> ModuleResult:
    impl = find_implementation(desc.package_id, desc.module_name)
    if impl is None:
        raise ModuleError(f"NO_IMPLEMENTATION: {desc.package_id} {desc.module_name}")
    return impl(desc, inputs, params, store, config)
