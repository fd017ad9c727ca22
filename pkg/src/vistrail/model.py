"""Workflow document model: modules, ports, connections, primitive edit ops.

Everything here is a plain value. ``apply_op`` never mutates its input, so
a materialized workflow can be shared freely between readers while edits
build new values. Validation is registry-aware but registry-optional at the
op level: applying ops only needs ids to line up, full semantic validation
(types, cycles, descriptor existence) runs when a workflow is actually used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Union

from .canonical import check_fields, expect_array, expect_int, expect_object, expect_str
from .errors import CycleError, FormatError, OpNotApplicableError

if TYPE_CHECKING:
    from .registry import PackageRegistry


class ValueType(enum.Enum):
    INTEGER = "integer"
    FLOAT = "float"
    STRING = "string"
    BOOLEAN = "boolean"
    DATAREF = "dataref"
    ANY = "any"


# Ports and parameters share one nominal type vocabulary.
PortType = ValueType

_PAYLOAD_TYPES = {
    ValueType.INTEGER: int,
    ValueType.FLOAT: float,
    ValueType.STRING: str,
    ValueType.BOOLEAN: bool,
    ValueType.DATAREF: str,  # content hash; the data store resolves it
}


_INT64_MIN = -(1 << 63)
_INT64_MAX = (1 << 63) - 1


@dataclass(frozen=True)
class Value:
    """Tagged scalar. The dataref payload is a content hash (64 hex chars).

    Integers are 64-bit signed; floats must be finite (the canonical JSON
    encoding has no NaN/Infinity), both enforced at construction.
    """

    kind: ValueType
    raw: int | float | str | bool

    def __post_init__(self):
        expected = _PAYLOAD_TYPES.get(self.kind)
        if expected is None:
            raise ValueError(f"{self.kind} is not a concrete value kind")
        if type(self.raw) is not expected:
            raise ValueError(f"{self.kind.value} value holds {type(self.raw).__name__}")
        if self.kind is ValueType.INTEGER and not _INT64_MIN <= self.raw <= _INT64_MAX:
            raise ValueError(f"integer {self.raw} out of 64-bit signed range")
        if self.kind is ValueType.FLOAT and not math.isfinite(self.raw):
            raise ValueError(f"float value must be finite, got {self.raw!r}")

    @staticmethod
    def integer(v: int) -> "Value":
        return Value(ValueType.INTEGER, int(v))

    @staticmethod
    def real(v: float) -> "Value":
        return Value(ValueType.FLOAT, float(v))

    @staticmethod
    def string(v: str) -> "Value":
        return Value(ValueType.STRING, v)

    @staticmethod
    def boolean(v: bool) -> "Value":
        return Value(ValueType.BOOLEAN, bool(v))

    @staticmethod
    def dataref(content_hash: str) -> "Value":
        return Value(ValueType.DATAREF, content_hash)

    def matches(self, declared: ValueType) -> bool:
        """Type check against a declared port/parameter type.

        ``any`` accepts every kind; an integer is accepted where a float is
        declared (widened at use).
        """
        if declared is ValueType.ANY or declared is self.kind:
            return True
        return declared is ValueType.FLOAT and self.kind is ValueType.INTEGER

    def render(self) -> str:
        if self.kind is ValueType.BOOLEAN:
            return "true" if self.raw else "false"
        return str(self.raw)


def ports_compatible(source: PortType, target: PortType) -> bool:
    # `any` on either end defers checking to runtime (the value itself is
    # checked on delivery); concrete types must agree exactly.
    return source is ValueType.ANY or target is ValueType.ANY or source is target


@dataclass(frozen=True)
class Port:
    name: str
    port_type: PortType


@dataclass(frozen=True)
class Parameter:
    name: str
    value_type: ValueType
    default: Value

    def __post_init__(self):
        if not self.default.matches(self.value_type):
            raise ValueError(f"parameter {self.name}: default does not match {self.value_type.value}")


DescriptorKey = tuple[str, str, str]  # (package_id, package_version, module_name)


@dataclass(frozen=True)
class ModuleDescriptor:
    package_id: str
    package_version: str
    module_name: str
    input_ports: tuple[Port, ...] = ()
    output_ports: tuple[Port, ...] = ()
    parameters: tuple[Parameter, ...] = ()

    def __post_init__(self):
        for ports in (self.input_ports, self.output_ports):
            names = [p.name for p in ports]
            if len(names) != len(set(names)):
                raise ValueError(f"{self.module_name}: duplicate port name")
        pnames = [p.name for p in self.parameters]
        if len(pnames) != len(set(pnames)):
            raise ValueError(f"{self.module_name}: duplicate parameter name")

    @property
    def key(self) -> DescriptorKey:
        return (self.package_id, self.package_version, self.module_name)

    def input_port(self, name: str) -> Port | None:
        return next((p for p in self.input_ports if p.name == name), None)

    def output_port(self, name: str) -> Port | None:
        return next((p for p in self.output_ports if p.name == name), None)

    def parameter(self, name: str) -> Parameter | None:
        return next((p for p in self.parameters if p.name == name), None)


@dataclass(frozen=True)
class ModuleInstance:
    module_id: int
    descriptor_key: DescriptorKey
    parameter_values: dict[str, Value] = field(default_factory=dict)

    @property
    def package_id(self) -> str:
        return self.descriptor_key[0]

    @property
    def package_version(self) -> str:
        return self.descriptor_key[1]

    @property
    def module_name(self) -> str:
        return self.descriptor_key[2]


@dataclass(frozen=True)
class Connection:
    connection_id: int
    source_module: int
    source_port: str
    target_module: int
    target_port: str


@dataclass(frozen=True)
class Workflow:
    modules: dict[int, ModuleInstance] = field(default_factory=dict)
    connections: dict[int, Connection] = field(default_factory=dict)

    def incident_connections(self, module_id: int) -> list[Connection]:
        return [
            c
            for c in self.connections.values()
            if c.source_module == module_id or c.target_module == module_id
        ]


EMPTY_WORKFLOW = Workflow()


# -- primitive ops -----------------------------------------------------------


@dataclass(frozen=True)
class AddModule:
    module: ModuleInstance


@dataclass(frozen=True)
class DeleteModule:
    module_id: int


@dataclass(frozen=True)
class AddConnection:
    connection: Connection


@dataclass(frozen=True)
class DeleteConnection:
    connection_id: int


@dataclass(frozen=True)
class SetParameter:
    module_id: int
    param_name: str
    value: Value


PrimitiveOp = Union[AddModule, DeleteModule, AddConnection, DeleteConnection, SetParameter]


def apply_op(w: Workflow, op: PrimitiveOp) -> Workflow:
    """Apply one op, returning a new workflow. The input is never mutated.

    Applicability is purely structural: referenced ids must exist, added ids
    must be fresh, a target input port takes at most one connection, and a
    module cannot be deleted while connections touch it. Anything needing a
    registry (port names, types, descriptors) is deferred to validation.
    """
    if isinstance(op, AddModule):
        mid = op.module.module_id
        if mid in w.modules:
            raise OpNotApplicableError(mid, f"module {mid} already exists")
        modules = dict(w.modules)
        modules[mid] = op.module
        return Workflow(modules, dict(w.connections))

    if isinstance(op, DeleteModule):
        mid = op.module_id
        if mid not in w.modules:
            raise OpNotApplicableError(mid, f"module {mid} does not exist")
        incident = w.incident_connections(mid)
        if incident:
            raise OpNotApplicableError(
                mid, f"module {mid} still has {len(incident)} connection(s)"
            )
        modules = dict(w.modules)
        del modules[mid]
        return Workflow(modules, dict(w.connections))

    if isinstance(op, AddConnection):
        c = op.connection
        if c.connection_id in w.connections:
            raise OpNotApplicableError(c.connection_id, f"connection {c.connection_id} already exists")
        for endpoint in (c.source_module, c.target_module):
            if endpoint not in w.modules:
                raise OpNotApplicableError(endpoint, f"module {endpoint} does not exist")
        for other in w.connections.values():
            if other.target_module == c.target_module and other.target_port == c.target_port:
                raise OpNotApplicableError(
                    c.connection_id,
                    f"input {c.target_module}.{c.target_port} already connected",
                )
        connections = dict(w.connections)
        connections[c.connection_id] = c
        return Workflow(dict(w.modules), connections)

    if isinstance(op, DeleteConnection):
        cid = op.connection_id
        if cid not in w.connections:
            raise OpNotApplicableError(cid, f"connection {cid} does not exist")
        connections = dict(w.connections)
        del connections[cid]
        return Workflow(dict(w.modules), connections)

    if isinstance(op, SetParameter):
        mod = w.modules.get(op.module_id)
        if mod is None:
            raise OpNotApplicableError(op.module_id, f"module {op.module_id} does not exist")
        params = dict(mod.parameter_values)
        params[op.param_name] = op.value  # last writer wins
        modules = dict(w.modules)
        modules[op.module_id] = replace(mod, parameter_values=params)
        return Workflow(modules, dict(w.connections))

    raise TypeError(f"not a primitive op: {op!r}")


def invert_op(pre: Workflow, op: PrimitiveOp) -> PrimitiveOp | None:
    """Inverse of ``op`` relative to the pre-state it was applied to.

    Returns None for the one gap in the vocabulary: SetParameter on a
    previously-unset parameter (there is no unset op to return).
    """
    if isinstance(op, AddModule):
        return DeleteModule(op.module.module_id)
    if isinstance(op, DeleteModule):
        return AddModule(pre.modules[op.module_id])
    if isinstance(op, AddConnection):
        return DeleteConnection(op.connection.connection_id)
    if isinstance(op, DeleteConnection):
        return AddConnection(pre.connections[op.connection_id])
    if isinstance(op, SetParameter):
        old = pre.modules[op.module_id].parameter_values.get(op.param_name)
        if old is None:
            return None
        return SetParameter(op.module_id, op.param_name, old)
    raise TypeError(f"not a primitive op: {op!r}")


def topological_order(w: Workflow) -> list[int]:
    """Module ids in dataflow order: rank (longest path from a source), then id.

    This is the one execution/log order used everywhere, so ties at the same
    depth always resolve the same way.
    """
    preds: dict[int, set[int]] = {mid: set() for mid in w.modules}
    succs: dict[int, set[int]] = {mid: set() for mid in w.modules}
    for c in w.connections.values():
        if c.source_module in preds and c.target_module in preds:
            preds[c.target_module].add(c.source_module)
            succs[c.source_module].add(c.target_module)

    rank: dict[int, int] = {}
    ready = sorted(mid for mid, ps in preds.items() if not ps)
    for mid in ready:
        rank[mid] = 0
    remaining = {mid: len(ps) for mid, ps in preds.items() if ps}
    queue = list(ready)
    while queue:
        mid = queue.pop()
        for nxt in succs[mid]:
            remaining[nxt] -= 1
            if remaining[nxt] == 0:
                rank[nxt] = 1 + max(rank[p] for p in preds[nxt])
                queue.append(nxt)
    if len(rank) != len(w.modules):
        cyclic = sorted(set(w.modules) - set(rank))
        raise CycleError(f"cycle through modules {cyclic}")
    return sorted(w.modules, key=lambda mid: (rank[mid], mid))


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str  # DANGLING_ENDPOINT | TYPE_MISMATCH | CYCLE | UNKNOWN_DESCRIPTOR | DUPLICATE_INPUT | BAD_PARAM
    detail: str
    module_id: int | None = None
    connection_id: int | None = None

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def validate_workflow(w: Workflow, registry: "PackageRegistry") -> ValidationReport:
    """Full semantic validation against a registry. Violations are data."""
    out: list[Violation] = []
    descriptors: dict[int, ModuleDescriptor] = {}

    for mid in sorted(w.modules):
        mod = w.modules[mid]
        desc = registry.try_lookup(mod.descriptor_key)
        if desc is None:
            out.append(Violation("UNKNOWN_DESCRIPTOR", f"module {mid}: {mod.descriptor_key}", module_id=mid))
            continue
        descriptors[mid] = desc
        for name, value in sorted(mod.parameter_values.items()):
            param = desc.parameter(name)
            if param is None:
                out.append(Violation("BAD_PARAM", f"module {mid}: undeclared parameter {name!r}", module_id=mid))
            elif not value.matches(param.value_type):
                out.append(
                    Violation(
                        "BAD_PARAM",
                        f"module {mid}: parameter {name!r} expects {param.value_type.value}, got {value.kind.value}",
                        module_id=mid,
                    )
                )

    seen_inputs: dict[tuple[int, str], int] = {}
    for cid in sorted(w.connections):
        c = w.connections[cid]
        dangling = False
        for mid, role in ((c.source_module, "source"), (c.target_module, "target")):
            if mid not in w.modules:
                out.append(
                    Violation("DANGLING_ENDPOINT", f"connection {cid}: {role} module {mid} missing", connection_id=cid)
                )
                dangling = True
        if dangling:
            continue

        src_desc = descriptors.get(c.source_module)
        dst_desc = descriptors.get(c.target_module)
        src_port = src_desc.output_port(c.source_port) if src_desc else None
        dst_port = dst_desc.input_port(c.target_port) if dst_desc else None
        if src_desc and src_port is None:
            out.append(
                Violation(
                    "DANGLING_ENDPOINT",
                    f"connection {cid}: no output port {c.source_port!r} on module {c.source_module}",
                    connection_id=cid,
                )
            )
        if dst_desc and dst_port is None:
            out.append(
                Violation(
                    "DANGLING_ENDPOINT",
                    f"connection {cid}: no input port {c.target_port!r} on module {c.target_module}",
                    connection_id=cid,
                )
            )
        if src_port and dst_port and not ports_compatible(src_port.port_type, dst_port.port_type):
            out.append(
                Violation(
                    "TYPE_MISMATCH",
                    f"connection {cid}: {src_port.port_type.value} -> {dst_port.port_type.value}",
                    connection_id=cid,
                )
            )

        key = (c.target_module, c.target_port)
        if key in seen_inputs:
            out.append(
                Violation(
                    "DUPLICATE_INPUT",
                    f"input {key[0]}.{key[1]} fed by connections {seen_inputs[key]} and {cid}",
                    connection_id=cid,
                )
            )
        else:
            seen_inputs[key] = cid

    try:
        topological_order(w)
    except CycleError as exc:
        out.append(Violation("CYCLE", exc.detail))

    return ValidationReport(tuple(out))


# -- wire codecs -------------------------------------------------------------

_VALUE_TYPES_BY_NAME = {t.value: t for t in ValueType if t is not ValueType.ANY}


def value_to_obj(v: Value) -> dict:
    return {"type": v.kind.value, "value": v.raw}


def value_from_obj(obj: Any, location: str) -> Value:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"type", "value"})
    kind = _VALUE_TYPES_BY_NAME.get(expect_str(obj["type"], f"{location}.type"))
    if kind is None:
        raise FormatError(f"{location}.type", f"unknown value type {obj['type']!r}")
    raw = obj["value"]
    try:
        return Value(kind, raw)
    except ValueError as exc:
        raise FormatError(f"{location}.value", str(exc)) from exc


def module_to_obj(m: ModuleInstance) -> dict:
    return {
        "id": m.module_id,
        "package": m.package_id,
        "package_version": m.package_version,
        "name": m.module_name,
        "parameters": {name: value_to_obj(v) for name, v in sorted(m.parameter_values.items())},
    }


def module_from_obj(obj: Any, location: str) -> ModuleInstance:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"id", "package", "package_version", "name", "parameters"})
    params_obj = expect_object(obj["parameters"], f"{location}.parameters")
    params = {
        name: value_from_obj(v, f"{location}.parameters.{name}") for name, v in params_obj.items()
    }
    return ModuleInstance(
        module_id=expect_int(obj["id"], f"{location}.id"),
        descriptor_key=(
            expect_str(obj["package"], f"{location}.package"),
            expect_str(obj["package_version"], f"{location}.package_version"),
            expect_str(obj["name"], f"{location}.name"),
        ),
        parameter_values=params,
    )


def connection_to_obj(c: Connection) -> dict:
    return {
        "id": c.connection_id,
        "source_module": c.source_module,
        "source_port": c.source_port,
        "target_module": c.target_module,
        "target_port": c.target_port,
    }


def connection_from_obj(obj: Any, location: str) -> Connection:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"id", "source_module", "source_port", "target_module", "target_port"})
    return Connection(
        connection_id=expect_int(obj["id"], f"{location}.id"),
        source_module=expect_int(obj["source_module"], f"{location}.source_module"),
        source_port=expect_str(obj["source_port"], f"{location}.source_port"),
        target_module=expect_int(obj["target_module"], f"{location}.target_module"),
        target_port=expect_str(obj["target_port"], f"{location}.target_port"),
    )


def op_to_obj(op: PrimitiveOp) -> dict:
    if isinstance(op, AddModule):
        return {"kind": "add_module", "module": module_to_obj(op.module)}
    if isinstance(op, DeleteModule):
        return {"kind": "delete_module", "module_id": op.module_id}
    if isinstance(op, AddConnection):
        return {"kind": "add_connection", "connection": connection_to_obj(op.connection)}
    if isinstance(op, DeleteConnection):
        return {"kind": "delete_connection", "connection_id": op.connection_id}
    if isinstance(op, SetParameter):
        return {
            "kind": "set_parameter",
            "module_id": op.module_id,
            "parameter": op.param_name,
            "value": value_to_obj(op.value),
        }
    raise TypeError(f"not a primitive op: {op!r}")


def op_from_obj(obj: Any, location: str) -> PrimitiveOp:
    obj = expect_object(obj, location)
    kind = obj.get("kind")
    if kind == "add_module":
        check_fields(obj, location, {"kind", "module"})
        return AddModule(module_from_obj(obj["module"], f"{location}.module"))
    if kind == "delete_module":
        check_fields(obj, location, {"kind", "module_id"})
        return DeleteModule(expect_int(obj["module_id"], f"{location}.module_id"))
    if kind == "add_connection":
        check_fields(obj, location, {"kind", "connection"})
        return AddConnection(connection_from_obj(obj["connection"], f"{location}.connection"))
    if kind == "delete_connection":
        check_fields(obj, location, {"kind", "connection_id"})
        return DeleteConnection(expect_int(obj["connection_id"], f"{location}.connection_id"))
    if kind == "set_parameter":
        check_fields(obj, location, {"kind", "module_id", "parameter", "value"})
        return SetParameter(
            module_id=expect_int(obj["module_id"], f"{location}.module_id"),
            param_name=expect_str(obj["parameter"], f"{location}.parameter"),
            value=value_from_obj(obj["value"], f"{location}.value"),
        )
    raise FormatError(f"{location}.kind", f"unknown op kind {kind!r}")


def workflow_to_obj(w: Workflow) -> dict:
    return {
        "modules": [module_to_obj(w.modules[mid]) for mid in sorted(w.modules)],
        "connections": [connection_to_obj(w.connections[cid]) for cid in sorted(w.connections)],
    }


def port_to_obj(p: Port) -> dict:
    return {"name": p.name, "type": p.port_type.value}


def port_from_obj(obj: Any, location: str) -> Port:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"name", "type"})
    type_name = expect_str(obj["type"], f"{location}.type")
    try:
        port_type = ValueType(type_name)
    except ValueError as exc:
        raise FormatError(f"{location}.type", f"unknown port type {type_name!r}") from exc
    return Port(expect_str(obj["name"], f"{location}.name"), port_type)


def descriptor_to_obj(d: ModuleDescriptor) -> dict:
    return {
        "name": d.module_name,
        "input_ports": [port_to_obj(p) for p in d.input_ports],
        "output_ports": [port_to_obj(p) for p in d.output_ports],
        "parameters": [
            {"name": p.name, "type": p.value_type.value, "default": value_to_obj(p.default)}
            for p in d.parameters
        ],
    }


def descriptor_from_obj(obj: Any, package_id: str, package_version: str, location: str) -> ModuleDescriptor:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"name", "input_ports", "output_ports", "parameters"})
    params = []
    for i, pobj in enumerate(expect_array(obj["parameters"], f"{location}.parameters")):
        ploc = f"{location}.parameters[{i}]"
        pobj = expect_object(pobj, ploc)
        check_fields(pobj, ploc, {"name", "type", "default"})
        type_name = expect_str(pobj["type"], f"{ploc}.type")
        try:
            value_type = ValueType(type_name)
        except ValueError as exc:
            raise FormatError(f"{ploc}.type", f"unknown value type {type_name!r}") from exc
        params.append(
            Parameter(
                name=expect_str(pobj["name"], f"{ploc}.name"),
                value_type=value_type,
                default=value_from_obj(pobj["default"], f"{ploc}.default"),
            )
        )
    try:
        return ModuleDescriptor(
            package_id=package_id,
            package_version=package_version,
            module_name=expect_str(obj["name"], f"{location}.name"),
            input_ports=tuple(
                port_from_obj(p, f"{location}.input_ports[{i}]")
                for i, p in enumerate(expect_array(obj["input_ports"], f"{location}.input_ports"))
            ),
            output_ports=tuple(
                port_from_obj(p, f"{location}.output_ports[{i}]")
                for i, p in enumerate(expect_array(obj["output_ports"], f"{location}.output_ports"))
            ),
            parameters=tuple(params),
        )
    except ValueError as exc:
        raise FormatError(location, str(exc)) from exc
