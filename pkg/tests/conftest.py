"""Shared fixtures: builtin registry, stores, pipeline builders, and the
independent replay oracle used to cross-check materialization."""

from __future__ import annotations

import random

import pytest

from vistrail import (
    AddConnection,
    AddModule,
    Connection,
    DataStore,
    DeleteConnection,
    DeleteModule,
    ModuleInstance,
    PackageRegistry,
    SetParameter,
    Value,
    Vistrail,
    append_action,
    apply_op,
    materialize,
    register_builtins,
)

BASIC = "seed.basic"


@pytest.fixture(scope="session")
def registry() -> PackageRegistry:
    return register_builtins(PackageRegistry())


@pytest.fixture()
def store(tmp_path) -> DataStore:
    return DataStore(tmp_path / "data")


def constant(module_id: int, value: Value, version: str = "1.0") -> ModuleInstance:
    return ModuleInstance(module_id, (BASIC, version, "Constant"), {"value": value})


def module(module_id: int, name: str, version: str = "1.0") -> ModuleInstance:
    return ModuleInstance(module_id, (BASIC, version, name))


def build_add_pipeline(vt: Vistrail, a: float | int = 2, b: float | int = 3) -> int:
    """Constant(a), Constant(b) -> Add, as two actions; returns the tip version."""
    va = Value.integer(a) if isinstance(a, int) else Value.real(a)
    vb = Value.integer(b) if isinstance(b, int) else Value.real(b)
    v1 = append_action(vt, 0, [AddModule(constant(1, va))], user="t")
    v2 = append_action(
        vt,
        v1,
        [
            AddModule(constant(2, vb)),
            AddModule(module(3, "Add")),
            AddConnection(Connection(1, 1, "out", 3, "a")),
            AddConnection(Connection(2, 2, "out", 3, "b")),
        ],
        user="t",
    )
    return v2


@pytest.fixture()
def add_pipeline():
    vt = Vistrail.create("test-vistrail")
    tip = build_add_pipeline(vt)
    return vt, tip


# -- independent replay oracle -------------------------------------------------
#
# Deliberately does NOT go through apply_op: its own state shape, its own
# applicability checks, full validation at every step. Used to cross-check
# engine materialization in property and acceptance tests.


class OracleError(AssertionError):
    pass


def oracle_materialize(vt: Vistrail, version: int):
    """Returns (modules, connections) as plain dicts:
    modules[id] = (descriptor_key, {param: Value}), connections[id] = tuple."""
    chain = []
    cur = version
    while cur != 0:
        if cur not in vt.actions:
            raise OracleError(f"missing action {cur}")
        action = vt.actions[cur]
        chain.append(action)
        cur = action.parent_id
    chain.reverse()

    modules: dict[int, tuple] = {}
    connections: dict[int, tuple] = {}
    for action in chain:
        for op in action.ops:
            if isinstance(op, AddModule):
                mid = op.module.module_id
                if mid in modules:
                    raise OracleError(f"module {mid} added twice")
                modules[mid] = (op.module.descriptor_key, dict(op.module.parameter_values))
            elif isinstance(op, DeleteModule):
                if op.module_id not in modules:
                    raise OracleError(f"module {op.module_id} missing")
                if any(c[0] == op.module_id or c[2] == op.module_id for c in connections.values()):
                    raise OracleError(f"module {op.module_id} still connected")
                del modules[op.module_id]
            elif isinstance(op, AddConnection):
                c = op.connection
                if c.connection_id in connections:
                    raise OracleError(f"connection {c.connection_id} added twice")
                if c.source_module not in modules or c.target_module not in modules:
                    raise OracleError(f"connection {c.connection_id} dangles")
                if any(x[2] == c.target_module and x[3] == c.target_port for x in connections.values()):
                    raise OracleError(f"duplicate input {c.target_module}.{c.target_port}")
                connections[c.connection_id] = (c.source_module, c.source_port, c.target_module, c.target_port)
            elif isinstance(op, DeleteConnection):
                if op.connection_id not in connections:
                    raise OracleError(f"connection {op.connection_id} missing")
                del connections[op.connection_id]
            elif isinstance(op, SetParameter):
                if op.module_id not in modules:
                    raise OracleError(f"module {op.module_id} missing")
                modules[op.module_id][1][op.param_name] = op.value
            else:
                raise OracleError(f"unknown op {op!r}")
    return modules, connections


def workflow_shape(w):
    """Engine workflow flattened to the oracle's state shape."""
    modules = {mid: (m.descriptor_key, dict(m.parameter_values)) for mid, m in w.modules.items()}
    connections = {
        cid: (c.source_module, c.source_port, c.target_module, c.target_port)
        for cid, c in w.connections.items()
    }
    return modules, connections


# -- random session generator ---------------------------------------------------

_MODULE_KINDS = ("Constant", "Add", "Multiply", "Concat")
_PORTS_IN = {"Add": ("a", "b"), "Multiply": ("a", "b"), "Concat": ("a", "b"), "Constant": ()}
_PORT_OUT = {"Add": "out", "Multiply": "out", "Concat": "out", "Constant": "out"}


def random_vistrail(rng: random.Random, max_actions: int = 50, max_children: int = 4) -> Vistrail:
    """A random action tree using all five op kinds, valid by construction."""
    vt = Vistrail.create(f"random-{rng.randrange(1 << 30)}")
    n_actions = rng.randint(1, max_actions)
    for _ in range(n_actions):
        candidates = [v for v in vt.versions() if len(vt.children(v)) < max_children]
        parent = rng.choice(candidates)
        state = materialize(vt, parent)
        ops = []
        for _ in range(rng.randint(1, 3)):
            op = _random_op(rng, vt, state)
            if op is None:
                break
            ops.append(op)
            state = apply_op(state, op)
        if not ops:
            name = rng.choice(_MODULE_KINDS)
            ops = [AddModule(_instance(vt.allocate_module_id(), name, rng))]
        append_action(vt, parent, ops, user="rng", note="generated")
    return vt


def _instance(mid: int, name: str, rng: random.Random) -> ModuleInstance:
    params = {}
    if name == "Constant":
        params["value"] = rng.choice(
            [Value.integer(rng.randint(-5, 5)), Value.real(rng.random()), Value.string("s"), Value.boolean(True)]
        )
    return ModuleInstance(mid, (BASIC, "1.0", name), params)


def _random_op(rng: random.Random, vt: Vistrail, state):
    kind = rng.choice(("add_module", "add_module", "add_connection", "delete_connection", "delete_module", "set_param"))
    if kind == "add_module":
        return AddModule(_instance(vt.allocate_module_id(), rng.choice(_MODULE_KINDS), rng))
    if kind == "add_connection":
        taken = {(c.target_module, c.target_port) for c in state.connections.values()}
        options = []
        for src in state.modules.values():
            for dst in state.modules.values():
                if src.module_id == dst.module_id:
                    continue
                for port in _PORTS_IN[dst.module_name]:
                    if (dst.module_id, port) not in taken and not _would_cycle(state, src.module_id, dst.module_id):
                        options.append((src.module_id, _PORT_OUT[src.module_name], dst.module_id, port))
        if not options:
            return None
        src_mid, sport, dst_mid, dport = rng.choice(options)
        return AddConnection(Connection(vt.allocate_connection_id(), src_mid, sport, dst_mid, dport))
    if kind == "delete_connection":
        if not state.connections:
            return None
        return DeleteConnection(rng.choice(sorted(state.connections)))
    if kind == "delete_module":
        free = [mid for mid in sorted(state.modules) if not state.incident_connections(mid)]
        if not free:
            return None
        return DeleteModule(rng.choice(free))
    if kind == "set_param":
        if not state.modules:
            return None
        mid = rng.choice(sorted(state.modules))
        name = "value" if state.modules[mid].module_name == "Constant" else "note"
        return SetParameter(mid, name, Value.integer(rng.randint(0, 99)))
    return None


def _would_cycle(state, src: int, dst: int) -> bool:
    """True if adding dst->...->src already reaches src from dst."""
    seen = {dst}
    frontier = [dst]
    while frontier:
        cur = frontier.pop()
        if cur == src:
            return True
        for c in state.connections.values():
            if c.source_module == cur and c.target_module not in seen:
                seen.add(c.target_module)
                frontier.append(c.target_module)
    return False
