"""Registry lookups, manifests, upgrade planning and application."""

import pytest

from vistrail import (
    AddConnection,
    AddModule,
    Connection,
    DataStore,
    Package,
    PackageRegistry,
    SetParameter,
    UpgradeRule,
    Value,
    Vistrail,
    append_action,
    apply_upgrade,
    compute_upgrade,
    execute,
    load_package_manifest,
    materialize,
    register_builtins,
    validate_workflow,
)
from vistrail.canonical import write_canonical
from vistrail.errors import (
    BlockedModulesError,
    DuplicatePackageError,
    EmptyPlanError,
    PlanStaleError,
    UnknownDescriptorError,
)
from vistrail.model import ModuleDescriptor, ModuleInstance, Parameter, Port, ValueType
from vistrail.registry import package_to_obj, parse_version

from conftest import BASIC, build_add_pipeline, constant, module


def test_lookup_basic_add(registry):
    desc = registry.lookup_descriptor((BASIC, "1.0", "Add"))
    assert [p.name for p in desc.input_ports] == ["a", "b"]
    assert [p.name for p in desc.output_ports] == ["out"]


def test_lookup_constant_has_value_parameter(registry):
    desc = registry.lookup_descriptor((BASIC, "1.0", "Constant"))
    assert desc.parameter("value") is not None


def test_lookup_v2_add_output_renamed(registry):
    desc = registry.lookup_descriptor((BASIC, "2.0", "Add"))
    assert [p.name for p in desc.output_ports] == ["result"]


def test_lookup_unknown(registry):
    with pytest.raises(UnknownDescriptorError):
        registry.lookup_descriptor((BASIC, "3.0", "Add"))


def test_register_duplicate_package():
    reg = register_builtins(PackageRegistry())
    with pytest.raises(DuplicatePackageError):
        reg.register_package(Package(BASIC, "1.0"))


def test_version_ordering():
    assert parse_version("1.0") < parse_version("1.10") < parse_version("2.0")
    assert parse_version("1.0") == parse_version("1.0.0") == parse_version("1")
    assert parse_version("2") < parse_version("10")


# -- planning ------------------------------------------------------------------


def test_plan_empty_when_everything_newest(registry):
    vt = Vistrail.create("t")
    v = append_action(vt, 0, [AddModule(constant(1, Value.integer(1), version="2.0"))])
    plan = compute_upgrade(vt, v, registry)
    assert plan.rewrites == () and plan.blocked == ()


def test_plan_rewrites_lagging_pipeline(registry):
    vt = Vistrail.create("t")
    tip = build_add_pipeline(vt)
    plan = compute_upgrade(vt, tip, registry)
    assert {r.module_id for r in plan.rewrites} == {1, 2, 3}
    assert plan.blocked == ()
    add_rule = next(r.rule for r in plan.rewrites if r.module_id == 3)
    assert add_rule.port_map == {"out": "result"}
    assert add_rule.to_version == "2.0"


def test_plan_blocks_module_without_rule():
    reg = PackageRegistry()
    legacy = ModuleDescriptor("acme.tools", "1.0", "Legacy", output_ports=(Port("out", ValueType.ANY),))
    reg.register_package(Package("acme.tools", "1.0", descriptors=(legacy,)))
    reg.register_package(Package("acme.tools", "2.0", descriptors=()))  # newer, but no rules
    vt = Vistrail.create("t")
    v = append_action(vt, 0, [AddModule(ModuleInstance(1, ("acme.tools", "1.0", "Legacy")))])
    plan = compute_upgrade(vt, v, reg)
    assert plan.rewrites == ()
    assert [(b.module_id, b.reason) for b in plan.blocked] == [(1, "NO_RULE")]


# -- application ----------------------------------------------------------------


def test_apply_upgrade_preserves_behavior(tmp_path, registry):
    vt = Vistrail.create("t")
    tip = build_add_pipeline(vt)  # Constant(2), Constant(3) -> Add at 1.0
    store = DataStore(tmp_path / "data")

    before = execute(vt, tip, registry, store)
    assert before.status == "success"
    out_before = before.module_executions[-1].outputs["out"]

    plan = compute_upgrade(vt, tip, registry)
    new_v = apply_upgrade(vt, tip, plan, registry, user="up")
    assert new_v == tip + 1
    assert vt.actions[new_v].note == "upgrade"

    w = materialize(vt, new_v)
    assert validate_workflow(w, registry).ok
    assert all(m.package_version == "2.0" for m in w.modules.values())
    # fresh ids: no overlap with the replaced modules
    assert set(w.modules).isdisjoint({1, 2, 3})

    after = execute(vt, new_v, registry, store)
    assert after.status == "success"
    add_entry = next(e for e in after.module_executions if e.descriptor_key[2] == "Add")
    assert add_entry.outputs["result"] == out_before == Value.real(5.0)

    # old version still materializes and executes
    again = execute(vt, tip, registry, store)
    assert again.status == "success"

    # idempotence: nothing left to rewrite
    replan = compute_upgrade(vt, new_v, registry)
    assert replan.rewrites == ()


def test_apply_upgrade_rewires_renamed_output(tmp_path, registry):
    # Add.out feeds Multiply.a; after upgrade the connection must leave "result"
    vt = Vistrail.create("t")
    tip = build_add_pipeline(vt)
    tip = append_action(
        vt,
        tip,
        [
            AddModule(constant(4, Value.integer(10))),
            AddModule(module(5, "Multiply")),
            AddConnection(Connection(3, 3, "out", 5, "a")),
            AddConnection(Connection(4, 4, "out", 5, "b")),
        ],
    )
    store = DataStore(tmp_path / "data")
    before = execute(vt, tip, registry, store)
    mult_out = next(e for e in before.module_executions if e.descriptor_key[2] == "Multiply").outputs["out"]
    assert mult_out == Value.real(50.0)

    plan = compute_upgrade(vt, tip, registry)
    new_v = apply_upgrade(vt, tip, plan, registry)
    w = materialize(vt, new_v)
    renamed = [c for c in w.connections.values() if c.source_port == "result"]
    assert len(renamed) == 1
    after = execute(vt, new_v, registry, store)
    assert next(e for e in after.module_executions if e.descriptor_key[2] == "Multiply").outputs["out"] == mult_out


def test_apply_upgrade_empty_plan_rejected(registry):
    vt = Vistrail.create("t")
    v = append_action(vt, 0, [AddModule(constant(1, Value.integer(1), version="2.0"))])
    plan = compute_upgrade(vt, v, registry)
    with pytest.raises(EmptyPlanError):
        apply_upgrade(vt, v, plan, registry)


def test_apply_upgrade_blocked_without_allow_partial():
    reg = PackageRegistry()
    ok = ModuleDescriptor("acme.kit", "1.0", "Ok", output_ports=(Port("out", ValueType.ANY),))
    legacy = ModuleDescriptor("acme.kit", "1.0", "Legacy", output_ports=(Port("out", ValueType.ANY),))
    ok2 = ModuleDescriptor("acme.kit", "2.0", "Ok", output_ports=(Port("out", ValueType.ANY),))
    rule = UpgradeRule("acme.kit", "1.0", "Ok", "2.0", "Ok")
    reg.register_package(Package("acme.kit", "1.0", descriptors=(ok, legacy)))
    reg.register_package(Package("acme.kit", "2.0", descriptors=(ok2,), upgrade_rules=(rule,)))

    vt = Vistrail.create("t")
    v = append_action(
        vt,
        0,
        [
            AddModule(ModuleInstance(1, ("acme.kit", "1.0", "Ok"))),
            AddModule(ModuleInstance(2, ("acme.kit", "1.0", "Legacy"))),
        ],
    )
    plan = compute_upgrade(vt, v, reg)
    assert len(plan.rewrites) == 1 and len(plan.blocked) == 1
    with pytest.raises(BlockedModulesError):
        apply_upgrade(vt, v, plan, reg)
    new_v = apply_upgrade(vt, v, plan, reg, allow_partial=True)
    w = materialize(vt, new_v)
    versions = sorted(m.package_version for m in w.modules.values())
    assert versions == ["1.0", "2.0"]  # Legacy stays put


def test_apply_upgrade_stale_plan(registry):
    vt = Vistrail.create("t")
    tip = build_add_pipeline(vt)
    plan = compute_upgrade(vt, tip, registry)
    # plan was computed for `tip`; applying it against a different version
    # whose modules don't match is refused
    other = append_action(vt, 0, [AddModule(constant(50, Value.integer(1)))])
    stale = type(plan)(version=other, rewrites=plan.rewrites, blocked=plan.blocked)
    with pytest.raises(PlanStaleError):
        apply_upgrade(vt, other, stale, registry)


def test_rule_chaining_composes_port_and_param_maps():
    reg = PackageRegistry()
    d1 = ModuleDescriptor(
        "acme.chain", "1.0", "Thing",
        output_ports=(Port("out", ValueType.FLOAT),),
        parameters=(Parameter("alpha", ValueType.ANY, Value.integer(0)), Parameter("beta", ValueType.ANY, Value.integer(0))),
    )
    d2 = ModuleDescriptor(
        "acme.chain", "2.0", "Thing",
        output_ports=(Port("mid", ValueType.FLOAT),),
        parameters=(Parameter("alpha2", ValueType.ANY, Value.integer(0)), Parameter("beta", ValueType.ANY, Value.integer(0))),
    )
    d3 = ModuleDescriptor(
        "acme.chain", "3.0", "Thing",
        output_ports=(Port("final", ValueType.FLOAT),),
        parameters=(Parameter("alpha3", ValueType.ANY, Value.integer(0)),),
    )
    r12 = UpgradeRule(
        "acme.chain", "1.0", "Thing", "2.0", "Thing",
        port_map={"out": "mid"}, param_map={"alpha": "alpha2"},
    )
    r23 = UpgradeRule(
        "acme.chain", "2.0", "Thing", "3.0", "Thing",
        port_map={"mid": "final"}, param_map={"alpha2": "alpha3"}, dropped_params=frozenset({"beta"}),
    )
    reg.register_package(Package("acme.chain", "1.0", descriptors=(d1,)))
    reg.register_package(Package("acme.chain", "2.0", descriptors=(d2,), upgrade_rules=(r12,)))
    reg.register_package(Package("acme.chain", "3.0", descriptors=(d3,), upgrade_rules=(r23,)))

    vt = Vistrail.create("t")
    v = append_action(
        vt,
        0,
        [
            AddModule(
                ModuleInstance(
                    1, ("acme.chain", "1.0", "Thing"),
                    {"alpha": Value.integer(5), "beta": Value.integer(7)},
                )
            )
        ],
    )
    plan = compute_upgrade(vt, v, reg)
    assert len(plan.rewrites) == 1
    rule = plan.rewrites[0].rule
    assert rule.from_version == "1.0" and rule.to_version == "3.0"
    assert rule.port_map == {"out": "final", "mid": "final"}
    assert rule.param_map == {"alpha": "alpha3", "alpha2": "alpha3"}
    assert rule.dropped_params == {"beta"}

    new_v = apply_upgrade(vt, v, plan, reg)
    w = materialize(vt, new_v)
    (mod,) = w.modules.values()
    assert mod.descriptor_key == ("acme.chain", "3.0", "Thing")
    assert mod.parameter_values == {"alpha3": Value.integer(5)}


def test_upgrade_never_rewrites_history(registry):
    vt = Vistrail.create("t")
    tip = build_add_pipeline(vt)
    actions_before = dict(vt.actions)
    plan = compute_upgrade(vt, tip, registry)
    apply_upgrade(vt, tip, plan, registry)
    for vid, action in actions_before.items():
        assert vt.actions[vid] is action


# -- manifests ----------------------------------------------------------------------


def test_manifest_round_trip(tmp_path):
    pkg = Package(
        "acme.csv", "1.2",
        descriptors=(
            ModuleDescriptor(
                "acme.csv", "1.2", "Widget",
                input_ports=(Port("in", ValueType.DATAREF),),
                output_ports=(Port("out", ValueType.STRING),),
                parameters=(Parameter("mode", ValueType.STRING, Value.string("fast")),),
            ),
        ),
        upgrade_rules=(
            UpgradeRule("acme.csv", "1.0", "Widget", "1.2", "Widget", port_map={"in": "in"}),
        ),
    )
    path = tmp_path / "acme.pkgj"
    write_canonical(path, package_to_obj(pkg))
    loaded = load_package_manifest(path)
    assert loaded == pkg


def test_manifest_rejects_unknown_rule_target(tmp_path):
    obj = {
        "package_id": "acme.bad",
        "package_version": "2.0",
        "descriptors": [],
        "upgrade_rules": [
            {
                "from_package": "acme.bad",
                "from_version": "1.0",
                "from_module": "Gone",
                "to_module": "Missing",
                "port_map": {},
                "param_map": {},
                "dropped_params": [],
            }
        ],
    }
    path = tmp_path / "bad.pkgj"
    write_canonical(path, obj)
    from vistrail.errors import FormatError

    with pytest.raises(FormatError):
        load_package_manifest(path)
