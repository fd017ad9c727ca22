"""Action tree: append, materialize, tags, annotations, diff, serialization."""

import json
import random

import pytest

from vistrail import (
    AddConnection,
    AddModule,
    Connection,
    DeleteModule,
    SetParameter,
    Value,
    Vistrail,
    annotate,
    append_action,
    diff,
    load,
    materialize,
    materialize_all,
    resolve_tag,
    save,
    tag,
    untag,
    version_tree,
)
from vistrail.canonical import canonical_dumps
from vistrail.errors import FormatError, InvalidOpsError, UnknownTagError, UnknownVersionError
from vistrail.model import op_to_obj, workflow_to_obj
from vistrail.provenance import delta_between, lowest_common_ancestor, vistrail_to_obj

from conftest import constant, module, oracle_materialize, random_vistrail, workflow_shape


def test_append_to_fresh_vistrail_is_version_1():
    vt = Vistrail.create("t")
    v = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))], user="u")
    assert v == 1
    assert vt.next_action_id == 2
    assert vt.next_module_id == 2


def test_append_unknown_parent():
    vt = Vistrail.create("t")
    with pytest.raises(UnknownVersionError) as exc:
        append_action(vt, 99, [AddModule(constant(1, Value.integer(2)))])
    assert exc.value.version == 99


def test_append_inapplicable_op_is_all_or_nothing():
    vt = Vistrail.create("t")
    with pytest.raises(InvalidOpsError) as exc:
        append_action(vt, 0, [DeleteModule(1)])
    assert exc.value.index == 0
    assert vt.actions == {}
    assert vt.next_action_id == 1


def test_append_rejects_module_id_reuse_across_branches():
    vt = Vistrail.create("t")
    append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))])
    # sibling branch may not reuse module id 1 even though it's absent there
    with pytest.raises(InvalidOpsError):
        append_action(vt, 0, [AddModule(constant(1, Value.integer(9)))])


def test_append_empty_ops_rejected():
    vt = Vistrail.create("t")
    with pytest.raises(InvalidOpsError):
        append_action(vt, 0, [])


def test_materialize_root_is_empty():
    vt = Vistrail.create("t")
    w = materialize(vt, 0)
    assert not w.modules and not w.connections


def test_materialize_two_action_pipeline():
    # v1 adds a Constant; v2 adds Constant + Add and wires both in
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))])
    v2 = append_action(
        vt,
        v1,
        [
            AddModule(constant(2, Value.integer(3))),
            AddModule(module(3, "Add")),
            AddConnection(Connection(1, 1, "out", 3, "a")),
            AddConnection(Connection(2, 2, "out", 3, "b")),
        ],
    )
    w = materialize(vt, v2)
    assert len(w.modules) == 3
    assert len(w.connections) == 2
    # cross-check with the independent oracle
    assert workflow_shape(w) == oracle_materialize(vt, v2)


def test_sibling_branches_are_independent():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))])
    v2 = append_action(vt, v1, [AddModule(constant(2, Value.integer(3)))])
    v3 = append_action(vt, v1, [DeleteModule(1)])
    assert len(materialize(vt, v2).modules) == 2
    assert len(materialize(vt, v3).modules) == 0
    assert len(materialize(vt, v1).modules) == 1


def test_materialize_unknown_version():
    vt = Vistrail.create("t")
    with pytest.raises(UnknownVersionError):
        materialize(vt, 7)


def test_materialize_all_matches_per_version():
    rng = random.Random(7)
    vt = random_vistrail(rng, max_actions=20)
    everything = materialize_all(vt)
    for v in vt.versions():
        assert everything[v] == materialize(vt, v)


# -- tags & annotations ---------------------------------------------------------


def test_tag_resolve_and_overwrite():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))])
    v2 = append_action(vt, v1, [SetParameter(1, "value", Value.integer(2))])
    tag(vt, v1, "baseline")
    assert resolve_tag(vt, "baseline") == v1
    tag(vt, v1, "x")
    tag(vt, v2, "x")
    assert resolve_tag(vt, "x") == v2
    # tagging created no versions
    assert sorted(vt.actions) == [v1, v2]


def test_untag_missing():
    vt = Vistrail.create("t")
    with pytest.raises(UnknownTagError):
        untag(vt, "missing")


def test_tag_unknown_version():
    vt = Vistrail.create("t")
    with pytest.raises(UnknownVersionError):
        tag(vt, 3, "nope")


def test_annotate_read_back_and_overwrite():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))])
    annotate(vt, v1, "purpose", "calibration run")
    assert vt.annotations[v1]["purpose"] == "calibration run"
    annotate(vt, v1, "purpose", "second thoughts")
    assert vt.annotations[v1]["purpose"] == "second thoughts"
    with pytest.raises(UnknownVersionError):
        annotate(vt, 42, "k", "v")


def test_version_tree_entries():
    vt = Vistrail.create("t")
    entries = version_tree(vt)
    assert len(entries) == 1
    assert entries[0].version_id == 0 and entries[0].parent_id is None and entries[0].tags == ()

    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))], user="alice", note="first")
    v2 = append_action(vt, 0, [AddModule(constant(2, Value.integer(2)))], user="bob")
    tag(vt, v1, "start")
    entries = version_tree(vt)
    assert [e.version_id for e in entries] == [0, v1, v2]
    assert all(e.parent_id == 0 for e in entries[1:])
    assert entries[1].tags == ("start",)
    assert entries[1].user == "alice" and entries[1].note == "first"


# -- diff -------------------------------------------------------------------------


def test_diff_self_is_empty():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))])
    delta = diff(vt, v1, v1)
    assert delta.empty
    assert delta.shared_modules == {1}


def test_diff_parameter_change():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))])
    v2 = append_action(vt, v1, [SetParameter(1, "value", Value.integer(4))])
    delta = diff(vt, v1, v2)
    assert not delta.added_modules and not delta.deleted_modules
    assert len(delta.parameter_changes) == 1
    change = delta.parameter_changes[0]
    assert (change.module_id, change.param_name) == (1, "value")
    assert change.value_in_v1 == Value.integer(2)
    assert change.value_in_v2 == Value.integer(4)


def test_diff_sibling_with_deletion():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))])
    v2 = append_action(vt, v1, [AddModule(constant(2, Value.integer(3)))])
    v3 = append_action(vt, v1, [DeleteModule(1)])
    delta = diff(vt, v2, v3)
    assert delta.deleted_modules == {1, 2}
    assert delta.added_modules == set()
    # brute-force agreement
    assert delta == delta_between(materialize(vt, v2), materialize(vt, v3))


def test_diff_unknown_version():
    vt = Vistrail.create("t")
    with pytest.raises(UnknownVersionError):
        diff(vt, 0, 5)


def test_lca():
    vt = Vistrail.create("t")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(1)))])
    v2 = append_action(vt, v1, [AddModule(constant(2, Value.integer(2)))])
    v3 = append_action(vt, v1, [AddModule(constant(3, Value.integer(3)))])
    v4 = append_action(vt, v3, [SetParameter(3, "value", Value.integer(9))])
    assert lowest_common_ancestor(vt, v2, v4) == v1
    assert lowest_common_ancestor(vt, v3, v4) == v3
    assert lowest_common_ancestor(vt, 0, v4) == 0


def test_diff_agrees_with_brute_force_on_random_trees():
    rng = random.Random(21)
    for _ in range(10):
        vt = random_vistrail(rng, max_actions=15)
        versions = vt.versions()
        workflows = materialize_all(vt)
        for _ in range(10):
            v1, v2 = rng.choice(versions), rng.choice(versions)
            assert diff(vt, v1, v2) == delta_between(workflows[v1], workflows[v2])


# -- replay determinism (small; the full sweep runs in acceptance) -----------------


def test_materialize_matches_oracle_on_random_trees():
    rng = random.Random(5)
    for _ in range(25):
        vt = random_vistrail(rng, max_actions=25)
        for v in vt.versions():
            assert workflow_shape(materialize(vt, v)) == oracle_materialize(vt, v)


def test_append_only_and_tree_integrity():
    rng = random.Random(11)
    vt = random_vistrail(rng, max_actions=30)
    seen = dict(vt.actions)
    count = len(vt.actions)
    append_action(vt, 0, [AddModule(constant(vt.next_module_id, Value.integer(1)))])
    assert len(vt.actions) == count + 1
    for vid, action in seen.items():
        assert vt.actions[vid] is action  # untouched, not replaced
    for action in vt.actions.values():
        assert action.parent_id < action.action_id
        assert vt.has_version(action.parent_id)


# -- save / load -------------------------------------------------------------------


def _sample_vistrail() -> Vistrail:
    vt = Vistrail.create("sample-id")
    v1 = append_action(vt, 0, [AddModule(constant(1, Value.integer(2)))], user="alice", note="seed")
    v2 = append_action(
        vt,
        v1,
        [
            AddModule(constant(2, Value.integer(3))),
            AddModule(module(3, "Add")),
            AddConnection(Connection(1, 1, "out", 3, "a")),
            AddConnection(Connection(2, 2, "out", 3, "b")),
        ],
        user="alice",
    )
    append_action(vt, v1, [SetParameter(1, "value", Value.real(2.5))], user="bob", note="try half")
    tag(vt, v2, "wired")
    annotate(vt, v2, "purpose", "demo")
    return vt


def test_save_load_round_trip(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    loaded = load(path)
    assert loaded.vistrail_id == vt.vistrail_id
    assert loaded.actions == vt.actions
    assert loaded.tags == vt.tags
    assert loaded.annotations == vt.annotations
    assert (loaded.next_action_id, loaded.next_module_id, loaded.next_connection_id) == (
        vt.next_action_id,
        vt.next_module_id,
        vt.next_connection_id,
    )
    for v in vt.versions():
        assert materialize(loaded, v) == materialize(vt, v)


def test_save_twice_is_byte_identical(tmp_path):
    vt = _sample_vistrail()
    p1, p2 = tmp_path / "a.vtj", tmp_path / "b.vtj"
    save(vt, p1)
    save(vt, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_unknown_format_version(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    obj = json.loads(path.read_text())
    obj["format_version"] = 999
    path.write_text(canonical_dumps(obj))
    with pytest.raises(FormatError):
        load(path)


def test_load_rejects_unknown_fields(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    obj = json.loads(path.read_text())
    obj["surprise"] = True
    path.write_text(canonical_dumps(obj))
    with pytest.raises(FormatError) as exc:
        load(path)
    assert "surprise" in str(exc.value)


def test_load_rejects_unknown_op_field(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    obj = json.loads(path.read_text())
    obj["actions"][0]["ops"][0]["extra"] = 1
    path.write_text(canonical_dumps(obj))
    with pytest.raises(FormatError) as exc:
        load(path)
    assert "ops[0]" in exc.value.location


def test_load_rejects_bad_counters(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    obj = json.loads(path.read_text())
    obj["counters"]["module"] = 1  # ids up to 3 are in use
    path.write_text(canonical_dumps(obj))
    with pytest.raises(FormatError):
        load(path)


def test_timestamps_round_trip_but_do_not_affect_equality(tmp_path):
    vt = _sample_vistrail()
    path = tmp_path / "a.vtj"
    save(vt, path)
    loaded = load(path)
    for vid, action in vt.actions.items():
        assert loaded.actions[vid].timestamp == action.timestamp


def test_compactness_actions_not_snapshots():
    # 100 one-parameter-change versions must serialize well under
    # 5 x (one full workflow + 100 op records)
    vt = Vistrail.create("compact")
    v = append_action(vt, 0, [AddModule(constant(1, Value.integer(0)))])
    op_objs = []
    for i in range(100):
        op = SetParameter(1, "value", Value.integer(i))
        v = append_action(vt, v, [op])
        op_objs.append(op_to_obj(op))
    vistrail_bytes = len(canonical_dumps(vistrail_to_obj(vt)).encode())
    workflow_bytes = len(canonical_dumps(workflow_to_obj(materialize(vt, v))).encode())
    ops_bytes = len(canonical_dumps(op_objs).encode())
    assert vistrail_bytes < 5 * (workflow_bytes + ops_bytes)
