"""`vt`: project-oriented command line over the whole engine.

Exit codes: 0 success, 1 user error (message on stderr), 2 internal/IO
error. Output is line-oriented and stable; structured commands also take
``--json``. Mutating commands operate on HEAD unless a version is given,
and move HEAD to the version they create.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .canonical import canonical_dumps, format_timestamp
from .datastore import ref_to_obj
from .engine import ExecutionLog, execute, log_to_obj
from .errors import BadValueError, UnknownVersionError, VistrailError
from .mashup import create_mashup, execute_mashup
from .model import (
    AddConnection,
    AddModule,
    Connection,
    DeleteConnection,
    DeleteModule,
    ModuleInstance,
    SetParameter,
    Value,
    Workflow,
    value_to_obj,
    workflow_to_obj,
)
from .project import Project
from .provenance import (
    MashupAlias,
    Vistrail,
    annotate,
    append_action,
    diff,
    materialize,
    mashup_to_obj,
    resolve_tag,
    tag,
    version_tree,
)
from .registry import apply_upgrade, compute_upgrade, load_package_manifest, package_to_obj

USER_EDIT = "user-edit"


def parse_value(text: str) -> Value:
    """CLI value syntax: optional `kind:` prefix, else inferred
    (true/false, integer, float, string)."""
    for prefix, make in (
        ("int:", lambda s: Value.integer(int(s))),
        ("float:", lambda s: Value.real(float(s))),
        ("str:", Value.string),
        ("bool:", lambda s: Value.boolean(_parse_bool(s))),
        ("dataref:", Value.dataref),
    ):
        if text.startswith(prefix):
            try:
                return make(text[len(prefix):])
            except ValueError as exc:
                raise BadValueError(f"{text!r}: {exc}") from exc
    if text in ("true", "false"):
        return Value.boolean(text == "true")
    try:
        return Value.integer(int(text))
    except ValueError:
        pass
    try:
        return Value.real(float(text))
    except ValueError:
        pass
    return Value.string(text)


def _parse_bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise ValueError(f"expected true/false, got {s!r}")
    return s == "true"


def parse_param_assignment(text: str) -> tuple[str, Value]:
    name, sep, raw = text.partition("=")
    if not sep or not name:
        raise BadValueError(f"expected NAME=VALUE, got {text!r}")
    return name, parse_value(raw)


def parse_endpoint(text: str) -> tuple[int, str]:
    mid, sep, port = text.partition(".")
    if not sep or not port:
        raise BadValueError(f"expected MODULE_ID.PORT, got {text!r}")
    try:
        return int(mid), port
    except ValueError as exc:
        raise BadValueError(f"bad module id in {text!r}") from exc


def resolve_version(vt: Vistrail, text: str) -> int:
    """A version id or a tag name."""
    try:
        v = int(text)
    except ValueError:
        return resolve_tag(vt, text)
    if not vt.has_version(v):
        raise UnknownVersionError(v)
    return v


def _mutate(project: Project, fn):
    """Single-writer edit: lock, load, apply, save."""
    with project.lock():
        vt = project.load_vistrail()
        result = fn(vt)
        project.save_vistrail(vt)
    return result


def _echo_json(obj) -> None:
    click.echo(canonical_dumps(obj), nl=False)


@click.group()
@click.version_option(version="0.1.0", prog_name="vt")
def cli():
    """Provenance-first workflow engine: every edit is an action, every
    version stays materializable, every run is logged."""


@cli.command()
@click.option("--id", "vistrail_id", default=None, help="Explicit vistrail UUID (reproducible sessions).")
@click.option("--dir", "directory", default=".", type=click.Path(), help="Project root (default: cwd).")
def init(vistrail_id, directory):
    """Create a new project in the current directory."""
    project = Project.init(directory, vistrail_id=vistrail_id)
    click.echo(f"initialized project at {project.root.resolve()}")


@cli.command("add-module")
@click.argument("package")
@click.argument("version")
@click.argument("name")
@click.option("--param", "params", multiple=True, help="NAME=VALUE (repeatable).")
def add_module(package, version, name, params):
    """Append an action adding one module at HEAD."""
    project = Project.discover()
    values = dict(parse_param_assignment(p) for p in params)

    def fn(vt: Vistrail):
        mid = vt.next_module_id
        module = ModuleInstance(mid, (package, version, name), values)
        v = append_action(
            vt, project.head(), [AddModule(module)],
            user=project.action_author(), note=USER_EDIT, timestamp=project.action_clock(),
        )
        return v, mid

    v, mid = _mutate(project, fn)
    project.set_head(v)
    click.echo(f"version {v}, module {mid}")


@cli.command("delete-module")
@click.argument("module_id", type=int)
def delete_module(module_id):
    """Delete a module and its connections as one action."""
    project = Project.discover()

    def fn(vt: Vistrail):
        w = materialize(vt, project.head())
        if module_id not in w.modules:
            raise VistrailError(f"no module {module_id} at HEAD")
        ops = [DeleteConnection(c.connection_id) for c in sorted(
            w.incident_connections(module_id), key=lambda c: c.connection_id)]
        ops.append(DeleteModule(module_id))
        return append_action(vt, project.head(), ops,
                             user=project.action_author(), note=USER_EDIT, timestamp=project.action_clock())

    v = _mutate(project, fn)
    project.set_head(v)
    click.echo(f"version {v}")


@cli.command()
@click.argument("source")
@click.argument("target")
def connect(source, target):
    """Connect SRC_ID.PORT to DST_ID.PORT."""
    project = Project.discover()
    src_mid, src_port = parse_endpoint(source)
    dst_mid, dst_port = parse_endpoint(target)

    def fn(vt: Vistrail):
        cid = vt.next_connection_id
        conn = Connection(cid, src_mid, src_port, dst_mid, dst_port)
        v = append_action(vt, project.head(), [AddConnection(conn)],
                          user=project.action_author(), note=USER_EDIT, timestamp=project.action_clock())
        return v, cid

    v, cid = _mutate(project, fn)
    project.set_head(v)
    click.echo(f"version {v}, connection {cid}")


@cli.command()
@click.argument("connection_id", type=int)
def disconnect(connection_id):
    """Remove one connection."""
    project = Project.discover()

    def fn(vt: Vistrail):
        return append_action(vt, project.head(), [DeleteConnection(connection_id)],
                             user=project.action_author(), note=USER_EDIT, timestamp=project.action_clock())

    v = _mutate(project, fn)
    project.set_head(v)
    click.echo(f"version {v}")


@cli.command("set-param")
@click.argument("module_id", type=int)
@click.argument("name")
@click.argument("value")
def set_param(module_id, name, value):
    """Set a module parameter (new version)."""
    project = Project.discover()
    parsed = parse_value(value)

    def fn(vt: Vistrail):
        return append_action(vt, project.head(), [SetParameter(module_id, name, parsed)],
                             user=project.action_author(), note=USER_EDIT, timestamp=project.action_clock())

    v = _mutate(project, fn)
    project.set_head(v)
    click.echo(f"version {v}")


@cli.command("tag")
@click.argument("args", nargs=-1)
def tag_cmd(args):
    """tag [VERSION] NAME: name a version (moves the name if it exists)."""
    project = Project.discover()
    if len(args) == 1:
        version_text, name = None, args[0]
    elif len(args) == 2:
        version_text, name = args
    else:
        raise BadValueError("usage: vt tag [VERSION] NAME")

    def fn(vt: Vistrail):
        v = resolve_version(vt, version_text) if version_text is not None else project.head()
        tag(vt, v, name)
        return v

    v = _mutate(project, fn)
    click.echo(f"tagged version {v} as {name!r}")


@cli.command("annotate")
@click.argument("args", nargs=-1)
def annotate_cmd(args):
    """annotate [VERSION] KEY VALUE: attach free-form metadata."""
    project = Project.discover()
    if len(args) == 2:
        version_text, key, value = None, args[0], args[1]
    elif len(args) == 3:
        version_text, key, value = args
    else:
        raise BadValueError("usage: vt annotate [VERSION] KEY VALUE")

    def fn(vt: Vistrail):
        v = resolve_version(vt, version_text) if version_text is not None else project.head()
        annotate(vt, v, key, value)
        return v

    v = _mutate(project, fn)
    click.echo(f"annotated version {v}: {key}")


def _tree_obj(vt: Vistrail) -> dict:
    versions = []
    for e in version_tree(vt):
        entry = {"id": e.version_id, "parent": e.parent_id, "tags": list(e.tags)}
        if e.timestamp is not None:
            entry["timestamp"] = format_timestamp(e.timestamp)
        if e.user:
            entry["user"] = e.user
        if e.note:
            entry["note"] = e.note
        versions.append(entry)
    return {"versions": versions}


@cli.command()
@click.option("--json", "as_json", is_flag=True)
def tree(as_json):
    """List every version with parent, tags, note."""
    project = Project.discover()
    vt = project.load_vistrail()
    if as_json:
        _echo_json(_tree_obj(vt))
        return
    head = project.head()
    for e in version_tree(vt):
        marker = "@" if e.version_id == head else "*"
        parent = "-" if e.parent_id is None else str(e.parent_id)
        tags = f"  [{', '.join(e.tags)}]" if e.tags else ""
        note = f"  {e.note}" if e.note else ""
        ts = f"  {format_timestamp(e.timestamp)}" if e.timestamp else ""
        user = f"  {e.user}" if e.user else ""
        click.echo(f"{marker} {e.version_id} <- {parent}{tags}{note}{user}{ts}")


@cli.command()
@click.argument("version")
def checkout(version):
    """Point HEAD at a version id or tag."""
    project = Project.discover()
    vt = project.load_vistrail()
    v = resolve_version(vt, version)
    project.set_head(v)
    click.echo(f"HEAD is now at version {v}")


def _render_workflow(w: Workflow, vt: Vistrail, v: int) -> list[str]:
    lines = [f"version {v}: {len(w.modules)} module(s), {len(w.connections)} connection(s)"]
    for mid in sorted(w.modules):
        m = w.modules[mid]
        lines.append(f"module {mid}: {m.package_id}/{m.package_version} {m.module_name}")
        for name in sorted(m.parameter_values):
            lines.append(f"  {name} = {m.parameter_values[name].render()}")
    for cid in sorted(w.connections):
        c = w.connections[cid]
        lines.append(f"connection {cid}: {c.source_module}.{c.source_port} -> {c.target_module}.{c.target_port}")
    return lines


@cli.command()
@click.argument("version", required=False)
@click.option("--json", "as_json", is_flag=True)
def show(version, as_json):
    """Materialize and print a version (default HEAD)."""
    project = Project.discover()
    vt = project.load_vistrail()
    v = resolve_version(vt, version) if version else project.head()
    w = materialize(vt, v)
    if as_json:
        _echo_json({"version": v, "workflow": workflow_to_obj(w)})
        return
    for line in _render_workflow(w, vt, v):
        click.echo(line)


def _delta_obj(delta) -> dict:
    return {
        "added_modules": sorted(delta.added_modules),
        "deleted_modules": sorted(delta.deleted_modules),
        "shared_modules": sorted(delta.shared_modules),
        "added_connections": sorted(delta.added_connections),
        "deleted_connections": sorted(delta.deleted_connections),
        "parameter_changes": [
            {
                "module_id": c.module_id,
                "parameter": c.param_name,
                "from": value_to_obj(c.value_in_v1) if c.value_in_v1 is not None else None,
                "to": value_to_obj(c.value_in_v2) if c.value_in_v2 is not None else None,
            }
            for c in delta.parameter_changes
        ],
    }


@cli.command("diff")
@click.argument("v1")
@click.argument("v2")
@click.option("--json", "as_json", is_flag=True)
def diff_cmd(v1, v2, as_json):
    """Delta between two versions, from their common ancestor's actions."""
    project = Project.discover()
    vt = project.load_vistrail()
    a, b = resolve_version(vt, v1), resolve_version(vt, v2)
    delta = diff(vt, a, b)
    if as_json:
        _echo_json({"from": a, "to": b, "delta": _delta_obj(delta)})
        return
    click.echo(f"diff {a} -> {b}")
    for mid in sorted(delta.added_modules):
        click.echo(f"+ module {mid}")
    for mid in sorted(delta.deleted_modules):
        click.echo(f"- module {mid}")
    for cid in sorted(delta.added_connections):
        click.echo(f"+ connection {cid}")
    for cid in sorted(delta.deleted_connections):
        click.echo(f"- connection {cid}")
    for c in delta.parameter_changes:
        old = c.value_in_v1.render() if c.value_in_v1 is not None else "(unset)"
        new = c.value_in_v2.render() if c.value_in_v2 is not None else "(unset)"
        click.echo(f"~ module {c.module_id} {c.param_name}: {old} -> {new}")
    if delta.empty:
        click.echo("no differences")


def _print_run(log: ExecutionLog, w: Workflow) -> None:
    click.echo(f"exec {log.exec_id} status {log.status}")
    connected_sources = {(c.source_module) for c in w.connections.values()}
    for entry in log.module_executions:
        if entry.status == "failed":
            click.echo(f"module {entry.module_id} {entry.descriptor_key[2]}: failed ({entry.error})")
        elif entry.status == "skipped":
            click.echo(f"module {entry.module_id} {entry.descriptor_key[2]}: skipped")
        elif entry.module_id not in connected_sources and entry.outputs:
            click.echo(f"module {entry.module_id} {entry.descriptor_key[2]}:")
            for port in sorted(entry.outputs):
                click.echo(f"  {port} = {entry.outputs[port].render()}")


@cli.command()
@click.argument("version", required=False)
@click.option("--set", "overrides", multiple=True, help="MODULE_ID.PARAM=VALUE (repeatable).")
@click.option("--json", "as_json", is_flag=True)
def run(version, overrides, as_json):
    """Execute a version (default HEAD) and persist its log under runs/."""
    project = Project.discover()
    vt = project.load_vistrail()
    v = resolve_version(vt, version) if version else project.head()
    parsed: dict[tuple[int, str], Value] = {}
    for text in overrides:
        target, sep, raw = text.partition("=")
        if not sep:
            raise BadValueError(f"expected MODULE_ID.PARAM=VALUE, got {text!r}")
        mid, pname = parse_endpoint(target)
        parsed[(mid, pname)] = parse_value(raw)
    with project.lock():  # refs.json / runs writes share the project lock
        log = execute(
            vt, v, project.registry(), project.data_store(),
            overrides=parsed, config=project.engine_config(), exec_store=project.exec_store(),
        )
    if as_json:
        _echo_json(log_to_obj(log))
        return
    _print_run(log, materialize(vt, v))


@cli.command("log")
@click.option("--version", "version", default=None, type=int)
@click.option("--status", "status", default=None, type=click.Choice(["success", "failed", "partial"]))
@click.option("--json", "as_json", is_flag=True)
def log_cmd(version, status, as_json):
    """List recorded executions."""
    project = Project.discover()
    logs = project.exec_store().query(version=version, status=status)
    if as_json:
        _echo_json({"executions": [log_to_obj(l) for l in logs]})
        return
    for l in logs:
        click.echo(f"{l.exec_id}  version {l.version}  {l.status}  {l.started_at.isoformat()}")
    if not logs:
        click.echo("no executions")


@cli.command()
@click.argument("version", required=False)
@click.option("--apply", "do_apply", is_flag=True, help="Append the upgrade as a new version.")
@click.option("--allow-partial", is_flag=True, help="Skip blocked modules instead of refusing.")
@click.option("--json", "as_json", is_flag=True)
def upgrade(version, do_apply, allow_partial, as_json):
    """Plan (and with --apply, perform) a package upgrade of a version."""
    project = Project.discover()
    reg = project.registry()

    if not do_apply:
        vt = project.load_vistrail()
        v = resolve_version(vt, version) if version else project.head()
        plan = compute_upgrade(vt, v, reg)
        if as_json:
            _echo_json(_plan_obj(plan))
            return
        _print_plan(plan)
        return

    def fn(vt: Vistrail):
        v = resolve_version(vt, version) if version else project.head()
        plan = compute_upgrade(vt, v, reg)
        new_v = apply_upgrade(vt, v, plan, reg, user=project.action_author(),
                              allow_partial=allow_partial, timestamp=project.action_clock())
        return plan, new_v

    plan, new_v = _mutate(project, fn)
    project.set_head(new_v)
    if as_json:
        _echo_json({"version": new_v, "plan": _plan_obj(plan)})
        return
    _print_plan(plan)
    click.echo(f"upgraded to version {new_v}")


def _plan_obj(plan) -> dict:
    return {
        "version": plan.version,
        "rewrites": [
            {
                "module_id": r.module_id,
                "from_version": r.rule.from_version,
                "to_version": r.rule.to_version,
                "to_module": r.rule.to_module,
            }
            for r in plan.rewrites
        ],
        "blocked": [{"module_id": b.module_id, "reason": b.reason} for b in plan.blocked],
    }


def _print_plan(plan) -> None:
    if not plan.rewrites and not plan.blocked:
        click.echo(f"version {plan.version} is up to date")
        return
    for r in plan.rewrites:
        click.echo(
            f"rewrite module {r.module_id}: {r.rule.from_module} {r.rule.from_version}"
            f" -> {r.rule.to_module} {r.rule.to_version}"
        )
    for b in plan.blocked:
        click.echo(f"blocked module {b.module_id}: {b.reason}")


# -- mashup group --------------------------------------------------------------


@cli.group()
def mashup():
    """Create, list, and run parameter-aliased mashups."""


@mashup.command("create")
@click.argument("title")
@click.option("--version", "version", default=None, help="Pinned version (default HEAD).")
@click.option("--alias", "aliases", multiple=True, required=True, help="ALIAS=MODULE_ID.PARAM (repeatable).")
@click.option("--default", "defaults", multiple=True, help="ALIAS=VALUE (default: the parameter's current value).")
@click.option("--choices", "choices", multiple=True, help="ALIAS=V1,V2,... closed value set.")
@click.option("--id", "mashup_id", default=None, help="Explicit mashup id (reproducible sessions).")
def mashup_create(title, version, aliases, defaults, choices, mashup_id):
    """Define a mashup over the current version."""
    project = Project.discover()
    reg = project.registry()
    default_map = dict(parse_param_assignment(d) for d in defaults)
    choice_map: dict[str, tuple[Value, ...]] = {}
    for text in choices:
        name, sep, raw = text.partition("=")
        if not sep:
            raise BadValueError(f"expected ALIAS=V1,V2,..., got {text!r}")
        choice_map[name] = tuple(parse_value(part) for part in raw.split(","))

    def fn(vt: Vistrail):
        v = resolve_version(vt, version) if version else project.head()
        w = materialize(vt, v)
        parsed = []
        for text in aliases:
            name, sep, target = text.partition("=")
            if not sep:
                raise BadValueError(f"expected ALIAS=MODULE_ID.PARAM, got {text!r}")
            mid, pname = parse_endpoint(target)
            if name in default_map:
                default = default_map[name]
            else:
                mod = w.modules.get(mid)
                stored = mod.parameter_values.get(pname) if mod else None
                if stored is None:
                    desc = reg.try_lookup(mod.descriptor_key) if mod else None
                    param = desc.parameter(pname) if desc else None
                    stored = param.default if param else None
                if stored is None:
                    raise BadValueError(f"alias {name!r}: no current value for {mid}.{pname}; pass --default")
                default = stored
            parsed.append(MashupAlias(name, mid, pname, default, choice_map.get(name)))
        return create_mashup(vt, v, title, parsed, reg, mashup_id=mashup_id)

    mid = _mutate(project, fn)
    click.echo(f"mashup {mid}")


@mashup.command("list")
@click.option("--json", "as_json", is_flag=True)
def mashup_list(as_json):
    project = Project.discover()
    vt = project.load_vistrail()
    if as_json:
        _echo_json({"mashups": [mashup_to_obj(vt.mashups[m]) for m in sorted(vt.mashups)]})
        return
    for mid in sorted(vt.mashups):
        m = vt.mashups[mid]
        click.echo(f"{mid}  version {m.version}  {m.title}  ({len(m.aliases)} alias(es))")
    if not vt.mashups:
        click.echo("no mashups")


@mashup.command("run")
@click.argument("mashup_id")
@click.option("--bind", "binds", multiple=True, help="ALIAS=VALUE (repeatable).")
@click.option("--json", "as_json", is_flag=True)
def mashup_run(mashup_id, binds, as_json):
    project = Project.discover()
    vt = project.load_vistrail()
    bindings = dict(parse_param_assignment(b) for b in binds)
    with project.lock():
        log = execute_mashup(
            vt, mashup_id, bindings, project.registry(), project.data_store(),
            config=project.engine_config(), exec_store=project.exec_store(),
        )
    if as_json:
        _echo_json(log_to_obj(log))
        return
    m = vt.mashups[mashup_id]
    _print_run(log, materialize(vt, m.version))


# -- data group ------------------------------------------------------------------


@cli.group()
def data():
    """Content-addressed data store."""


@data.command("put")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--name", default=None)
@click.option("--version-of", "version_of", default=None, help="Predecessor content hash.")
def data_put(file, name, version_of):
    project = Project.discover()
    payload = Path(file).read_bytes()
    with project.lock():
        store = project.data_store()
        ref = store.new_version(version_of, payload, name) if version_of else store.put(payload, name)
    click.echo(ref.content_hash)


@data.command("get")
@click.argument("content_hash")
@click.option("-o", "--output", default=None, type=click.Path(dir_okay=False))
def data_get(content_hash, output):
    project = Project.discover()
    payload = project.data_store().get(content_hash)
    if output:
        Path(output).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)


@data.command("versions")
@click.argument("content_hash")
@click.option("--json", "as_json", is_flag=True)
def data_versions(content_hash, as_json):
    project = Project.discover()
    chain = project.data_store().history(content_hash)
    if as_json:
        _echo_json({"versions": [ref_to_obj(r) for r in chain]})
        return
    for ref in chain:
        name = f"  {ref.name}" if ref.name else ""
        click.echo(f"{ref.content_hash}  {ref.size_bytes} bytes{name}")


# -- packages group ----------------------------------------------------------------


@cli.group()
def packages():
    """Registered module packages."""


@packages.command("list")
@click.option("--json", "as_json", is_flag=True)
def packages_list(as_json):
    project = Project.discover()
    reg = project.registry()
    if as_json:
        _echo_json({"packages": [package_to_obj(p) for p in reg.packages()]})
        return
    for pkg in reg.packages():
        names = ", ".join(d.module_name for d in pkg.descriptors)
        click.echo(f"{pkg.package_id} {pkg.package_version}: {names}")


@packages.command("load")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def packages_load(file):
    """Validate a manifest and install it under packages/."""
    project = Project.discover()
    pkg = load_package_manifest(file)
    reg = project.registry()
    if (pkg.package_id, pkg.package_version) in {(p.package_id, p.package_version) for p in reg.packages()}:
        raise VistrailError(f"DUPLICATE_PACKAGE: {pkg.package_id} {pkg.package_version}")
    dest = project.packages_dir / f"{pkg.package_id}-{pkg.package_version}.pkgj"
    dest.write_bytes(Path(file).read_bytes())
    click.echo(f"loaded {pkg.package_id} {pkg.package_version}")


@cli.command()
@click.option("--port", default=8099, type=int)
@click.option("--host", default="127.0.0.1")
def serve(port, host):
    """Serve the HTTP API (and the studio, if built) for this project."""
    import signal
    import socket

    import uvicorn

    from .service import create_app

    project = Project.discover()
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        except OSError:
            raise VistrailError(f"PORT_IN_USE: {host}:{port}")

    lock = project.lock()
    lock.acquire()  # fail fast with LOCKED; held for the serve lifetime

    # uvicorn re-raises a captured SIGTERM/SIGINT with the pre-run handler
    # restored after graceful shutdown, so that handler must release the lock
    def _release_and_exit(signum, frame):
        lock.release()
        raise SystemExit(0)

    signal.signal(signal.SIGTERM, _release_and_exit)
    signal.signal(signal.SIGINT, _release_and_exit)
    try:
        app = create_app(project.root, hold_lock=False)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        lock.release()


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except VistrailError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"IO_ERROR: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
