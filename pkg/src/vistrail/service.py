"""HTTP/JSON service over one project; the studio UI's only backend.

Every response body is canonical JSON. Mutations are serialized behind one
writer mutex, and the whole service holds the project's writer lock for its
lifetime so CLI writers cannot interleave. Errors use
``{"error": CODE, "detail": str}`` with 404 for unknown ids, 409 for lock and
duplicate conflicts, 422 for anything invalid.
"""

from __future__ import annotations

import os
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.staticfiles import StaticFiles

from .canonical import (
    canonical_dumps,
    check_fields,
    expect_array,
    expect_int,
    expect_object,
    expect_str,
    format_timestamp,
)
from .datastore import ref_to_obj
from .engine import execute, log_to_obj
from .errors import (
    DuplicatePackageError,
    LockedError,
    NotFoundError,
    UnknownAliasError,
    UnknownDescriptorError,
    UnknownMashupError,
    UnknownTagError,
    UnknownVersionError,
    VistrailError,
)
from .mashup import create_mashup, execute_mashup
from .model import (
    AddConnection,
    AddModule,
    Connection,
    ModuleInstance,
    Value,
    op_from_obj,
    value_from_obj,
    value_to_obj,
    workflow_to_obj,
)
from .project import Project
from .provenance import MashupAlias, annotate, append_action, diff, mashup_to_obj, materialize, tag, version_tree
from .registry import apply_upgrade, compute_upgrade, package_to_obj

_NOT_FOUND = (UnknownVersionError, NotFoundError, UnknownMashupError, UnknownDescriptorError, UnknownTagError, UnknownAliasError)
_CONFLICT = (LockedError, DuplicatePackageError)


def _json_response(obj, status_code: int = 200) -> Response:
    return Response(content=canonical_dumps(obj), status_code=status_code, media_type="application/json")


def _error_response(exc: VistrailError) -> Response:
    if isinstance(exc, _NOT_FOUND):
        status = 404
    elif isinstance(exc, _CONFLICT):
        status = 409
    else:
        status = 422
    return _json_response({"error": exc.code, "detail": exc.detail}, status_code=status)


def _tree_obj(vt) -> dict:
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


def _allocate_ids(vt, ops):
    """Fill in server-allocated module/connection ids for ops posted with id 0."""
    out = []
    for op in ops:
        if isinstance(op, AddModule) and op.module.module_id == 0:
            op = AddModule(
                ModuleInstance(vt.allocate_module_id(), op.module.descriptor_key, op.module.parameter_values)
            )
        elif isinstance(op, AddConnection) and op.connection.connection_id == 0:
            c = op.connection
            op = AddConnection(
                Connection(vt.allocate_connection_id(), c.source_module, c.source_port, c.target_module, c.target_port)
            )
        out.append(op)
    return out


def create_app(project_root: str | Path, hold_lock: bool = True, static_dir: str | Path | None = None) -> FastAPI:
    project = Project(Path(project_root))
    lock = project.lock()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if hold_lock:
            lock.acquire()
        try:
            yield
        finally:
            if hold_lock:
                lock.release()

    app = FastAPI(title="vistrail service", lifespan=lifespan)
    state = threading.Lock()  # serializes every request touching project state

    def author(payload_user: str | None) -> str:
        return payload_user or os.environ.get("VT_USER") or project.config()["default_user"]

    @app.exception_handler(VistrailError)
    async def _domain_error(_request, exc: VistrailError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _request_error(_request, exc: RequestValidationError):
        return _json_response({"error": "FORMAT_ERROR", "detail": str(exc.errors()[:1])}, status_code=422)

    # -- read endpoints ------------------------------------------------------

    @app.get("/api/tree")
    def get_tree():
        with state:
            return _json_response(_tree_obj(project.load_vistrail()))

    @app.get("/api/workflow/{version}")
    def get_workflow(version: int):
        with state:
            vt = project.load_vistrail()
            w = materialize(vt, version)
            return _json_response({"version": version, "workflow": workflow_to_obj(w)})

    @app.get("/api/diff")
    def get_diff(from_version: int = Query(alias="from"), to_version: int = Query(alias="to")):
        with state:
            vt = project.load_vistrail()
            delta = diff(vt, from_version, to_version)
            return _json_response({"from": from_version, "to": to_version, "delta": _delta_obj(delta)})

    @app.get("/api/packages")
    def get_packages():
        with state:
            return _json_response({"packages": [package_to_obj(p) for p in project.registry().packages()]})

    @app.get("/api/executions")
    def list_executions(version: int | None = None, status: str | None = None):
        with state:
            logs = project.exec_store().query(version=version, status=status)
            return _json_response({"executions": [log_to_obj(l) for l in logs]})

    @app.get("/api/executions/{exec_id}")
    def get_execution(exec_id: str):
        with state:
            return _json_response(log_to_obj(project.exec_store().get(exec_id)))

    @app.get("/api/mashups")
    def list_mashups():
        with state:
            vt = project.load_vistrail()
            return _json_response({"mashups": [mashup_to_obj(vt.mashups[m]) for m in sorted(vt.mashups)]})

    @app.get("/api/data/{content_hash}")
    def get_data(content_hash: str):
        with state:
            payload = project.data_store().get(content_hash)
            return Response(content=payload, media_type="application/octet-stream")

    # -- mutations -------------------------------------------------------------

    @app.post("/api/actions")
    def post_action(payload: dict = Body(...)):
        check_fields(payload, "body", {"parent", "ops"}, optional={"user", "note"})
        parent = expect_int(payload["parent"], "body.parent")
        ops = [
            op_from_obj(o, f"body.ops[{i}]")
            for i, o in enumerate(expect_array(payload["ops"], "body.ops"))
        ]
        with state:
            vt = project.load_vistrail()
            ops = _allocate_ids(vt, ops)
            version = append_action(
                vt, parent, ops,
                user=author(payload.get("user")),
                note=payload.get("note", "user-edit"),
                timestamp=project.action_clock(),
            )
            project.save_vistrail(vt)
            return _json_response({"version": version})

    @app.post("/api/tags")
    def post_tag(payload: dict = Body(...)):
        check_fields(payload, "body", {"version", "name"})
        with state:
            vt = project.load_vistrail()
            tag(vt, expect_int(payload["version"], "body.version"), expect_str(payload["name"], "body.name"))
            project.save_vistrail(vt)
            return _json_response({"version": payload["version"], "name": payload["name"]})

    @app.post("/api/annotations")
    def post_annotation(payload: dict = Body(...)):
        check_fields(payload, "body", {"version", "key", "value"})
        with state:
            vt = project.load_vistrail()
            annotate(
                vt,
                expect_int(payload["version"], "body.version"),
                expect_str(payload["key"], "body.key"),
                expect_str(payload["value"], "body.value"),
            )
            project.save_vistrail(vt)
            return _json_response({"version": payload["version"], "key": payload["key"]})

    @app.post("/api/upgrade")
    def post_upgrade(payload: dict = Body(...)):
        check_fields(payload, "body", {"version"}, optional={"apply", "allow_partial"})
        version = expect_int(payload["version"], "body.version")
        do_apply = bool(payload.get("apply", False))
        allow_partial = bool(payload.get("allow_partial", False))
        with state:
            vt = project.load_vistrail()
            reg = project.registry()
            plan = compute_upgrade(vt, version, reg)
            if not do_apply:
                return _json_response({"plan": _plan_obj(plan)})
            new_version = apply_upgrade(
                vt, version, plan, reg,
                user=author(None), allow_partial=allow_partial, timestamp=project.action_clock(),
            )
            project.save_vistrail(vt)
            return _json_response({"version": new_version, "plan": _plan_obj(plan)})

    @app.post("/api/executions")
    def post_execution(payload: dict = Body(...)):
        check_fields(payload, "body", {"version"}, optional={"overrides"})
        version = expect_int(payload["version"], "body.version")
        overrides: dict[tuple[int, str], Value] = {}
        for i, item in enumerate(expect_array(payload.get("overrides", []), "body.overrides")):
            loc = f"body.overrides[{i}]"
            item = expect_object(item, loc)
            check_fields(item, loc, {"module_id", "parameter", "value"})
            overrides[(expect_int(item["module_id"], f"{loc}.module_id"), expect_str(item["parameter"], f"{loc}.parameter"))] = (
                value_from_obj(item["value"], f"{loc}.value")
            )
        with state:
            vt = project.load_vistrail()
            log = execute(
                vt, version, project.registry(), project.data_store(),
                overrides=overrides, config=project.engine_config(), exec_store=project.exec_store(),
            )
            return _json_response({"exec_id": log.exec_id})

    @app.post("/api/mashups")
    def post_mashup(payload: dict = Body(...)):
        check_fields(payload, "body", {"version", "title", "aliases"}, optional={"id"})
        aliases = []
        for i, aobj in enumerate(expect_array(payload["aliases"], "body.aliases")):
            loc = f"body.aliases[{i}]"
            aobj = expect_object(aobj, loc)
            check_fields(aobj, loc, {"alias", "module_id", "parameter", "default"}, optional={"choices"})
            choices = None
            if "choices" in aobj:
                choices = tuple(
                    value_from_obj(c, f"{loc}.choices[{j}]")
                    for j, c in enumerate(expect_array(aobj["choices"], f"{loc}.choices"))
                )
            aliases.append(
                MashupAlias(
                    alias=expect_str(aobj["alias"], f"{loc}.alias"),
                    module_id=expect_int(aobj["module_id"], f"{loc}.module_id"),
                    param_name=expect_str(aobj["parameter"], f"{loc}.parameter"),
                    default=value_from_obj(aobj["default"], f"{loc}.default"),
                    choices=choices,
                )
            )
        with state:
            vt = project.load_vistrail()
            mashup_id = create_mashup(
                vt,
                expect_int(payload["version"], "body.version"),
                expect_str(payload["title"], "body.title"),
                aliases,
                project.registry(),
                mashup_id=payload.get("id"),
            )
            project.save_vistrail(vt)
            return _json_response({"mashup_id": mashup_id})

    @app.post("/api/mashups/{mashup_id}/run")
    def run_mashup(mashup_id: str, payload: dict = Body(...)):
        check_fields(payload, "body", set(), optional={"bindings"})
        bindings = {
            name: value_from_obj(v, f"body.bindings.{name}")
            for name, v in expect_object(payload.get("bindings", {}), "body.bindings").items()
        }
        with state:
            vt = project.load_vistrail()
            log = execute_mashup(
                vt, mashup_id, bindings, project.registry(), project.data_store(),
                config=project.engine_config(), exec_store=project.exec_store(),
            )
            return _json_response(log_to_obj(log))

    @app.post("/api/data")
    async def post_data(request: Request):
        payload = await request.body()
        name = request.query_params.get("name")
        version_of = request.query_params.get("version_of")
        with state:
            store = project.data_store()
            ref = store.new_version(version_of, payload, name) if version_of else store.put(payload, name)
            return _json_response(ref_to_obj(ref))

    static = _find_static_dir(project.root, static_dir)
    if static is not None:
        app.mount("/", StaticFiles(directory=static, html=True), name="studio")

    return app


def _find_static_dir(project_root: Path, explicit: str | Path | None) -> Path | None:
    """Studio assets: explicit argument, $VT_STUDIO_DIR, <project>/studio, or
    the in-repo frontend build."""
    candidates = [
        Path(explicit) if explicit else None,
        Path(os.environ["VT_STUDIO_DIR"]) if os.environ.get("VT_STUDIO_DIR") else None,
        project_root / "studio",
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
    ]
    for c in candidates:
        if c is not None and (c / "index.html").exists():
            return c
    return None
