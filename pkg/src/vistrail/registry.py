"""Versioned package registry and workflow upgrade machinery.

Upgrading never rewrites history: it appends one action that deletes the
old module instances (connections first) and adds fresh ones on the newer
package version, re-wiring connections through each rule's port map. The
pre-upgrade version stays materializable and executable forever.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .canonical import check_fields, expect_array, expect_object, expect_str, load_json
from .errors import (
    BlockedModulesError,
    DuplicatePackageError,
    EmptyPlanError,
    FormatError,
    PlanStaleError,
    UnknownDescriptorError,
    ValidationFailedError,
)
from .model import (
    AddConnection,
    AddModule,
    Connection,
    DeleteConnection,
    DeleteModule,
    DescriptorKey,
    ModuleDescriptor,
    ModuleInstance,
    PrimitiveOp,
    apply_op,
    descriptor_from_obj,
    descriptor_to_obj,
    validate_workflow,
)
from .provenance import Vistrail, append_action, materialize


def parse_version(text: str) -> tuple[int, ...]:
    """Dotted numeric version into a comparable tuple ("1.0" < "1.10" < "2.0")."""
    try:
        parts = tuple(int(p) for p in text.split("."))
    except ValueError as exc:
        raise ValueError(f"bad version {text!r}") from exc
    if not parts:
        raise ValueError(f"bad version {text!r}")
    # trailing zeros are insignificant: "1.0" == "1.0.0"
    while len(parts) > 1 and parts[-1] == 0:
        parts = parts[:-1]
    return parts


def version_less(a: str, b: str) -> bool:
    return parse_version(a) < parse_version(b)


@dataclass(frozen=True)
class UpgradeRule:
    """Rewrites one module kind from an older package version into this one.

    Unmapped ports/params carry over under their own names; ``dropped_params``
    are discarded.
    """

    from_package: str
    from_version: str
    from_module: str
    to_version: str
    to_module: str
    port_map: dict[str, str] = field(default_factory=dict)
    param_map: dict[str, str] = field(default_factory=dict)
    dropped_params: frozenset[str] = frozenset()

    def __post_init__(self):
        if not version_less(self.from_version, self.to_version):
            raise ValueError(f"rule must upgrade forward: {self.from_version} -> {self.to_version}")

    @property
    def from_key(self) -> DescriptorKey:
        return (self.from_package, self.from_version, self.from_module)

    def map_port(self, name: str) -> str:
        return self.port_map.get(name, name)

    def map_param(self, name: str) -> str:
        return self.param_map.get(name, name)


@dataclass(frozen=True)
class Package:
    package_id: str
    package_version: str
    descriptors: tuple[ModuleDescriptor, ...] = ()
    upgrade_rules: tuple[UpgradeRule, ...] = ()  # rules INTO this version

    def __post_init__(self):
        names = [d.module_name for d in self.descriptors]
        if len(names) != len(set(names)):
            raise ValueError(f"{self.package_id} {self.package_version}: duplicate module name")
        for rule in self.upgrade_rules:
            if rule.to_version != self.package_version:
                raise ValueError(f"rule into {rule.to_version} declared on package version {self.package_version}")
            target = next((d for d in self.descriptors if d.module_name == rule.to_module), None)
            if target is None:
                raise ValueError(f"rule targets unknown module {rule.to_module!r}")
            for port in rule.port_map.values():
                if target.input_port(port) is None and target.output_port(port) is None:
                    raise ValueError(f"rule maps to unknown port {port!r} on {rule.to_module}")
            for param in rule.param_map.values():
                if target.parameter(param) is None:
                    raise ValueError(f"rule maps to unknown parameter {param!r} on {rule.to_module}")


class PackageRegistry:
    """Exact-version descriptor lookup plus the upgrade-rule index.

    Registration happens at startup; afterwards the registry is treated as
    immutable and is safe to share between readers.
    """

    def __init__(self):
        self._packages: dict[tuple[str, str], Package] = {}
        self._rules: dict[DescriptorKey, list[tuple[str, UpgradeRule]]] = {}

    def register_package(self, pkg: Package) -> None:
        key = (pkg.package_id, pkg.package_version)
        if key in self._packages:
            raise DuplicatePackageError(f"{pkg.package_id} {pkg.package_version}")
        self._packages[key] = pkg
        for rule in pkg.upgrade_rules:
            self._rules.setdefault(rule.from_key, []).append((pkg.package_id, rule))

    def packages(self) -> list[Package]:
        return [self._packages[k] for k in sorted(self._packages)]

    def versions_of(self, package_id: str) -> list[str]:
        versions = [v for (pid, v) in self._packages if pid == package_id]
        return sorted(versions, key=parse_version)

    def newest_version(self, package_id: str) -> str | None:
        versions = self.versions_of(package_id)
        return versions[-1] if versions else None

    def try_lookup(self, key: DescriptorKey) -> ModuleDescriptor | None:
        pkg = self._packages.get((key[0], key[1]))
        if pkg is None:
            return None
        return next((d for d in pkg.descriptors if d.module_name == key[2]), None)

    def lookup_descriptor(self, key: DescriptorKey) -> ModuleDescriptor:
        desc = self.try_lookup(key)
        if desc is None:
            raise UnknownDescriptorError(f"{key[0]} {key[1]} {key[2]}")
        return desc

    def rules_from(self, key: DescriptorKey) -> list[tuple[str, UpgradeRule]]:
        return list(self._rules.get(key, []))


# -- upgrade planning ---------------------------------------------------------


@dataclass(frozen=True)
class PlannedRewrite:
    module_id: int
    rule: UpgradeRule  # composed over the whole chain


@dataclass(frozen=True)
class BlockedModule:
    module_id: int
    reason: str  # NO_RULE | UNKNOWN_DESCRIPTOR


@dataclass(frozen=True)
class UpgradePlan:
    version: int
    rewrites: tuple[PlannedRewrite, ...] = ()
    blocked: tuple[BlockedModule, ...] = ()


def _compose(first: UpgradeRule, nxt: UpgradeRule) -> UpgradeRule:
    port_map = {}
    for name in set(first.port_map) | set(nxt.port_map):
        mapped = nxt.map_port(first.map_port(name))
        if mapped != name:
            port_map[name] = mapped
    dropped = set(first.dropped_params)
    for gone in nxt.dropped_params:
        # original names that arrive at `gone` after the first hop
        dropped.update(n for n, m in first.param_map.items() if m == gone)
        if gone not in first.param_map:
            dropped.add(gone)
    param_map = {}
    for name in set(first.param_map) | set(nxt.param_map):
        if name in dropped:
            continue
        mapped = nxt.map_param(first.map_param(name))
        if mapped != name:
            param_map[name] = mapped
    return UpgradeRule(
        from_package=first.from_package,
        from_version=first.from_version,
        from_module=first.from_module,
        to_version=nxt.to_version,
        to_module=nxt.to_module,
        port_map=port_map,
        param_map=param_map,
        dropped_params=frozenset(dropped),
    )


def _chain_for(reg: PackageRegistry, start: DescriptorKey) -> UpgradeRule | None:
    """Greedily compose rules from ``start`` along the maximal semver path."""
    package_id, version, module_name = start
    composed: UpgradeRule | None = None
    while True:
        candidates = reg.rules_from((package_id, version, module_name))
        if not candidates:
            return composed
        owner, rule = max(candidates, key=lambda item: parse_version(item[1].to_version))
        composed = rule if composed is None else _compose(composed, rule)
        package_id, version, module_name = owner, rule.to_version, rule.to_module


def compute_upgrade(vt: Vistrail, version: int, reg: PackageRegistry) -> UpgradePlan:
    """Plan the rewrite of every module that lags its package's newest
    registered version. Modules with no rule path are reported as blocked."""
    w = materialize(vt, version)
    rewrites: list[PlannedRewrite] = []
    blocked: list[BlockedModule] = []
    for mid in sorted(w.modules):
        mod = w.modules[mid]
        newest = reg.newest_version(mod.package_id)
        if newest is None or not version_less(mod.package_version, newest):
            continue
        chain = _chain_for(reg, mod.descriptor_key)
        if chain is None:
            blocked.append(BlockedModule(mid, "NO_RULE"))
        else:
            rewrites.append(PlannedRewrite(mid, chain))
    return UpgradePlan(version=version, rewrites=tuple(rewrites), blocked=tuple(blocked))


def upgrade_ops(
    vt: Vistrail, version: int, plan: UpgradePlan, reg: PackageRegistry
) -> list[PrimitiveOp]:
    """The op list one upgrade action will carry: delete incident connections,
    delete old modules, add replacements under fresh ids, re-wire."""
    w = materialize(vt, version)
    rules = {r.module_id: r.rule for r in plan.rewrites}
    for mid, rule in sorted(rules.items()):
        mod = w.modules.get(mid)
        if mod is None or mod.descriptor_key != rule.from_key:
            raise PlanStaleError(f"module {mid} no longer matches the plan")

    ops: list[PrimitiveOp] = []
    touched = sorted(
        {c.connection_id for c in w.connections.values() if c.source_module in rules or c.target_module in rules}
    )
    ops.extend(DeleteConnection(cid) for cid in touched)
    ops.extend(DeleteModule(mid) for mid in sorted(rules))

    next_module = vt.next_module_id
    replacement: dict[int, int] = {}
    for mid in sorted(rules):
        rule = rules[mid]
        old = w.modules[mid]
        new_desc = reg.lookup_descriptor((rule.from_package, rule.to_version, rule.to_module))
        params = {}
        for name, value in old.parameter_values.items():
            if name in rule.dropped_params:
                continue
            params[rule.map_param(name)] = value
        replacement[mid] = next_module
        ops.append(
            AddModule(
                ModuleInstance(
                    module_id=next_module,
                    descriptor_key=new_desc.key,
                    parameter_values=params,
                )
            )
        )
        next_module += 1

    next_connection = vt.next_connection_id
    for cid in touched:
        c = w.connections[cid]
        src_mid, src_port = c.source_module, c.source_port
        dst_mid, dst_port = c.target_module, c.target_port
        if src_mid in rules:
            src_port = rules[src_mid].map_port(src_port)
            src_mid = replacement[src_mid]
        if dst_mid in rules:
            dst_port = rules[dst_mid].map_port(dst_port)
            dst_mid = replacement[dst_mid]
        ops.append(
            AddConnection(Connection(next_connection, src_mid, src_port, dst_mid, dst_port))
        )
        next_connection += 1
    return ops


def apply_upgrade(
    vt: Vistrail,
    version: int,
    plan: UpgradePlan,
    reg: PackageRegistry,
    user: str = "",
    allow_partial: bool = False,
    timestamp=None,
) -> int:
    """Append the upgrade as one new version and return its id.

    Refuses partial upgrades unless explicitly allowed, and refuses to append
    anything whose result would not pass full validation.
    """
    vt.require_version(version)
    if plan.blocked and not allow_partial:
        raise BlockedModulesError(plan.blocked)
    if not plan.rewrites:
        raise EmptyPlanError(f"nothing to upgrade at version {version}")

    ops = upgrade_ops(vt, version, plan, reg)
    preview = materialize(vt, version)
    for op in ops:
        preview = apply_op(preview, op)
    report = validate_workflow(preview, reg)
    if not report.ok:
        raise ValidationFailedError(report)
    return append_action(vt, version, ops, user=user, note="upgrade", timestamp=timestamp)


# -- package manifests (.pkgj) -------------------------------------------------


def package_to_obj(pkg: Package) -> dict:
    return {
        "package_id": pkg.package_id,
        "package_version": pkg.package_version,
        "descriptors": [descriptor_to_obj(d) for d in pkg.descriptors],
        "upgrade_rules": [
            {
                "from_package": r.from_package,
                "from_version": r.from_version,
                "from_module": r.from_module,
                "to_module": r.to_module,
                "port_map": dict(sorted(r.port_map.items())),
                "param_map": dict(sorted(r.param_map.items())),
                "dropped_params": sorted(r.dropped_params),
            }
            for r in pkg.upgrade_rules
        ],
    }


def package_from_obj(obj: object, location: str) -> Package:
    obj = expect_object(obj, location)
    check_fields(obj, location, {"package_id", "package_version", "descriptors", "upgrade_rules"})
    package_id = expect_str(obj["package_id"], f"{location}.package_id")
    package_version = expect_str(obj["package_version"], f"{location}.package_version")
    descriptors = tuple(
        descriptor_from_obj(d, package_id, package_version, f"{location}.descriptors[{i}]")
        for i, d in enumerate(expect_array(obj["descriptors"], f"{location}.descriptors"))
    )
    rules = []
    for i, robj in enumerate(expect_array(obj["upgrade_rules"], f"{location}.upgrade_rules")):
        rloc = f"{location}.upgrade_rules[{i}]"
        robj = expect_object(robj, rloc)
        check_fields(
            robj, rloc, {"from_package", "from_version", "from_module", "to_module", "port_map", "param_map", "dropped_params"}
        )
        try:
            rules.append(
                UpgradeRule(
                    from_package=expect_str(robj["from_package"], f"{rloc}.from_package"),
                    from_version=expect_str(robj["from_version"], f"{rloc}.from_version"),
                    from_module=expect_str(robj["from_module"], f"{rloc}.from_module"),
                    to_version=package_version,
                    to_module=expect_str(robj["to_module"], f"{rloc}.to_module"),
                    port_map={
                        k: expect_str(v, f"{rloc}.port_map.{k}")
                        for k, v in expect_object(robj["port_map"], f"{rloc}.port_map").items()
                    },
                    param_map={
                        k: expect_str(v, f"{rloc}.param_map.{k}")
                        for k, v in expect_object(robj["param_map"], f"{rloc}.param_map").items()
                    },
                    dropped_params=frozenset(
                        expect_str(p, f"{rloc}.dropped_params[{j}]")
                        for j, p in enumerate(expect_array(robj["dropped_params"], f"{rloc}.dropped_params"))
                    ),
                )
            )
        except ValueError as exc:
            raise FormatError(rloc, str(exc)) from exc
    try:
        return Package(
            package_id=package_id,
            package_version=package_version,
            descriptors=descriptors,
            upgrade_rules=tuple(rules),
        )
    except ValueError as exc:
        raise FormatError(location, str(exc)) from exc


def load_package_manifest(path: str | Path) -> Package:
    return package_from_obj(load_json(Path(path)), str(path))
