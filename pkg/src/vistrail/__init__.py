"""Change-based provenance engine for scientific workflows.

Stores edit actions instead of workflows, materializes any version by
replay, executes DAGs with full logging into a content-addressed data
store, and upgrades workflows across package versions as new history.
"""

from .builtins import BASIC_PACKAGE, EngineConfig, register_builtins
from .datastore import DataRef, DataStore, EMPTY_CONTENT_HASH, content_hash
from .engine import (
    ExecutionLog,
    ExecutionStore,
    ModuleExecution,
    comparable_log_obj,
    execute,
    query_log,
    run_module,
)
from .errors import VistrailError
from .mashup import create_mashup, execute_mashup
from .model import (
    AddConnection,
    AddModule,
    Connection,
    DeleteConnection,
    DeleteModule,
    ModuleDescriptor,
    ModuleInstance,
    Parameter,
    Port,
    PortType,
    PrimitiveOp,
    SetParameter,
    ValidationReport,
    Value,
    ValueType,
    Workflow,
    apply_op,
    invert_op,
    topological_order,
    validate_workflow,
)
from .project import Project, ProjectLock
from .provenance import (
    Action,
    Mashup,
    MashupAlias,
    VersionDelta,
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
from .registry import (
    Package,
    PackageRegistry,
    UpgradePlan,
    UpgradeRule,
    apply_upgrade,
    compute_upgrade,
    load_package_manifest,
)

__version__ = "0.1.0"
