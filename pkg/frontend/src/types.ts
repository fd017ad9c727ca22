/** Wire types mirroring the service's canonical JSON. */

export type ValueKind = "integer" | "float" | "string" | "boolean" | "dataref";

export interface ValueObj {
  type: ValueKind;
  value: number | string | boolean;
}

export interface TreeNode {
  id: number;
  parent: number | null;
  tags: string[];
  note?: string;
  user?: string;
  timestamp?: string;
}

export interface TreeResponse {
  versions: TreeNode[];
}

export interface ModuleObj {
  id: number;
  package: string;
  package_version: string;
  name: string;
  parameters: Record<string, ValueObj>;
}

export interface ConnectionObj {
  id: number;
  source_module: number;
  source_port: string;
  target_module: number;
  target_port: string;
}

export interface WorkflowObj {
  modules: ModuleObj[];
  connections: ConnectionObj[];
}

export interface WorkflowResponse {
  version: number;
  workflow: WorkflowObj;
}

export interface PortObj {
  name: string;
  type: string;
}

export interface DescriptorObj {
  name: string;
  input_ports: PortObj[];
  output_ports: PortObj[];
  parameters: { name: string; type: string; default: ValueObj }[];
}

export interface PackageObj {
  package_id: string;
  package_version: string;
  descriptors: DescriptorObj[];
  upgrade_rules: unknown[];
}

export type OpObj =
  | { kind: "add_module"; module: ModuleObj }
  | { kind: "delete_module"; module_id: number }
  | { kind: "add_connection"; connection: ConnectionObj }
  | { kind: "delete_connection"; connection_id: number }
  | { kind: "set_parameter"; module_id: number; parameter: string; value: ValueObj };

export interface ModuleExecutionObj {
  module_id: number;
  package: string;
  package_version: string;
  name: string;
  started_at: string;
  finished_at: string;
  status: "success" | "failed" | "skipped";
  resolved_params: Record<string, ValueObj>;
  inputs: Record<string, ValueObj>;
  outputs: Record<string, ValueObj>;
  error: string | null;
  command?: string;
  exit_code?: number;
}

export interface ExecutionLogObj {
  exec_id: string;
  vistrail_id: string;
  version: number;
  started_at: string;
  finished_at: string;
  status: "success" | "failed" | "partial";
  note: string;
  module_executions: ModuleExecutionObj[];
}

export interface ParameterChangeObj {
  module_id: number;
  parameter: string;
  from: ValueObj | null;
  to: ValueObj | null;
}

export interface DeltaObj {
  added_modules: number[];
  deleted_modules: number[];
  shared_modules: number[];
  added_connections: number[];
  deleted_connections: number[];
  parameter_changes: ParameterChangeObj[];
}

export interface DiffResponse {
  from: number;
  to: number;
  delta: DeltaObj;
}

export interface MashupAliasObj {
  alias: string;
  module_id: number;
  parameter: string;
  default: ValueObj;
  choices?: ValueObj[];
}

export interface MashupObj {
  id: string;
  version: number;
  title: string;
  aliases: MashupAliasObj[];
}

/** Render a tagged value the way the engine prints it ("5.0", not "5"). */
export function renderValue(v: ValueObj): string {
  if (v.type === "float" && typeof v.value === "number") {
    return Number.isInteger(v.value) ? v.value.toFixed(1) : String(v.value);
  }
  if (v.type === "boolean") {
    return v.value ? "true" : "false";
  }
  return String(v.value);
}

/** Nominal port compatibility: `any` matches everything, otherwise equality. */
export function portsCompatible(source: string, target: string): boolean {
  return source === "any" || target === "any" || source === target;
}
