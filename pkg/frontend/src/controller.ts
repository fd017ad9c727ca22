/** Studio state machine, DOM-free so it can be driven headless.
 *
 * Holds no authoritative data: the tree mirrors GET /api/tree, the canvas
 * mirrors GET /api/workflow for the selected version, and every committed
 * gesture is exactly one POST /api/actions. Gestures are optimistic only in
 * the sense that the client pre-validates; on server rejection the canvas
 * rolls back to server truth and the error surfaces inline.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  ConnectionObj,
  DescriptorObj,
  ExecutionLogObj,
  MashupObj,
  ModuleObj,
  OpObj,
  PackageObj,
  TreeNode,
  ValueObj,
  DeltaObj,
} from "./types.js";
import { portsCompatible, renderValue } from "./types.js";

export interface RunPanelModule {
  moduleId: number;
  name: string;
  status: "success" | "failed" | "skipped";
  /** "port = value" lines, engine-rendered style */
  outputLines: string[];
  error: string | null;
  highlight: boolean; // failed module: highlighted on the canvas
  dimmed: boolean; // skipped module: dimmed
}

export interface RunPanelState {
  execId: string;
  version: number;
  status: string;
  note: string;
  modules: RunPanelModule[];
}

export interface MashupFormField {
  alias: string;
  value: string; // text-field model; typed on submit
  kind: ValueObj["type"];
  choices: ValueObj[] | null;
}

export interface MashupFormState {
  mashupId: string;
  title: string;
  fields: MashupFormField[];
}

export interface DiffViewState {
  from: number;
  to: number;
  delta: DeltaObj;
}

export type Gesture =
  | { kind: "add-module"; packageId: string; packageVersion: string; name: string; parameters: Record<string, ValueObj> }
  | { kind: "delete-module"; moduleId: number }
  | { kind: "connect"; sourceModule: number; sourcePort: string; targetModule: number; targetPort: string }
  | { kind: "set-parameter"; moduleId: number; parameter: string; value: ValueObj };

export class StudioController {
  tree: TreeNode[] = [];
  selected = 0;
  modules: ModuleObj[] = [];
  connections: ConnectionObj[] = [];
  packages: PackageObj[] = [];
  mashups: MashupObj[] = [];
  runPanel: RunPanelState | null = null;
  mashupForm: MashupFormState | null = null;
  diffView: DiffViewState | null = null;
  inlineError: string | null = null;

  constructor(readonly api: ApiClient) {}

  async bootstrap(): Promise<void> {
    const packages = await this.api.packages();
    this.packages = packages.packages;
    await this.refreshTree();
    await this.select(this.selected);
  }

  async refreshTree(): Promise<void> {
    const response = await this.api.tree();
    this.tree = response.versions;
    if (!this.tree.some((n) => n.id === this.selected)) {
      this.selected = 0;
    }
  }

  async refreshMashups(): Promise<void> {
    this.mashups = (await this.api.mashups()).mashups;
  }

  async select(version: number): Promise<void> {
    const response = await this.api.workflow(version);
    this.selected = version;
    this.modules = response.workflow.modules;
    this.connections = response.workflow.connections;
  }

  descriptor(module: ModuleObj): DescriptorObj | undefined {
    return this.packages
      .find((p) => p.package_id === module.package && p.package_version === module.package_version)
      ?.descriptors.find((d) => d.name === module.name);
  }

  private moduleById(id: number): ModuleObj | undefined {
    return this.modules.find((m) => m.id === id);
  }

  /** Commit one gesture: exactly one POST /api/actions, then re-sync tree
   * and selection to the new version. Returns it, or null when the gesture
   * failed (inlineError is set and the canvas re-synced to server truth). */
  async commitGesture(gesture: Gesture): Promise<number | null> {
    this.inlineError = null;
    let ops: OpObj[];
    try {
      ops = this.opsFor(gesture);
    } catch (err) {
      this.inlineError = err instanceof Error ? err.message : String(err);
      return null; // client pre-validation failed: no POST, no version
    }
    try {
      const { version } = await this.api.postAction(this.selected, ops);
      await this.refreshTree();
      await this.select(version);
      return version;
    } catch (err) {
      if (err instanceof ApiError) {
        this.inlineError = `${err.code}: ${err.detail}`;
        await this.refreshTree();
        await this.select(this.selected); // roll back to server truth
        return null;
      }
      throw err;
    }
  }

  private opsFor(gesture: Gesture): OpObj[] {
    switch (gesture.kind) {
      case "add-module":
        return [
          {
            kind: "add_module",
            module: {
              id: 0, // server allocates
              package: gesture.packageId,
              package_version: gesture.packageVersion,
              name: gesture.name,
              parameters: gesture.parameters,
            },
          },
        ];
      case "delete-module": {
        // cascade: one action deletes the incident connections, then the module
        const incident = this.connections.filter(
          (c) => c.source_module === gesture.moduleId || c.target_module === gesture.moduleId,
        );
        const ops: OpObj[] = incident
          .sort((a, b) => a.id - b.id)
          .map((c) => ({ kind: "delete_connection", connection_id: c.id }));
        ops.push({ kind: "delete_module", module_id: gesture.moduleId });
        return ops;
      }
      case "connect": {
        const source = this.moduleById(gesture.sourceModule);
        const target = this.moduleById(gesture.targetModule);
        const sourcePort = source && this.descriptor(source)?.output_ports.find((p) => p.name === gesture.sourcePort);
        const targetPort = target && this.descriptor(target)?.input_ports.find((p) => p.name === gesture.targetPort);
        if (sourcePort && targetPort && !portsCompatible(sourcePort.type, targetPort.type)) {
          throw new Error(`TYPE_MISMATCH: ${sourcePort.type} -> ${targetPort.type}`);
        }
        return [
          {
            kind: "add_connection",
            connection: {
              id: 0,
              source_module: gesture.sourceModule,
              source_port: gesture.sourcePort,
              target_module: gesture.targetModule,
              target_port: gesture.targetPort,
            },
          },
        ];
      }
      case "set-parameter":
        return [
          {
            kind: "set_parameter",
            module_id: gesture.moduleId,
            parameter: gesture.parameter,
            value: gesture.value,
          },
        ];
    }
  }

  // -- runs -------------------------------------------------------------------

  async runAndInspect(version?: number, overrides?: { module_id: number; parameter: string; value: ValueObj }[]): Promise<RunPanelState> {
    const target = version ?? this.selected;
    const { exec_id } = await this.api.startExecution(target, overrides);
    const log = await this.api.execution(exec_id);
    this.runPanel = panelFromLog(log);
    return this.runPanel;
  }

  // -- mashups ----------------------------------------------------------------

  async openMashupForm(mashupId: string): Promise<MashupFormState> {
    await this.refreshMashups();
    const mashup = this.mashups.find((m) => m.id === mashupId);
    if (!mashup) {
      throw new Error(`UNKNOWN_MASHUP: ${mashupId}`);
    }
    this.mashupForm = {
      mashupId,
      title: mashup.title,
      fields: mashup.aliases.map((a) => ({
        alias: a.alias,
        value: renderValue(a.default),
        kind: a.default.type,
        choices: a.choices ?? null,
      })),
    };
    return this.mashupForm;
  }

  /** Client blocks submit when a required typed field does not parse;
   * otherwise posts the bindings and shows the run. */
  async submitMashupForm(): Promise<RunPanelState> {
    const form = this.mashupForm;
    if (!form) {
      throw new Error("no mashup form open");
    }
    const bindings: Record<string, ValueObj> = {};
    for (const field of form.fields) {
      const parsed = parseTypedField(field.kind, field.value);
      if (parsed === null) {
        this.inlineError = `BAD_VALUE: ${field.alias} must be a ${field.kind}`;
        throw new Error(this.inlineError);
      }
      bindings[field.alias] = parsed;
    }
    const log = await this.api.runMashup(form.mashupId, bindings);
    this.runPanel = panelFromLog(log);
    return this.runPanel;
  }

  // -- diff ---------------------------------------------------------------------

  async loadDiff(from: number, to: number): Promise<DiffViewState> {
    const response = await this.api.diff(from, to);
    this.diffView = { from, to, delta: response.delta };
    return this.diffView;
  }
}

export function panelFromLog(log: ExecutionLogObj): RunPanelState {
  return {
    execId: log.exec_id,
    version: log.version,
    status: log.status,
    note: log.note,
    modules: log.module_executions.map((e) => ({
      moduleId: e.module_id,
      name: e.name,
      status: e.status,
      outputLines: Object.entries(e.outputs)
        .sort(([a], [b]) => a.localeCompare(b))
        .map(([port, value]) => `${port} = ${renderValue(value)}`),
      error: e.error,
      highlight: e.status === "failed",
      dimmed: e.status === "skipped",
    })),
  };
}

export function parseTypedField(kind: ValueObj["type"], text: string): ValueObj | null {
  const trimmed = text.trim();
  switch (kind) {
    case "integer": {
      if (!/^[+-]?\d+$/.test(trimmed)) return null;
      return { type: "integer", value: Number.parseInt(trimmed, 10) };
    }
    case "float": {
      const parsed = Number.parseFloat(trimmed);
      if (Number.isNaN(parsed)) return null;
      return { type: "float", value: parsed };
    }
    case "boolean": {
      if (trimmed !== "true" && trimmed !== "false") return null;
      return { type: "boolean", value: trimmed === "true" };
    }
    case "dataref": {
      if (!/^[0-9a-f]{64}$/.test(trimmed)) return null;
      return { type: "dataref", value: trimmed };
    }
    case "string":
      return { type: "string", value: text };
  }
}
