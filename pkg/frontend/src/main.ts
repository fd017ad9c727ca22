/** Studio bootstrap: wires the controller to the DOM and polls the tree. */

import { ApiClient } from "./api.js";
import { StudioController, parseTypedField } from "./controller.js";
import {
  Handlers,
  renderCanvas,
  renderDiffPanel,
  renderError,
  renderMashupPanel,
  renderParameterPanel,
  renderRunPanel,
  renderTree,
} from "./render.js";

const POLL_MS = 2000;

const controller = new StudioController(new ApiClient());

let selectedModule: number | null = null;
let pendingSource: { moduleId: number; port: string } | null = null;
let diffPick: number | null = null;

const $ = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
};

function redraw(): void {
  renderTree($("tree"), controller, handlers, diffPick);
  renderCanvas($("canvas"), controller, handlers, pendingSource);
  renderParameterPanel($("params"), controller, selectedModule, handlers);
  renderRunPanel($("run-panel"), controller);
  renderDiffPanel($("diff-panel"), controller);
  renderMashupPanel($("mashups"), controller, handlers);
  renderError($("error-bar"), controller);
  $("selected-version").textContent = `version ${controller.selected}`;
}

const handlers: Handlers = {
  onSelectVersion(version) {
    void controller.select(version).then(() => {
      selectedModule = null;
      pendingSource = null;
      redraw();
    });
  },
  onPickDiff(version) {
    if (diffPick === null) {
      diffPick = version;
      redraw();
    } else {
      const from = diffPick;
      diffPick = null;
      void controller.loadDiff(from, version).then(redraw);
    }
  },
  onAddModule(name) {
    const pkg = controller.packages.find((p) =>
      p.descriptors.some((d) => d.name === name),
    );
    if (!pkg) return;
    void controller
      .commitGesture({
        kind: "add-module",
        packageId: pkg.package_id,
        packageVersion: pkg.package_version,
        name,
        parameters: {},
      })
      .then(redraw);
  },
  onDeleteModule(moduleId) {
    selectedModule = null;
    void controller.commitGesture({ kind: "delete-module", moduleId }).then(redraw);
  },
  onStartConnect(moduleId, port) {
    pendingSource = { moduleId, port };
    redraw();
  },
  onFinishConnect(moduleId, port) {
    if (!pendingSource) return;
    const source = pendingSource;
    pendingSource = null;
    void controller
      .commitGesture({
        kind: "connect",
        sourceModule: source.moduleId,
        sourcePort: source.port,
        targetModule: moduleId,
        targetPort: port,
      })
      .then(redraw);
  },
  onEditParameter(moduleId, parameter, raw) {
    if (!parameter) {
      selectedModule = moduleId;
      redraw();
      return;
    }
    const module = controller.modules.find((m) => m.id === moduleId);
    const declared = module && controller.descriptor(module)?.parameters.find((p) => p.name === parameter);
    const kind =
      declared && declared.type !== "any"
        ? (declared.type as "integer" | "float" | "string" | "boolean" | "dataref")
        : inferKind(raw);
    const value = parseTypedField(kind, raw);
    if (value === null) {
      controller.inlineError = `BAD_VALUE: ${parameter} must be a ${kind}`;
      redraw();
      return;
    }
    void controller
      .commitGesture({ kind: "set-parameter", moduleId, parameter, value })
      .then(redraw);
  },
  onRun() {
    void controller
      .runAndInspect()
      .then(redraw)
      .catch((err) => {
        controller.inlineError = err instanceof Error ? err.message : String(err);
        redraw();
      });
  },
  onOpenMashup(mashupId) {
    void controller.openMashupForm(mashupId).then(redraw);
  },
};

function inferKind(raw: string): "integer" | "float" | "boolean" | "string" {
  const text = raw.trim();
  if (text === "true" || text === "false") return "boolean";
  if (/^[+-]?\d+$/.test(text)) return "integer";
  if (/^[+-]?\d*\.\d+$/.test(text)) return "float";
  return "string";
}

function buildPalette(): void {
  const palette = $("palette") as HTMLSelectElement;
  palette.replaceChildren();
  palette.appendChild(new Option("add module…", ""));
  const seen = new Set<string>();
  for (const pkg of controller.packages) {
    for (const desc of pkg.descriptors) {
      const key = `${desc.name}`;
      if (seen.has(key)) continue;
      seen.add(key);
      palette.appendChild(new Option(`${desc.name} (${pkg.package_id} ${pkg.package_version})`, desc.name));
    }
  }
  palette.addEventListener("change", () => {
    if (palette.value) handlers.onAddModule(palette.value);
    palette.value = "";
  });
}

async function boot(): Promise<void> {
  await controller.bootstrap();
  await controller.refreshMashups();
  buildPalette();
  $("run-button").addEventListener("click", () => handlers.onRun());
  $("mashup-run").addEventListener("click", () => {
    void controller
      .submitMashupForm()
      .then(redraw)
      .catch(() => redraw()); // BAD_VALUE already surfaced inline
  });
  redraw();
  setInterval(() => {
    void controller.refreshTree().then(redraw);
  }, POLL_MS);
}

void boot();
