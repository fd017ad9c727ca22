/** DOM/SVG rendering. Pure view: reads controller state, emits elements,
 * routes events back through the handler callbacks. */

import type { StudioController } from "./controller.js";
import { layoutTree } from "./layout.js";
import type { ConnectionObj, ModuleObj } from "./types.js";
import { renderValue } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Handlers {
  onSelectVersion(version: number): void;
  onPickDiff(version: number): void;
  onAddModule(name: string): void;
  onDeleteModule(moduleId: number): void;
  onStartConnect(moduleId: number, port: string): void;
  onFinishConnect(moduleId: number, port: string): void;
  onEditParameter(moduleId: number, parameter: string, current: string): void;
  onRun(): void;
  onOpenMashup(mashupId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

// -- version tree ----------------------------------------------------------------

const TREE_X = 90;
const TREE_Y = 56;

export function renderTree(
  container: HTMLElement,
  controller: StudioController,
  handlers: Handlers,
  diffPick: number | null,
): void {
  container.replaceChildren();
  const layout = layoutTree(controller.tree.map((n) => ({ id: n.id, parent: n.parent })));
  const svg = svgEl("svg", {
    viewBox: `-40 -28 ${layout.width * TREE_X + 80} ${layout.height * TREE_Y + 56}`,
    class: "tree-svg",
  });

  for (const [parent, child] of layout.edges) {
    const a = layout.nodes.get(parent)!;
    const b = layout.nodes.get(child)!;
    svg.appendChild(
      svgEl("path", {
        d: `M ${a.x * TREE_X} ${a.y * TREE_Y} C ${a.x * TREE_X} ${(a.y + 0.6) * TREE_Y}, ${b.x * TREE_X} ${(b.y - 0.6) * TREE_Y}, ${b.x * TREE_X} ${b.y * TREE_Y}`,
        class: "tree-edge",
      }),
    );
  }

  for (const node of controller.tree) {
    const pos = layout.nodes.get(node.id);
    if (!pos) continue;
    const group = svgEl("g", {
      transform: `translate(${pos.x * TREE_X}, ${pos.y * TREE_Y})`,
      class: [
        "tree-node",
        node.id === controller.selected ? "selected" : "",
        node.id === diffPick ? "diff-pick" : "",
      ].join(" "),
    });
    group.appendChild(svgEl("circle", { r: "14" }));
    const label = svgEl("text", { "text-anchor": "middle", dy: "4" });
    label.textContent = String(node.id);
    group.appendChild(label);
    if (node.tags.length > 0) {
      const tags = svgEl("text", { "text-anchor": "middle", dy: "30", class: "tree-tags" });
      tags.textContent = node.tags.join(", ");
      group.appendChild(tags);
    }
    group.addEventListener("click", (event) => {
      if (event.shiftKey) handlers.onPickDiff(node.id);
      else handlers.onSelectVersion(node.id);
    });
    svg.appendChild(group);
  }
  container.appendChild(svg);
}

// -- workflow canvas ----------------------------------------------------------------

const BOX_W = 150;
const BOX_H = 48;

function canvasPositions(modules: ModuleObj[], connections: ConnectionObj[]): Map<number, { x: number; y: number }> {
  // rank by longest path, same discipline as execution order
  const preds = new Map<number, number[]>(modules.map((m) => [m.id, []]));
  for (const c of connections) {
    preds.get(c.target_module)?.push(c.source_module);
  }
  const rank = new Map<number, number>();
  const resolve = (id: number): number => {
    const cached = rank.get(id);
    if (cached !== undefined) return cached;
    rank.set(id, 0); // break accidental cycles
    const sources = preds.get(id) ?? [];
    const depth = sources.length === 0 ? 0 : 1 + Math.max(...sources.map(resolve));
    rank.set(id, depth);
    return depth;
  };
  const byRank = new Map<number, number[]>();
  for (const m of [...modules].sort((a, b) => a.id - b.id)) {
    const r = resolve(m.id);
    const row = byRank.get(r) ?? [];
    row.push(m.id);
    byRank.set(r, row);
  }
  const out = new Map<number, { x: number; y: number }>();
  for (const [r, row] of byRank) {
    row.forEach((id, i) => out.set(id, { x: 40 + i * (BOX_W + 60), y: 30 + r * (BOX_H + 70) }));
  }
  return out;
}

export function renderCanvas(
  container: HTMLElement,
  controller: StudioController,
  handlers: Handlers,
  pendingSource: { moduleId: number; port: string } | null,
): void {
  container.replaceChildren();
  const positions = canvasPositions(controller.modules, controller.connections);
  const cols = Math.max(1, ...[...positions.values()].map((p) => p.x + BOX_W + 60));
  const rows = Math.max(1, ...[...positions.values()].map((p) => p.y + BOX_H + 80));
  const svg = svgEl("svg", { viewBox: `0 0 ${cols} ${rows}`, class: "canvas-svg" });

  const panel = controller.runPanel;
  const statusFor = (moduleId: number) =>
    panel && panel.version === controller.selected
      ? panel.modules.find((m) => m.moduleId === moduleId)
      : undefined;

  for (const c of controller.connections) {
    const a = positions.get(c.source_module);
    const b = positions.get(c.target_module);
    if (!a || !b) continue;
    const x1 = a.x + BOX_W / 2;
    const y1 = a.y + BOX_H;
    const x2 = b.x + BOX_W / 2;
    const y2 = b.y;
    svg.appendChild(
      svgEl("path", {
        d: `M ${x1} ${y1} C ${x1} ${y1 + 35}, ${x2} ${y2 - 35}, ${x2} ${y2}`,
        class: "wire",
      }),
    );
  }

  for (const m of controller.modules) {
    const pos = positions.get(m.id)!;
    const entry = statusFor(m.id);
    const group = svgEl("g", {
      transform: `translate(${pos.x}, ${pos.y})`,
      class: [
        "module-box",
        entry?.highlight ? "failed" : "",
        entry?.dimmed ? "skipped" : "",
      ].join(" "),
    });
    group.appendChild(svgEl("rect", { width: String(BOX_W), height: String(BOX_H), rx: "6" }));
    const title = svgEl("text", { x: String(BOX_W / 2), y: "20", "text-anchor": "middle", class: "module-name" });
    title.textContent = `${m.name} #${m.id}`;
    group.appendChild(title);
    const sub = svgEl("text", { x: String(BOX_W / 2), y: "38", "text-anchor": "middle", class: "module-sub" });
    sub.textContent = `${m.package}/${m.package_version}`;
    group.appendChild(sub);

    const desc = controller.descriptor(m);
    const inputs = desc?.input_ports ?? [];
    const outputs = desc?.output_ports ?? [];
    inputs.forEach((port, i) => {
      const stub = svgEl("circle", {
        cx: String(20 + i * 22),
        cy: "0",
        r: "6",
        class: "port in-port",
      });
      stub.appendChild(titleEl(`${port.name}: ${port.type}`));
      stub.addEventListener("click", (event) => {
        event.stopPropagation();
        handlers.onFinishConnect(m.id, port.name);
      });
      group.appendChild(stub);
    });
    outputs.forEach((port, i) => {
      const stub = svgEl("circle", {
        cx: String(20 + i * 22),
        cy: String(BOX_H),
        r: "6",
        class: [
          "port out-port",
          pendingSource && pendingSource.moduleId === m.id && pendingSource.port === port.name ? "pending" : "",
        ].join(" "),
      });
      stub.appendChild(titleEl(`${port.name}: ${port.type}`));
      stub.addEventListener("click", (event) => {
        event.stopPropagation();
        handlers.onStartConnect(m.id, port.name);
      });
      group.appendChild(stub);
    });

    group.addEventListener("click", () => handlers.onEditParameter(m.id, "", ""));
    svg.appendChild(group);
  }
  container.appendChild(svg);
}

function titleEl(text: string): SVGElement {
  const node = svgEl("title");
  node.textContent = text;
  return node;
}

// -- side panels ---------------------------------------------------------------------

export function renderParameterPanel(
  container: HTMLElement,
  controller: StudioController,
  moduleId: number | null,
  handlers: Handlers,
): void {
  container.replaceChildren();
  const m = controller.modules.find((x) => x.id === moduleId);
  if (!m) {
    container.appendChild(el("p", { class: "hint" }, "Select a module to edit parameters."));
    return;
  }
  container.appendChild(el("h3", {}, `${m.name} #${m.id}`));
  const desc = controller.descriptor(m);
  for (const param of desc?.parameters ?? []) {
    const stored = m.parameters[param.name];
    const current = stored ? renderValue(stored) : renderValue(param.default);
    const row = el("div", { class: "param-row" });
    row.appendChild(el("label", {}, `${param.name} (${param.type})`));
    const input = el("input", { value: current });
    row.appendChild(input);
    const set = el("button", {}, "set");
    set.addEventListener("click", () => handlers.onEditParameter(m.id, param.name, input.value));
    row.appendChild(set);
    container.appendChild(row);
  }
  const remove = el("button", { class: "danger" }, "delete module (+ connections)");
  remove.addEventListener("click", () => handlers.onDeleteModule(m.id));
  container.appendChild(remove);
}

export function renderRunPanel(container: HTMLElement, controller: StudioController): void {
  container.replaceChildren();
  const panel = controller.runPanel;
  if (!panel) {
    container.appendChild(el("p", { class: "hint" }, "No run yet."));
    return;
  }
  container.appendChild(
    el("h3", {}, `run ${panel.execId.slice(0, 8)}: ${panel.status}${panel.note ? ` (${panel.note})` : ""}`),
  );
  if (panel.modules.length === 0) {
    container.appendChild(el("p", { class: "badge-success" }, "empty workflow: success"));
  }
  for (const entry of panel.modules) {
    const css = entry.status === "failed" ? "run-failed" : entry.status === "skipped" ? "run-skipped" : "run-ok";
    const block = el("div", { class: `run-entry ${css}` });
    block.appendChild(el("strong", {}, `${entry.name} #${entry.moduleId}: ${entry.status}`));
    for (const line of entry.outputLines) {
      const row = el("div", { class: "output-line" }, line);
      const hash = /\b[0-9a-f]{64}\b/.exec(line);
      if (hash) {
        row.appendChild(el("span", {}, " "));
        const link = el("a", { href: `/api/data/${hash[0]}`, download: "" }, "download");
        row.appendChild(link);
      }
      block.appendChild(row);
    }
    if (entry.error) {
      block.appendChild(el("div", { class: "error-line" }, entry.error));
    }
    container.appendChild(block);
  }
}

export function renderDiffPanel(container: HTMLElement, controller: StudioController): void {
  container.replaceChildren();
  const view = controller.diffView;
  if (!view) return;
  container.appendChild(el("h3", {}, `diff ${view.from} → ${view.to}`));
  for (const id of view.delta.added_modules) {
    container.appendChild(el("div", { class: "diff-added" }, `+ module ${id}`));
  }
  for (const id of view.delta.deleted_modules) {
    container.appendChild(el("div", { class: "diff-deleted" }, `- module ${id}`));
  }
  for (const change of view.delta.parameter_changes) {
    const from = change.from ? renderValue(change.from) : "(unset)";
    const to = change.to ? renderValue(change.to) : "(unset)";
    container.appendChild(
      el("div", { class: "diff-param" }, `~ module ${change.module_id} ${change.parameter}: ${from} → ${to}`),
    );
  }
  if (
    view.delta.added_modules.length +
      view.delta.deleted_modules.length +
      view.delta.parameter_changes.length ===
    0
  ) {
    container.appendChild(el("div", { class: "hint" }, "no differences"));
  }
}

export function renderMashupPanel(container: HTMLElement, controller: StudioController, handlers: Handlers): void {
  container.replaceChildren();
  container.appendChild(el("h3", {}, "mashups"));
  for (const mashup of controller.mashups) {
    const row = el("div", { class: "mashup-row" });
    row.appendChild(el("span", {}, `${mashup.title} (v${mashup.version})`));
    const open = el("button", {}, "open");
    open.addEventListener("click", () => handlers.onOpenMashup(mashup.id));
    row.appendChild(open);
    container.appendChild(row);
  }
  const form = controller.mashupForm;
  if (!form) return;
  const box = el("div", { class: "mashup-form" });
  box.appendChild(el("h4", {}, form.title));
  for (const field of form.fields) {
    const row = el("div", { class: "param-row" });
    row.appendChild(el("label", {}, `${field.alias} (${field.kind})`));
    if (field.choices) {
      const select = el("select");
      for (const choice of field.choices) {
        const option = el("option", { value: renderValue(choice) }, renderValue(choice));
        if (renderValue(choice) === field.value) option.setAttribute("selected", "selected");
        select.appendChild(option);
      }
      select.addEventListener("change", () => (field.value = select.value));
      row.appendChild(select);
    } else {
      const input = el("input", { value: field.value });
      input.addEventListener("input", () => (field.value = input.value));
      row.appendChild(input);
    }
    box.appendChild(row);
  }
  container.appendChild(box);
}

export function renderError(container: HTMLElement, controller: StudioController): void {
  container.textContent = controller.inlineError ?? "";
  container.classList.toggle("visible", controller.inlineError !== null);
}
