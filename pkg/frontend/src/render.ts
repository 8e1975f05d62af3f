/** DOM rendering of view models (no framework). */

import type { LearnedRow } from "./types.js";
import {
  Cell,
  QueryView,
  StatsView,
  TensorView,
  renderConstraint,
} from "./model.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function cellNode(cell: Cell): HTMLElement {
  const node = el("td", cell.bound ? "cell bound" : "cell unbound");
  node.textContent = cell.bound ? String(cell.value) : "";
  node.dataset.index = cell.index.join(",");
  return node;
}

function gridNode(rows: Cell[][]): HTMLElement {
  const table = el("table", "grid");
  for (const row of rows) {
    const tr = el("tr");
    for (const cell of row) tr.appendChild(cellNode(cell));
    table.appendChild(tr);
  }
  return table;
}

export function renderTensor(view: TensorView): HTMLElement {
  const box = el("div", `tensor tensor-${view.kind}`);
  box.appendChild(el("h3", "tensor-name", view.tensor));
  if (view.kind === "grid") {
    box.appendChild(gridNode(view.rows));
  } else if (view.kind === "tabs") {
    const bar = el("div", "tabs-bar");
    const panes: HTMLElement[] = [];
    view.tabs.forEach((tab, i) => {
      const btn = el("button", "tab-btn", tab.label);
      btn.addEventListener("click", () => {
        panes.forEach((p, j) => p.classList.toggle("hidden", j !== i));
      });
      bar.appendChild(btn);
      const pane = el("div", i === 0 ? "tab-pane" : "tab-pane hidden");
      pane.appendChild(gridNode(tab.rows));
      panes.push(pane);
    });
    box.appendChild(bar);
    panes.forEach((p) => box.appendChild(p));
  } else if (view.kind === "table") {
    const table = el("table", "grid");
    const tr = el("tr");
    for (const cell of view.cells) tr.appendChild(cellNode(cell));
    table.appendChild(tr);
    box.appendChild(table);
  } else {
    const list = el("ul", "flat-bindings");
    for (const b of view.bindings) {
      list.appendChild(
        el("li", undefined, `${b.tensor}[${b.index.join(",")}] = ${b.value}`),
      );
    }
    box.appendChild(list);
  }
  return box;
}

export function renderStats(stats: StatsView): HTMLElement {
  const panel = el("div", "stats-panel");
  panel.appendChild(el("span", "stat", `candidates left: ${stats.biasSize}`));
  panel.appendChild(el("span", "stat", `learned: ${stats.learnedSize}`));
  panel.appendChild(el("span", "stat", `queries: ${stats.queriesTotal}`));
  for (const { layer, count } of stats.queriesByLayer) {
    panel.appendChild(el("span", "stat stat-layer", `${layer}: ${count}`));
  }
  return panel;
}

export function renderQuery(
  view: QueryView,
  onAnswer: (yes: boolean) => void,
): HTMLElement {
  const root = el("div", "query-view");
  root.appendChild(el("span", "layer-badge", view.layerLabel));
  if (view.empty) {
    root.appendChild(
      el("p", "notice", "This query binds no variables — everything is dimmed."),
    );
  }
  for (const t of view.tensors) root.appendChild(renderTensor(t));
  const controls = el("div", "controls");
  const q = el(
    "p",
    "question",
    "Is this partial assignment acceptable in your problem?",
  );
  controls.appendChild(q);
  for (const [label, yes] of [["Yes", true], ["No", false]] as const) {
    const btn = el("button", `answer answer-${label.toLowerCase()}`, label);
    btn.addEventListener("click", () => onAnswer(yes));
    controls.appendChild(btn);
  }
  root.appendChild(controls);
  root.appendChild(renderStats(view.stats));
  return root;
}

export function renderLearned(rows: LearnedRow[]): HTMLElement {
  const box = el("div", "learned-view");
  box.appendChild(el("h2", undefined, `Learned constraints (${rows.length})`));
  const list = el("ul", "learned-list");
  for (const row of rows) {
    const item = el("li", "learned-item", renderConstraint(row.constraint));
    if (row.probability !== undefined) {
      item.appendChild(
        el("span", "probability", ` (p=${row.probability.toFixed(2)})`),
      );
    }
    list.appendChild(item);
  }
  box.appendChild(list);
  return box;
}

export function renderBanner(kind: string, message: string): HTMLElement {
  return el("div", `banner banner-${kind}`, message);
}
