/** Pure view-model construction: API payloads in, render models out.
 *
 * 2-D tensors become grids, 3-D tensors become one grid per leading
 * index (day tabs), 1-D tensors become tables; anything else falls back
 * to a flat binding table. Every binding appears exactly once; unbound
 * cells carry `bound: false` so the renderer can dim them.
 */

import type {
  Binding,
  ConstraintDict,
  QueryPayload,
  StatsPayload,
  TensorInfo,
} from "./types.js";

export interface Cell {
  index: number[];
  value: number | null;
  bound: boolean;
}

export interface GridView {
  kind: "grid";
  tensor: string;
  rows: Cell[][];
}

export interface TabbedView {
  kind: "tabs";
  tensor: string;
  tabs: { label: string; rows: Cell[][] }[];
}

export interface TableView {
  kind: "table";
  tensor: string;
  cells: Cell[];
}

export interface FlatView {
  kind: "flat";
  tensor: string;
  bindings: Binding[];
}

export type TensorView = GridView | TabbedView | TableView | FlatView;

export interface QueryView {
  queryId: number;
  layer: string;
  layerLabel: string;
  empty: boolean;
  tensors: TensorView[];
  stats: StatsView;
}

export interface StatsView {
  biasSize: number;
  learnedSize: number;
  queriesTotal: number;
  queriesByLayer: { layer: string; count: number }[];
}

export class RenderError extends Error {}

const LAYER_LABELS: Record<string, string> = {
  top: "top-level",
  findscope: "scope-finding",
  findc: "constraint-finding",
};

export function layerLabel(layer: string): string {
  return LAYER_LABELS[layer] ?? layer;
}

function bindingMap(bindings: Binding[], tensor: string): Map<string, number> {
  const out = new Map<string, number>();
  for (const b of bindings) {
    if (b.tensor !== tensor) continue;
    const key = b.index.join(",");
    if (out.has(key)) {
      throw new RenderError(`duplicate binding for ${tensor}[${key}]`);
    }
    out.set(key, b.value);
  }
  return out;
}

function cellAt(index: number[], bound: Map<string, number>): Cell {
  const v = bound.get(index.join(","));
  return { index, value: v ?? null, bound: v !== undefined };
}

function grid2d(
  tensor: string,
  shape: [number, number],
  bound: Map<string, number>,
  prefix: number[] = [],
): Cell[][] {
  const rows: Cell[][] = [];
  for (let r = 0; r < shape[0]; r++) {
    const row: Cell[] = [];
    for (let c = 0; c < shape[1]; c++) {
      row.push(cellAt([...prefix, r, c], bound));
    }
    rows.push(row);
  }
  return rows;
}

export function buildTensorView(info: TensorInfo, bindings: Binding[]): TensorView {
  const bound = bindingMap(bindings, info.name);
  if (info.shape.length === 2) {
    return {
      kind: "grid",
      tensor: info.name,
      rows: grid2d(info.name, [info.shape[0], info.shape[1]], bound),
    };
  }
  if (info.shape.length === 3) {
    const tabs = [];
    for (let d = 0; d < info.shape[0]; d++) {
      tabs.push({
        label: `day ${d + 1}`,
        rows: grid2d(info.name, [info.shape[1], info.shape[2]], bound, [d]),
      });
    }
    return { kind: "tabs", tensor: info.name, tabs };
  }
  if (info.shape.length === 1) {
    const cells: Cell[] = [];
    for (let i = 0; i < info.shape[0]; i++) {
      cells.push(cellAt([i], bound));
    }
    return { kind: "table", tensor: info.name, cells };
  }
  return {
    kind: "flat",
    tensor: info.name,
    bindings: bindings.filter((b) => b.tensor === info.name),
  };
}

export function buildStatsView(stats: StatsPayload): StatsView {
  for (const field of ["bias_size", "learned_size", "queries_total"] as const) {
    if (typeof stats?.[field] !== "number") {
      throw new RenderError(`stats payload is missing '${field}'`);
    }
  }
  return {
    biasSize: stats.bias_size,
    learnedSize: stats.learned_size,
    queriesTotal: stats.queries_total,
    queriesByLayer: Object.entries(stats.queries_by_layer ?? {}).map(
      ([layer, count]) => ({ layer: layerLabel(layer), count }),
    ),
  };
}

export function buildQueryView(
  payload: QueryPayload,
  tensors: TensorInfo[],
): QueryView {
  if (typeof payload?.query_id !== "number" || !Array.isArray(payload.bindings)) {
    throw new RenderError("malformed query payload");
  }
  const known = new Set(tensors.map((t) => t.name));
  for (const b of payload.bindings) {
    if (!known.has(b.tensor)) {
      throw new RenderError(`binding references unknown tensor '${b.tensor}'`);
    }
  }
  return {
    queryId: payload.query_id,
    layer: payload.layer,
    layerLabel: layerLabel(payload.layer),
    empty: payload.bindings.length === 0,
    tensors: tensors.map((t) => buildTensorView(t, payload.bindings)),
    stats: buildStatsView(payload.stats),
  };
}

const INFIX: Record<string, string> = {
  GEQ: "≥",
  LEQ: "≤",
  LT: "<",
  GT: ">",
  NEQ: "≠",
  EQ: "=",
};

/** Human-readable infix text for a structured constraint. */
export function renderConstraint(c: ConstraintDict): string {
  const [a, b] = c.scope;
  if (c.relation === "FLOORDIV_NEQ") {
    return `⌊${a}/${c.param}⌋ ≠ ⌊${b}/${c.param}⌋`;
  }
  const op = INFIX[c.relation];
  if (op === undefined || c.scope.length !== 2) {
    throw new RenderError(`cannot render constraint ${JSON.stringify(c)}`);
  }
  return `${a} ${op} ${b}`;
}
