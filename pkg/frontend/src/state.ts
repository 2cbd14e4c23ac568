/**
 * View state and its pure transitions.
 *
 * Everything the explorer draws is a function of (last server response,
 * ViewState); no transition here touches the network or the DOM. Functions
 * return fresh state objects so snapshots can be compared and replayed.
 */

import type { ColumnStrategy, GraphResponse, RowStrategy, SignFilter } from "./types.js";

export interface Filters {
  minStrength: number;
  maxDegree: number | null;
  sign: SignFilter;
}

/** Focus window over column indices. `null` means every column is expanded. */
export interface FocusWindow {
  start: number;
  length: number;
}

export interface PropagationQuery {
  source: string;
  target: string;
}

export interface ViewState {
  rows: RowStrategy;
  columns: ColumnStrategy;
  /** Entity name steering the topology column strategy; ignored otherwise. */
  focusEntity: string | null;
  filters: Filters;
  focus: FocusWindow | null;
  brushed: string[];
  propagation: PropagationQuery | null;
}

export function initialView(): ViewState {
  return {
    rows: "base",
    columns: "direction",
    focusEntity: null,
    filters: { minStrength: 0.0, maxDegree: null, sign: "any" },
    focus: null,
    brushed: [],
    propagation: null,
  };
}

/** Window must select at least one column; zero-length focus is meaningless. */
export function setFocus(view: ViewState, focus: FocusWindow | null, columnCount: number): ViewState {
  if (focus === null) {
    return { ...view, focus: null };
  }
  if (!Number.isInteger(focus.start) || !Number.isInteger(focus.length)) {
    throw new RangeError("focus window indices must be integers");
  }
  if (focus.length < 1) {
    throw new RangeError("focus window length must be at least 1");
  }
  if (focus.start < 0) {
    throw new RangeError("focus window start must be non-negative");
  }
  return { ...view, focus: clampFocus(focus, columnCount) };
}

/** Fit a window inside [0, columnCount); collapses to null when nothing to show. */
export function clampFocus(focus: FocusWindow | null, columnCount: number): FocusWindow | null {
  if (focus === null || columnCount <= 0) {
    return null;
  }
  const start = Math.min(Math.max(0, focus.start), columnCount - 1);
  const length = Math.min(Math.max(1, focus.length), columnCount - start);
  return { start, length };
}

/** Drag the window body: shifts the expanded set by `delta`, clamped at the ends. */
export function dragBody(view: ViewState, delta: number, columnCount: number): ViewState {
  const current = effectiveFocus(view.focus, columnCount);
  if (current === null) {
    return view;
  }
  const start = Math.min(Math.max(0, current.start + delta), Math.max(0, columnCount - current.length));
  return { ...view, focus: { start, length: current.length } };
}

/** Drag the trailing edge: grows or shrinks the window, never below one column. */
export function dragEdge(view: ViewState, delta: number, columnCount: number): ViewState {
  const current = effectiveFocus(view.focus, columnCount);
  if (current === null) {
    return view;
  }
  const length = Math.min(Math.max(1, current.length + delta), columnCount - current.start);
  return { ...view, focus: { start: current.start, length } };
}

function effectiveFocus(focus: FocusWindow | null, columnCount: number): FocusWindow | null {
  if (columnCount <= 0) {
    return null;
  }
  if (focus === null) {
    return { start: 0, length: columnCount };
  }
  return clampFocus(focus, columnCount);
}

/** Column indices rendered expanded under the current window. */
export function expandedIndices(focus: FocusWindow | null, columnCount: number): number[] {
  const window = effectiveFocus(focus, columnCount);
  if (window === null) {
    return [];
  }
  const out: number[] = [];
  for (let i = window.start; i < window.start + window.length && i < columnCount; i++) {
    out.push(i);
  }
  return out;
}

/** Brushed ids must name groups present in the current response. */
export function brushGroups(view: ViewState, ids: string[], graph: GraphResponse): ViewState {
  const known = new Set(graph.groups.map((g) => g.id));
  const seen = new Set<string>();
  const brushed: string[] = [];
  for (const id of ids) {
    if (!known.has(id)) {
      throw new Error(`unknown group id ${JSON.stringify(id)}`);
    }
    if (!seen.has(id)) {
      seen.add(id);
      brushed.push(id);
    }
  }
  return { ...view, brushed };
}

export function clearBrush(view: ViewState): ViewState {
  return { ...view, brushed: [] };
}

export function readBrush(view: ViewState): string[] {
  return [...view.brushed];
}

/**
 * Re-anchor the view after a fresh response: the focus window is clamped to
 * the new column count and brushed ids that no longer exist are dropped.
 */
export function reconcile(view: ViewState, graph: GraphResponse): ViewState {
  const known = new Set(graph.groups.map((g) => g.id));
  return {
    ...view,
    focus: clampFocus(view.focus, graph.groups.length),
    brushed: view.brushed.filter((id) => known.has(id)),
  };
}
