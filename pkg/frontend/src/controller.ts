/**
 * Explorer controller: owns the ViewState and the latest server response,
 * and funnels every state change through a single-threaded update loop.
 * Concurrent refreshes are cancel-superseded, so the pair (graph, view)
 * can only advance, never interleave.
 */

import { ApiClient, LatestWins } from "./api.js";
import {
  brushGroups,
  clearBrush,
  dragBody,
  dragEdge,
  initialView,
  reconcile,
  setFocus,
  type Filters,
  type FocusWindow,
  type ViewState,
} from "./state.js";
import { buildScene, defaultLayout, type LayoutConfig, type Scene } from "./scene.js";
import type {
  AmendmentAction,
  ColumnStrategy,
  GraphResponse,
  Group,
  HistogramResponse,
  PropagationResponse,
  RowStrategy,
} from "./types.js";

export class Explorer {
  view: ViewState;
  graph: GraphResponse | null = null;
  private readonly loads = new LatestWins<GraphResponse>();

  constructor(
    private readonly client: ApiClient,
    view: ViewState = initialView(),
  ) {
    this.view = view;
  }

  /** Fetch the graph for the current view; stale responses are dropped. */
  async refresh(): Promise<void> {
    const got = await this.loads.run((signal) => this.client.getGraph(this.view, signal));
    if (got === undefined) {
      return;
    }
    this.graph = got;
    this.view = reconcile(this.view, got);
  }

  scene(layout: LayoutConfig = defaultLayout): Scene {
    return buildScene(this.graph, this.view, layout);
  }

  columnCount(): number {
    return this.graph === null ? 0 : this.graph.groups.length;
  }

  async setStrategies(rows: RowStrategy, columns: ColumnStrategy, focusEntity: string | null = null): Promise<void> {
    this.view = { ...this.view, rows, columns, focusEntity };
    await this.refresh();
  }

  async setFilters(filters: Filters): Promise<void> {
    this.view = { ...this.view, filters };
    await this.refresh();
  }

  setFocusWindow(focus: FocusWindow | null): void {
    this.view = setFocus(this.view, focus, this.columnCount());
  }

  dragFocusBody(delta: number): void {
    this.view = dragBody(this.view, delta, this.columnCount());
  }

  dragFocusEdge(delta: number): void {
    this.view = dragEdge(this.view, delta, this.columnCount());
  }

  brush(ids: string[]): void {
    if (this.graph === null) {
      throw new Error("no graph loaded");
    }
    this.view = brushGroups(this.view, ids, this.graph);
  }

  unbrush(): void {
    this.view = clearBrush(this.view);
  }

  /**
   * Apply an amendment optimistically, then confirm with the server.
   * A rejected request restores the pre-amendment response verbatim;
   * an accepted one is followed by a refresh so the view converges on
   * the server's own re-aggregation. Returns whether the server took it.
   */
  async amend(edgeId: string, action: AmendmentAction, value?: number): Promise<boolean> {
    if (this.graph === null) {
      throw new Error("no graph loaded");
    }
    const prior = this.graph;
    this.graph = applyLocalAmendment(prior, edgeId, action, value);
    this.view = reconcile(this.view, this.graph);
    try {
      await this.client.postAmendment({ edge_id: edgeId, action, value });
    } catch {
      this.graph = prior;
      this.view = reconcile(this.view, prior);
      return false;
    }
    await this.refresh();
    return true;
  }

  propagation(source: string, target: string): Promise<PropagationResponse> {
    return this.client.getPropagation(source, target, this.view);
  }

  histogram(entity: string, binWidth: number): Promise<HistogramResponse> {
    return this.client.getHistogram(entity, binWidth);
  }
}

/**
 * Local preview of an amendment on the aggregated response. The server
 * re-aggregates after every accepted amendment, so this only has to be
 * visually faithful, not byte-faithful; `refresh` reconverges afterwards.
 */
export function applyLocalAmendment(
  graph: GraphResponse,
  edgeId: string,
  action: AmendmentAction,
  value?: number,
): GraphResponse {
  const groups: Group[] = [];
  for (const group of graph.groups) {
    const i = group.members.indexOf(edgeId);
    if (i < 0) {
      groups.push(group);
      continue;
    }
    if (action === "delete") {
      const remaining = dropMember(group, i);
      if (remaining !== null) {
        groups.push(remaining);
      }
      continue;
    }
    const sectors = group.sectors.map((s, j) => {
      if (j !== i) {
        return { ...s };
      }
      if (action === "flip_sign") {
        return { sign: (s.sign === 1 ? -1 : 1) as 1 | -1, magnitude: s.magnitude };
      }
      const v = value ?? 0;
      return { sign: (v >= 0 ? 1 : -1) as 1 | -1, magnitude: Math.abs(v) };
    });
    groups.push({ ...group, sectors });
  }
  return {
    ...graph,
    groups,
    column_order: {
      ...graph.column_order,
      permutation: graph.column_order.permutation.filter((id) => groups.some((g) => g.id === id)),
    },
  };
}

function dropMember(group: Group, index: number): Group | null {
  if (group.members.length <= 1) {
    return null;
  }
  const members = group.members.filter((_, j) => j !== index);
  const sectors = group.sectors.filter((_, j) => j !== index);
  let andCore = group.and_core;
  let orSet = group.or_set.filter((_, j) => j !== index);
  if (members.length === 1 && orSet.length === 1) {
    // A lone survivor has no alternatives; its extra joins the mandatory set.
    andCore = [...group.and_core, orSet[0]!].sort();
    orSet = [];
  }
  return { ...group, and_core: andCore, or_set: orSet, members, sectors };
}
