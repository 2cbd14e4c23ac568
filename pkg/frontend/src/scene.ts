/**
 * Pure scene construction.
 *
 * A scene is a flat list of typed drawing nodes in deterministic order.
 * Rebuilding from the same (response, view, layout) triple yields a
 * deep-equal scene, which is what makes replay and brush round-trips
 * testable without a DOM.
 *
 * Layout follows the parallel-tracks reading: one horizontal track per
 * entity, one vertical column per aggregated group. Inside a column the
 * mandatory causes are threaded by a line (all must fire), alternatives
 * are spanned by an arc (any may fire), and the effect is a hollow circle
 * fed by an arrow.
 */

import type { GraphResponse, Group, HistogramResponse, PropagationResponse, Sector } from "./types.js";
import { expandedIndices, type ViewState } from "./state.js";

export interface LayoutConfig {
  trackHeight: number;
  columnWidth: number;
  /** Context columns outside the focus window render at this fixed width. */
  collapsedWidth: number;
  columnGap: number;
  marginLeft: number;
  marginTop: number;
  circleRadius: number;
  pieRadius: number;
}

export const defaultLayout: LayoutConfig = {
  trackHeight: 28,
  columnWidth: 26,
  collapsedWidth: 6,
  columnGap: 6,
  marginLeft: 120,
  marginTop: 26,
  circleRadius: 9,
  pieRadius: 7,
};

export type CauseRole = "impelling" | "inhibiting";

export interface TrackNode {
  kind: "track";
  entity: string;
  community: number;
  y: number;
  x1: number;
  x2: number;
}

export interface LabelNode {
  kind: "label";
  text: string;
  x: number;
  y: number;
  anchor: "start" | "middle" | "end";
}

export interface ColumnNode {
  kind: "column";
  groupId: string;
  index: number;
  x: number;
  width: number;
  expanded: boolean;
  brushed: boolean;
}

export interface CauseNode {
  kind: "cause";
  groupId: string;
  entity: string;
  /** Member edge id the circle answers for; null for shared mandatory causes. */
  memberId: string | null;
  slot: "and" | "or";
  role: CauseRole;
  opacity: number;
  cx: number;
  cy: number;
  r: number;
}

export interface EffectNode {
  kind: "effect";
  groupId: string;
  entity: string;
  cx: number;
  cy: number;
  r: number;
}

export interface AndLineNode {
  kind: "and-line";
  groupId: string;
  x: number;
  y1: number;
  y2: number;
}

export interface OrArcNode {
  kind: "or-arc";
  groupId: string;
  x: number;
  y1: number;
  y2: number;
  bow: number;
}

export interface ArrowNode {
  kind: "arrow";
  groupId: string;
  x: number;
  y1: number;
  y2: number;
}

export interface PieSector {
  startAngle: number;
  endAngle: number;
  role: CauseRole;
}

export interface PieNode {
  kind: "pie";
  groupId: string;
  cx: number;
  cy: number;
  r: number;
  sectors: PieSector[];
}

export interface MessageNode {
  kind: "message";
  text: string;
}

export interface PathNode {
  kind: "path-node";
  entity: string;
  layer: number;
  onBestPath: boolean;
  cx: number;
  cy: number;
  r: number;
}

export interface PathEdgeNode {
  kind: "path-edge";
  from: string;
  to: string;
  strength: number | null;
  best: boolean;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface BadgeNode {
  kind: "badge";
  text: string;
}

export interface BarNode {
  kind: "bar";
  index: number;
  count: number;
  x: number;
  y: number;
  width: number;
  height: number;
}

export type SceneNode =
  | TrackNode
  | LabelNode
  | ColumnNode
  | CauseNode
  | EffectNode
  | AndLineNode
  | OrArcNode
  | ArrowNode
  | PieNode
  | MessageNode
  | PathNode
  | PathEdgeNode
  | BadgeNode
  | BarNode;

export interface Scene {
  width: number;
  height: number;
  nodes: SceneNode[];
}

const EMPTY_MESSAGE = "no hypergraph to display";

export function buildScene(
  graph: GraphResponse | null,
  view: ViewState,
  layout: LayoutConfig = defaultLayout,
): Scene {
  if (graph === null || graph.entities.length === 0 || graph.groups.length === 0) {
    return { width: 360, height: 120, nodes: [{ kind: "message", text: EMPTY_MESSAGE }] };
  }

  const nodes: SceneNode[] = [];
  const trackY = new Map<string, number>();
  graph.entities.forEach((entity, i) => {
    trackY.set(entity.name, layout.marginTop + i * layout.trackHeight + layout.trackHeight / 2);
  });

  const expanded = new Set(expandedIndices(view.focus, graph.groups.length));
  const brushed = new Set(view.brushed);

  // Columns claim disjoint x slots by construction: the cursor advances by
  // the previous column's width plus the gap before the next one is placed.
  const columns: ColumnNode[] = [];
  let cursor = layout.marginLeft + layout.columnGap;
  graph.groups.forEach((group, index) => {
    const isExpanded = expanded.has(index);
    const width = isExpanded ? layout.columnWidth : layout.collapsedWidth;
    columns.push({
      kind: "column",
      groupId: group.id,
      index,
      x: cursor,
      width,
      expanded: isExpanded,
      brushed: brushed.has(group.id),
    });
    cursor += width + layout.columnGap;
  });

  const width = cursor + layout.columnGap;
  const height = layout.marginTop + graph.entities.length * layout.trackHeight + layout.trackHeight;

  graph.entities.forEach((entity) => {
    const y = trackY.get(entity.name)!;
    nodes.push({ kind: "track", entity: entity.name, community: entity.community, y, x1: layout.marginLeft, x2: width - layout.columnGap });
    nodes.push({ kind: "label", text: entity.name, x: layout.marginLeft - 8, y, anchor: "end" });
  });

  for (const column of columns) {
    nodes.push(column);
    if (!column.expanded) {
      continue;
    }
    const group = graph.groups[column.index]!;
    nodes.push(...columnMarks(group, column, trackY, layout));
  }

  return { width, height, nodes };
}

function columnMarks(
  group: Group,
  column: ColumnNode,
  trackY: Map<string, number>,
  layout: LayoutConfig,
): SceneNode[] {
  const out: SceneNode[] = [];
  const cx = column.x + column.width / 2;
  const r = layout.circleRadius;
  const dominant = dominantSector(group.sectors);

  const coreYs: number[] = [];
  for (const name of group.and_core) {
    const cy = trackY.get(name);
    if (cy === undefined) {
      continue;
    }
    coreYs.push(cy);
    out.push({
      kind: "cause",
      groupId: group.id,
      entity: name,
      memberId: group.or_set.length === 0 ? group.members[0] ?? null : null,
      slot: "and",
      role: roleOf(dominant),
      opacity: dominant.magnitude,
      cx,
      cy,
      r,
    });
  }
  if (coreYs.length > 0) {
    // The series line must visibly cross every mandatory circle.
    out.push({
      kind: "and-line",
      groupId: group.id,
      x: cx,
      y1: Math.min(...coreYs) - 1.4 * r,
      y2: Math.max(...coreYs) + 1.4 * r,
    });
  }

  const orYs: number[] = [];
  group.or_set.forEach((name, i) => {
    const cy = trackY.get(name);
    if (cy === undefined) {
      return;
    }
    const sector = group.sectors[i] ?? dominant;
    orYs.push(cy);
    out.push({
      kind: "cause",
      groupId: group.id,
      entity: name,
      memberId: group.members[i] ?? null,
      slot: "or",
      role: roleOf(sector),
      opacity: sector.magnitude,
      cx,
      cy,
      r,
    });
  });
  if (orYs.length > 0) {
    out.push({
      kind: "or-arc",
      groupId: group.id,
      x: cx,
      y1: Math.min(...orYs) - 1.4 * r,
      y2: Math.max(...orYs) + 1.4 * r,
      bow: r * 1.8,
    });
  }

  const effectY = trackY.get(group.effect);
  if (effectY !== undefined) {
    const causeYs = [...coreYs, ...orYs];
    if (causeYs.length > 0) {
      const nearest = causeYs.reduce((best, y) =>
        Math.abs(y - effectY) < Math.abs(best - effectY) ? y : best,
      );
      const direction = effectY > nearest ? 1 : -1;
      out.push({
        kind: "arrow",
        groupId: group.id,
        x: cx,
        y1: nearest + direction * 1.5 * r,
        y2: effectY - direction * (r + 2),
      });
    }
    out.push({ kind: "effect", groupId: group.id, entity: group.effect, cx, cy: effectY, r });
  }

  if (group.members.length > 1) {
    out.push(pieGlyph(group, cx, layout));
  }
  return out;
}

/** Sign carried by the strongest member; shared mandatory circles wear it. */
function dominantSector(sectors: Sector[]): Sector {
  let best: Sector = sectors[0] ?? { sign: 1, magnitude: 0 };
  for (const s of sectors) {
    if (s.magnitude > best.magnitude) {
      best = s;
    }
  }
  return best;
}

function roleOf(sector: Sector): CauseRole {
  return sector.sign >= 0 ? "impelling" : "inhibiting";
}

/** Sector angles split the full circle in proportion to member |strength|. */
function pieGlyph(group: Group, cx: number, layout: LayoutConfig): PieNode {
  const total = group.sectors.reduce((acc, s) => acc + s.magnitude, 0);
  const sectors: PieSector[] = [];
  let angle = -Math.PI / 2;
  for (const s of group.sectors) {
    const share = total > 0 ? (s.magnitude / total) * 2 * Math.PI : (2 * Math.PI) / group.sectors.length;
    sectors.push({ startAngle: angle, endAngle: angle + share, role: roleOf(s) });
    angle += share;
  }
  return {
    kind: "pie",
    groupId: group.id,
    cx,
    cy: layout.marginTop / 2,
    r: layout.pieRadius,
    sectors,
  };
}

export interface PanelLayout {
  layerGap: number;
  rowGap: number;
  margin: number;
  nodeRadius: number;
  barWidth: number;
  barGap: number;
  plotHeight: number;
}

export const defaultPanelLayout: PanelLayout = {
  layerGap: 120,
  rowGap: 46,
  margin: 36,
  nodeRadius: 10,
  barWidth: 18,
  barGap: 3,
  plotHeight: 140,
};

/** Layered drawing of an influence route; unreachable pairs get a badge. */
export function buildPropagationScene(
  response: PropagationResponse,
  layout: PanelLayout = defaultPanelLayout,
): Scene {
  if (!response.reachable || response.path === null) {
    return {
      width: 360,
      height: 80,
      nodes: [{ kind: "badge", text: `${response.source} cannot reach ${response.target}` }],
    };
  }

  const byLayer = new Map<number, string[]>();
  for (const [name, layer] of Object.entries(response.layers)) {
    const bucket = byLayer.get(layer) ?? [];
    bucket.push(name);
    byLayer.set(layer, bucket);
  }
  const layers = [...byLayer.keys()].sort((a, b) => a - b);
  const position = new Map<string, { cx: number; cy: number }>();
  const nodes: SceneNode[] = [];
  const onBest = new Set(response.path.nodes);

  let height = layout.margin * 2;
  for (const layer of layers) {
    const names = byLayer.get(layer)!.sort();
    names.forEach((name, i) => {
      const cx = layout.margin + layer * layout.layerGap;
      const cy = layout.margin + i * layout.rowGap;
      position.set(name, { cx, cy });
      height = Math.max(height, cy + layout.margin);
      nodes.push({
        kind: "path-node",
        entity: name,
        layer,
        onBestPath: onBest.has(name),
        cx,
        cy,
        r: layout.nodeRadius,
      });
      nodes.push({ kind: "label", text: name, x: cx, y: cy - layout.nodeRadius - 4, anchor: "middle" });
    });
  }

  const edges: PathEdgeNode[] = [];
  const seen = new Set<string>();
  const pushEdge = (from: string, to: string, strength: number | null, best: boolean) => {
    const key = `${from}>${to}`;
    if (seen.has(key)) {
      return;
    }
    seen.add(key);
    const a = position.get(from);
    const b = position.get(to);
    if (!a || !b) {
      return;
    }
    edges.push({ kind: "path-edge", from, to, strength, best, x1: a.cx, y1: a.cy, x2: b.cx, y2: b.cy });
  };
  for (let i = 0; i + 1 < response.path.nodes.length; i++) {
    pushEdge(response.path.nodes[i]!, response.path.nodes[i + 1]!, response.path.strengths[i] ?? null, true);
  }
  for (const alt of response.alternatives ?? []) {
    for (let i = 0; i + 1 < alt.nodes.length; i++) {
      pushEdge(alt.nodes[i]!, alt.nodes[i + 1]!, null, false);
    }
  }

  const width = layout.margin * 2 + (layers.length > 0 ? layers[layers.length - 1]! * layout.layerGap : 0);
  return { width, height, nodes: [...edges, ...nodes] };
}

/** Bars scaled to the busiest bin; counts stay attached for inspection. */
export function buildHistogramScene(
  response: HistogramResponse,
  layout: PanelLayout = defaultPanelLayout,
): Scene {
  const peak = Math.max(1, ...response.bins);
  const nodes: SceneNode[] = [];
  response.bins.forEach((count, i) => {
    const height = (count / peak) * layout.plotHeight;
    nodes.push({
      kind: "bar",
      index: i,
      count,
      x: layout.margin + i * (layout.barWidth + layout.barGap),
      y: layout.margin + layout.plotHeight - height,
      width: layout.barWidth,
      height,
    });
  });
  nodes.push({
    kind: "label",
    text: `${response.entity} (bin ${response.bin_width})`,
    x: layout.margin,
    y: layout.margin - 10,
    anchor: "start",
  });
  const width = layout.margin * 2 + response.bins.length * (layout.barWidth + layout.barGap);
  return { width, height: layout.margin * 2 + layout.plotHeight, nodes };
}
