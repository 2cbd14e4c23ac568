/**
 * JSON shapes served by the causeloom HTTP API. These mirror the wire
 * format exactly; the explorer never reaches into server internals.
 */

export type Sign = 1 | -1;

export interface EntityRow {
  id: number;
  name: string;
  community: number;
}

export interface Sector {
  sign: Sign;
  magnitude: number;
}

/** Aggregated column: every member edge shares `and_core` and `effect`;
 *  when `or_set` is non-empty, member i contributes alternative `or_set[i]`. */
export interface Group {
  id: string;
  and_core: string[];
  or_set: string[];
  effect: string;
  members: string[];
  sectors: Sector[];
}

export type RowStrategy = "base" | "groups" | "alphabetical" | "manual";
export type ColumnStrategy = "direction" | "strength" | "degree" | "topology" | "manual";
export type SignFilter = "any" | "impelling" | "inhibiting";

export interface OrderInfo<P> {
  strategy: string;
  permutation: P[];
}

export interface GraphResponse {
  created_at: number;
  entities: EntityRow[];
  groups: Group[];
  row_order: OrderInfo<number>;
  column_order: OrderInfo<string>;
  filters: { min_strength: number; max_degree: number | null; sign: string };
}

export type AmendmentAction = "flip_sign" | "set_strength" | "delete";

export interface AmendmentRequest {
  edge_id: string;
  action: AmendmentAction;
  value?: number;
  author?: string;
}

export interface AmendmentAck {
  seq: number;
}

export interface PropagationPathJson {
  nodes: string[];
  strengths: number[];
  distance: number;
}

export interface PropagationResponse {
  source: string;
  target: string;
  reachable: boolean;
  path: PropagationPathJson | null;
  alternatives?: { nodes: string[]; distance: number }[];
  layers: Record<string, number>;
}

export interface HistogramResponse {
  entity: string;
  bin_width: number;
  bins: number[];
}

export interface CommunitiesResponse {
  communities: Record<string, number>;
  modularity: number;
}

export interface HealthResponse {
  status: string;
  snapshot_loaded: boolean;
}

export interface ErrorBody {
  error: string;
  detail: string;
}
