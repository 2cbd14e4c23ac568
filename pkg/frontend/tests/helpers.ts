import type { EntityRow, GraphResponse, Group, Sector } from "../src/types.js";

export function entityRows(names: string[], communities: number[] = []): EntityRow[] {
  return names.map((name, id) => ({ id, name, community: communities[id] ?? 0 }));
}

let counter = 0;

/** Singleton column: one member edge, whole cause set mandatory. */
export function singleGroup(causes: string[], effect: string, strength: number): Group {
  const id = `e${counter++}`;
  return {
    id: `g:${id}`,
    and_core: [...causes].sort(),
    or_set: [],
    effect,
    members: [id],
    sectors: [{ sign: strength > 0 ? 1 : -1, magnitude: Math.abs(strength) }],
  };
}

/** Aggregated column: shared core plus one alternative per member edge. */
export function orGroup(core: string[], alternatives: string[], effect: string, strengths: number[]): Group {
  const members = alternatives.map(() => `e${counter++}`);
  const sectors: Sector[] = strengths.map((s) => ({ sign: s > 0 ? 1 : -1, magnitude: Math.abs(s) }));
  return {
    id: `g:${members.join("+")}`,
    and_core: [...core].sort(),
    or_set: [...alternatives],
    effect,
    members,
    sectors,
  };
}

export function graphOf(entities: EntityRow[], groups: Group[]): GraphResponse {
  return {
    created_at: 0,
    entities,
    groups,
    row_order: { strategy: "base", permutation: entities.map((e) => e.id) },
    column_order: { strategy: "direction", permutation: groups.map((g) => g.id) },
    filters: { min_strength: 0, max_degree: null, sign: "any" },
  };
}
