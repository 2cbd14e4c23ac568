"""Weighted directed hypergraph: edges, AND/OR aggregation, amendments.

Edges are keyed by entity names, not ids, and the edge id is a content hash
of (sorted causes, effect); recomputing a pipeline or reordering entities
never invalidates an amendment journal.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

VALID_ACTIONS = ("delete", "flip_sign", "set_strength")


def edge_id(causes, effect: str) -> str:
    payload = json.dumps([sorted(causes), effect], separators=(",", ":"))
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Hyperedge:
    """Several causes jointly influencing one effect.

    strength is signed and nonzero in [-1, 1]; size_level and recruited record
    how the discovery run produced the edge.
    """

    id: str
    causes: tuple[str, ...]
    effect: str
    strength: float
    size_level: int = 1
    recruited: bool = False

    def validate(self) -> None:
        if not self.causes:
            raise ValueError("hyperedge needs at least one cause")
        if tuple(sorted(self.causes)) != self.causes:
            raise ValueError("causes must be sorted")
        if len(set(self.causes)) != len(self.causes):
            raise ValueError("duplicate cause")
        if self.effect in self.causes:
            raise ValueError("effect cannot be one of its causes")
        if not -1.0 <= self.strength <= 1.0 or self.strength == 0:
            raise ValueError("strength must be nonzero in [-1, 1]")
        if self.id != edge_id(self.causes, self.effect):
            raise ValueError("edge id does not match content")


def make_edge(causes, effect: str, strength: float, size_level: int | None = None, recruited: bool = False) -> Hyperedge:
    causes = tuple(sorted(causes))
    edge = Hyperedge(
        id=edge_id(causes, effect),
        causes=causes,
        effect=effect,
        strength=float(strength),
        size_level=size_level if size_level is not None else len(causes),
        recruited=recruited,
    )
    edge.validate()
    return edge


@dataclass
class DirectedHypergraph:
    nodes: list[str]
    edges: list[Hyperedge]

    def validate(self) -> None:
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node names")
        seen = set()
        for e in self.edges:
            e.validate()
            if e.id in seen:
                raise ValueError(f"duplicate edge id {e.id}")
            seen.add(e.id)
            for name in (*e.causes, e.effect):
                if name not in known:
                    raise ValueError(f"edge references unknown node {name!r}")

    def by_id(self) -> dict[str, Hyperedge]:
        return {e.id: e for e in self.edges}

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [
                {
                    "causes": list(e.causes),
                    "effect": e.effect,
                    "strength": e.strength,
                    "size_level": e.size_level,
                    "recruited": e.recruited,
                }
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, blob: dict) -> "DirectedHypergraph":
        edges = [
            make_edge(
                e["causes"],
                e["effect"],
                e["strength"],
                size_level=e.get("size_level"),
                recruited=e.get("recruited", False),
            )
            for e in blob["edges"]
        ]
        hg = cls(nodes=list(blob["nodes"]), edges=edges)
        hg.validate()
        return hg


@dataclass(frozen=True)
class AggregatedGroup:
    """One rendered column: edges sharing an AND core, varying in one OR slot.

    sectors align with member_ids: (sign, magnitude) per member edge, ready
    for pie-glyph rendering.  A singleton group has an empty or_set and its
    whole cause set in the core.
    """

    id: str
    and_core: tuple[str, ...]
    or_set: tuple[str, ...]
    effect: str
    member_ids: tuple[str, ...]
    sectors: tuple[tuple[int, float], ...]

    def max_magnitude(self) -> float:
        return max(m for _, m in self.sectors)

    def degree(self) -> int:
        # cause count of the widest member edge
        return len(self.and_core) + (1 if self.or_set else 0)

    def touches_as_cause(self, name: str) -> bool:
        return name in self.and_core or name in self.or_set

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "and_core": list(self.and_core),
            "or_set": list(self.or_set),
            "effect": self.effect,
            "members": list(self.member_ids),
            "sectors": [{"sign": s, "magnitude": m} for s, m in self.sectors],
        }


def _group_id(member_ids) -> str:
    payload = json.dumps(sorted(member_ids), separators=(",", ":"))
    return "g" + hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]


def _finish_group(effect: str, core: tuple[str, ...], members: list[Hyperedge]) -> AggregatedGroup:
    if len(members) == 1 and len(members[0].causes) == len(core):
        or_set: tuple[str, ...] = ()
        ordered = members
    else:
        extras = sorted((set(e.causes) - set(core)).pop() for e in members)
        by_extra = {(set(e.causes) - set(core)).pop(): e for e in members}
        or_set = tuple(extras)
        ordered = [by_extra[x] for x in extras]
    sectors = tuple((1 if e.strength > 0 else -1, abs(e.strength)) for e in ordered)
    ids = tuple(e.id for e in ordered)
    return AggregatedGroup(
        id=_group_id(ids),
        and_core=core,
        or_set=or_set,
        effect=effect,
        member_ids=ids,
        sectors=sectors,
    )


def aggregate(hg: DirectedHypergraph) -> list[AggregatedGroup]:
    """Partition edges into AND/OR groups, exactly once each.

    Greedy per effect: repeatedly take the largest family of unassigned edges
    whose cause sets share a core and differ in exactly one element (ties go
    to the lexicographically smallest core); families of one stay singleton.
    Output order is canonical: effects in node order, then formation order,
    then leftover singletons by cause tuple.
    """
    node_pos = {n: i for i, n in enumerate(hg.nodes)}
    by_effect: dict[str, list[Hyperedge]] = {}
    for e in hg.edges:
        by_effect.setdefault(e.effect, []).append(e)

    groups: list[AggregatedGroup] = []
    for effect in sorted(by_effect, key=lambda n: node_pos.get(n, len(node_pos))):
        remaining = {e.id: e for e in by_effect[effect]}
        formed: list[AggregatedGroup] = []
        while True:
            families: dict[tuple[str, ...], list[Hyperedge]] = {}
            for e in remaining.values():
                for removed in e.causes:
                    core = tuple(c for c in e.causes if c != removed)
                    families.setdefault(core, []).append(e)
            best = None
            for core, members in families.items():
                key = (-len(members), core)
                if len(members) >= 2 and (best is None or key < best[0]):
                    best = (key, core, members)
            if best is None:
                break
            _, core, members = best
            formed.append(_finish_group(effect, core, members))
            for e in members:
                del remaining[e.id]
        leftovers = sorted(remaining.values(), key=lambda e: e.causes)
        formed.extend(_finish_group(effect, e.causes, [e]) for e in leftovers)
        groups.extend(formed)
    return groups


def expand(groups: list[AggregatedGroup], nodes: list[str] | None = None) -> DirectedHypergraph:
    """Lossless inverse of aggregate: rebuild the exact member edges."""
    edges = []
    for g in groups:
        if g.or_set:
            for extra, (sign, mag) in zip(g.or_set, g.sectors):
                edges.append(make_edge(tuple(sorted((*g.and_core, extra))), g.effect, sign * mag))
        else:
            sign, mag = g.sectors[0]
            edges.append(make_edge(g.and_core, g.effect, sign * mag))
    if nodes is None:
        seen: dict[str, None] = {}
        for e in edges:
            for name in (*e.causes, e.effect):
                seen.setdefault(name)
        nodes = sorted(seen)
    hg = DirectedHypergraph(nodes=nodes, edges=edges)
    hg.validate()
    return hg


def filter_edges(
    hg: DirectedHypergraph,
    min_strength: float = 0.0,
    max_degree: int | None = None,
    sign: str = "any",
) -> DirectedHypergraph:
    """Keep edges with |strength| >= min_strength, at most max_degree causes,
    and a matching sign ("any", "impelling", or "inhibiting")."""
    if min_strength < 0:
        raise ValueError("min_strength must be nonnegative")
    if max_degree is not None and max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    if sign not in ("any", "impelling", "inhibiting"):
        raise ValueError(f"unknown sign filter {sign!r}")
    kept = []
    for e in hg.edges:
        if abs(e.strength) < min_strength:
            continue
        if max_degree is not None and len(e.causes) > max_degree:
            continue
        if sign == "impelling" and e.strength <= 0:
            continue
        if sign == "inhibiting" and e.strength >= 0:
            continue
        kept.append(e)
    return DirectedHypergraph(nodes=list(hg.nodes), edges=kept)


@dataclass(frozen=True)
class Amendment:
    """One journaled display-layer correction; never touches fitted params."""

    seq: int
    edge_id: str
    action: str
    value: float | None = None
    author: str = ""
    ts: float = 0.0

    def validate(self) -> None:
        if self.action not in VALID_ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.action == "set_strength":
            if self.value is None or not -1.0 <= self.value <= 1.0 or self.value == 0:
                raise ValueError("set_strength needs a nonzero value in [-1, 1]")
        elif self.value is not None:
            raise ValueError(f"{self.action} takes no value")

    def to_json(self) -> dict:
        rec = {"seq": self.seq, "edge_id": self.edge_id, "action": self.action, "author": self.author, "ts": self.ts}
        if self.action == "set_strength":
            rec["value"] = self.value
        return rec

    @classmethod
    def from_json(cls, rec: dict) -> "Amendment":
        a = cls(
            seq=int(rec["seq"]),
            edge_id=rec["edge_id"],
            action=rec["action"],
            value=rec.get("value"),
            author=rec.get("author", ""),
            ts=float(rec.get("ts", 0.0)),
        )
        a.validate()
        return a


def apply_amendments(hg: DirectedHypergraph, log: list[Amendment]) -> tuple[DirectedHypergraph, list[Amendment]]:
    """Replay the journal in seq order onto a copy of the hypergraph.

    Returns (amended graph, skipped amendments); an entry whose edge is gone
    (deleted earlier, or never existed) is skipped, never fatal.
    """
    seqs = [a.seq for a in log]
    if seqs != sorted(seqs):
        raise ValueError("amendment log must be sorted by seq")
    if len(set(seqs)) != len(seqs):
        raise ValueError("duplicate amendment seq")
    edges = {e.id: e for e in hg.edges}
    skipped = []
    for a in log:
        a.validate()
        edge = edges.get(a.edge_id)
        if edge is None:
            skipped.append(a)
            continue
        if a.action == "delete":
            del edges[a.edge_id]
        elif a.action == "flip_sign":
            edges[a.edge_id] = replace(edge, strength=-edge.strength)
        else:
            edges[a.edge_id] = replace(edge, strength=float(a.value))
    return DirectedHypergraph(nodes=list(hg.nodes), edges=list(edges.values())), skipped
