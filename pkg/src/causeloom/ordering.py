"""Row/column orderings, communities, and propagation paths.

Rows are entities, columns are aggregated hyperedge groups.  Louvain runs on
the undirected projection of the causal graph (weights are strength
magnitudes summed over both directions, self-influence dropped) and is
seed-deterministic.  Propagation distance per edge is 1 - |strength|, so
strong influence is short; ties break to fewer hops, then to the
lexicographically smallest node-id sequence, which the search enforces by
running Dijkstra on composite keys.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .combos import tied_name
from .embeddings import EmbeddingTable
from .events import Entity
from .hypergraph import AggregatedGroup, DirectedHypergraph
from .rpp import CausalGraph

ROW_STRATEGIES = ("base", "groups", "alphabetical", "manual")
COLUMN_STRATEGIES = ("direction", "strength", "degree", "topology", "manual")


@dataclass
class RowOrder:
    strategy: str
    permutation: list[int]  # entity ids, display order


@dataclass
class ColumnOrder:
    strategy: str
    permutation: list[str]  # group ids, display order


@dataclass
class Partition:
    """Entity communities plus the modularity achieved.

    history holds the modularity after each completed Louvain pass, measured
    on the original graph; it never decreases.
    """

    communities: dict[int, int]
    modularity: float
    history: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "communities": {str(u): c for u, c in sorted(self.communities.items())},
            "modularity": self.modularity,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "Partition":
        return cls(
            communities={int(u): int(c) for u, c in blob["communities"].items()},
            modularity=float(blob["modularity"]),
        )


@dataclass
class PropagationPath:
    nodes: list[int]
    strengths: list[float]
    distance: float
    reachable: bool

    def hops(self) -> int:
        return max(0, len(self.nodes) - 1)


def _check_permutation(permutation, id_set) -> None:
    if permutation is None:
        raise ValueError("manual strategy needs a permutation")
    if sorted(permutation) != sorted(id_set):
        raise ValueError("manual permutation is not a bijection over the current ids")


def order_rows(
    entities: list[Entity],
    strategy: str,
    partition: Partition | None = None,
    table: EmbeddingTable | None = None,
    permutation: list[int] | None = None,
) -> RowOrder:
    """Entity display order.

    base: ascending id.  alphabetical: by name.  groups: communities by
    descending size, members by descending mean similarity to the community
    centroid (embedding cosine), ties by id.  manual: caller permutation.
    """
    if strategy not in ROW_STRATEGIES:
        raise ValueError(f"unknown row strategy {strategy!r}")
    ids = [e.id for e in entities]
    if strategy == "base":
        perm = sorted(ids)
    elif strategy == "alphabetical":
        perm = [e.id for e in sorted(entities, key=lambda e: e.name)]
    elif strategy == "manual":
        _check_permutation(permutation, ids)
        perm = list(permutation)
    else:
        if partition is None or table is None:
            raise ValueError("groups strategy needs a partition and an embedding table")
        members: dict[int, list[int]] = {}
        for u in ids:
            members.setdefault(partition.communities[u], []).append(u)
        # larger communities first; equal sizes by community id
        comm_order = sorted(members, key=lambda c: (-len(members[c]), c))
        perm = []
        for c in comm_order:
            vecs = table.vectors[members[c]]
            centroid = vecs.mean(axis=0)
            cnorm = np.linalg.norm(centroid)
            scores = {}
            for u in members[c]:
                v = table.vectors[u]
                vnorm = np.linalg.norm(v)
                scores[u] = float(v @ centroid / (vnorm * cnorm)) if cnorm > 0 and vnorm > 0 else 0.0
            perm.extend(sorted(members[c], key=lambda u: (-scores[u], u)))
    return RowOrder(strategy=strategy, permutation=perm)


def order_columns(
    groups: list[AggregatedGroup],
    strategy: str,
    entity_ids: dict[str, int],
    focus: str | None = None,
    permutation: list[str] | None = None,
) -> ColumnOrder:
    """Group display order.

    direction: ascending effect id.  strength: descending max member
    magnitude.  degree: ascending cause count of the widest member.
    topology: groups touching the focus first (as a cause, then as the
    effect), each block in direction order.  manual: caller permutation.
    Ties everywhere resolve by effect id, then by group id.
    """
    if strategy not in COLUMN_STRATEGIES:
        raise ValueError(f"unknown column strategy {strategy!r}")

    def eid(g: AggregatedGroup) -> int:
        try:
            return entity_ids[g.effect]
        except KeyError:
            raise ValueError(f"group effect {g.effect!r} missing from entity ids") from None

    if strategy == "manual":
        _check_permutation(permutation, [g.id for g in groups])
        return ColumnOrder(strategy=strategy, permutation=list(permutation))
    if strategy == "direction":
        ordered = sorted(groups, key=lambda g: (eid(g), g.id))
    elif strategy == "strength":
        ordered = sorted(groups, key=lambda g: (-g.max_magnitude(), eid(g), g.id))
    elif strategy == "degree":
        ordered = sorted(groups, key=lambda g: (g.degree(), eid(g), g.id))
    else:
        if focus is None or focus not in entity_ids:
            raise ValueError(f"unknown focus entity {focus!r}")
        def block(g: AggregatedGroup) -> int:
            if g.touches_as_cause(focus):
                return 0
            if g.effect == focus:
                return 1
            return 2
        ordered = sorted(groups, key=lambda g: (block(g), eid(g), g.id))
    return ColumnOrder(strategy=strategy, permutation=[g.id for g in ordered])


# -- communities ---------------------------------------------------------


def _projection(graph: CausalGraph) -> dict[int, dict[int, float]]:
    adj: dict[int, dict[int, float]] = {u: {} for u in range(graph.num_entities)}
    for (u, v), s in graph.edges.items():
        if u == v:
            continue  # self-influence cannot bind two nodes together
        adj[u][v] = adj[u].get(v, 0.0) + abs(s)
        adj[v][u] = adj[v].get(u, 0.0) + abs(s)
    return adj


def modularity(graph: CausalGraph, communities: dict[int, int]) -> float:
    """Newman modularity of a partition on the undirected projection."""
    adj = _projection(graph)
    two_m = sum(sum(nbrs.values()) for nbrs in adj.values())
    if two_m == 0:
        return 0.0
    degree = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
    internal = 0.0
    for u, nbrs in adj.items():
        for v, w in nbrs.items():
            if communities[u] == communities[v]:
                internal += w
    # null model covers every same-community pair, adjacent or not
    comm_degree: dict[int, float] = {}
    for u, d in degree.items():
        comm_degree[communities[u]] = comm_degree.get(communities[u], 0.0) + d
    expected = sum(d * d for d in comm_degree.values()) / two_m
    return (internal - expected) / two_m


def communities_louvain(graph: CausalGraph, seed: int = 0) -> Partition:
    """Louvain passes until no move improves modularity; deterministic per seed."""
    rng = np.random.default_rng(seed)
    base_adj = _projection(graph)
    n = graph.num_entities
    if sum(len(v) for v in base_adj.values()) == 0:
        return Partition(communities={u: u for u in range(n)}, modularity=0.0, history=[0.0])

    # current level: adjacency with self-loop weights, and the membership of
    # original nodes in current-level nodes
    adj = {u: dict(nbrs) for u, nbrs in base_adj.items()}
    self_w = {u: 0.0 for u in adj}
    membership = {u: u for u in range(n)}
    history: list[float] = []

    while True:
        nodes = list(adj)
        two_m = sum(sum(nbrs.values()) for nbrs in adj.values()) + 2.0 * sum(self_w.values())
        degree = {u: sum(adj[u].values()) + 2.0 * self_w[u] for u in nodes}
        comm = {u: u for u in nodes}
        comm_degree = dict(degree)
        moved_any = False
        improved = True
        while improved:
            improved = False
            for u in rng.permutation(nodes):
                u = int(u)
                old = comm[u]
                comm_degree[old] -= degree[u]
                comm[u] = -1
                weights: dict[int, float] = {}
                for v, w in adj[u].items():
                    weights[comm[v]] = weights.get(comm[v], 0.0) + w
                weights.pop(-1, None)
                best, best_gain = old, weights.get(old, 0.0) - comm_degree[old] * degree[u] / two_m
                for c, w_in in sorted(weights.items()):
                    gain = w_in - comm_degree[c] * degree[u] / two_m
                    if gain > best_gain + 1e-12:
                        best, best_gain = c, gain
                comm[u] = best
                comm_degree[best] += degree[u]
                if best != old:
                    improved = True
                    moved_any = True

        membership = {orig: comm[cur] for orig, cur in membership.items()}
        relabel = {c: i for i, c in enumerate(sorted(set(membership.values())))}
        membership = {orig: relabel[c] for orig, c in membership.items()}
        history.append(modularity(graph, membership))
        if not moved_any:
            break

        # aggregate communities into super-nodes for the next level
        new_adj: dict[int, dict[int, float]] = {relabel[c]: {} for c in set(comm.values())}
        new_self = {c: 0.0 for c in new_adj}
        for u in nodes:
            cu = relabel[comm[u]]
            new_self[cu] += self_w[u]
            for v, w in adj[u].items():
                cv = relabel[comm[v]]
                if cu == cv:
                    new_self[cu] += w / 2.0  # each undirected pair appears twice
                else:
                    new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
        adj, self_w = new_adj, new_self
        if len(adj) == 1:
            break

    # stable labels: communities numbered by their smallest original node
    order = sorted(set(membership.values()), key=lambda c: min(u for u, m in membership.items() if m == c))
    relabel = {c: i for i, c in enumerate(order)}
    final = {u: relabel[membership[u]] for u in range(n)}
    return Partition(communities=final, modularity=modularity(graph, final), history=history)


# -- propagation ---------------------------------------------------------


def _adjacency(graph: CausalGraph, banned_nodes=(), banned_edges=()) -> dict[int, list[tuple[int, float]]]:
    adj: dict[int, list[tuple[int, float]]] = {u: [] for u in range(graph.num_entities)}
    banned_nodes = set(banned_nodes)
    banned_edges = set(banned_edges)
    for (u, v), s in sorted(graph.edges.items()):
        if u == v or u in banned_nodes or v in banned_nodes or (u, v) in banned_edges:
            continue
        adj[u].append((v, s))
    return adj


def _dijkstra(adj, source: int, target: int) -> tuple[float, list[int]] | None:
    # composite key (distance, hops, node path) makes the tie-breaking part
    # of the optimality criterion; keys grow strictly along every edge
    heap = [(0.0, 0, (source,))]
    done: set[int] = set()
    while heap:
        dist, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node == target:
            return dist, list(path)
        if node in done:
            continue
        done.add(node)
        for nbr, s in adj[node]:
            if nbr in done:
                continue
            heapq.heappush(heap, (dist + 1.0 - abs(s), hops + 1, path + (nbr,)))
    return None


def propagation_path(graph: CausalGraph, source: int, target: int) -> PropagationPath:
    """Strongest-influence path from source to target.

    Edge distance is 1 - |strength|; an unreachable target returns a result
    with reachable False rather than an error.
    """
    for idx in (source, target):
        if not 0 <= idx < graph.num_entities:
            raise ValueError(f"unknown entity id {idx}")
    if source == target:
        return PropagationPath(nodes=[source], strengths=[], distance=0.0, reachable=True)
    adj = _adjacency(graph)
    found = _dijkstra(adj, source, target)
    if found is None:
        return PropagationPath(nodes=[], strengths=[], distance=float("inf"), reachable=False)
    dist, path = found
    strengths = [graph.edges[(a, b)] for a, b in zip(path, path[1:])]
    return PropagationPath(nodes=path, strengths=strengths, distance=dist, reachable=True)


def k_shortest_paths(graph: CausalGraph, source: int, target: int, k: int = 3) -> list[PropagationPath]:
    """Up to k loopless paths in best-first order (same composite ranking)."""
    first = propagation_path(graph, source, target)
    if not first.reachable or source == target:
        return [first] if first.reachable else []
    accepted = [first]
    candidates: dict[tuple[int, ...], float] = {}
    while len(accepted) < k:
        prev = accepted[-1].nodes
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            banned_edges = {
                (p.nodes[i], p.nodes[i + 1])
                for p in accepted
                if len(p.nodes) > i + 1 and p.nodes[: i + 1] == root
            }
            banned_nodes = set(root[:-1])
            adj = _adjacency(graph, banned_nodes, banned_edges)
            found = _dijkstra(adj, root[-1], target)
            if found is None:
                continue
            spur_dist, spur_path = found
            full = tuple(root[:-1]) + tuple(spur_path)
            if any(tuple(p.nodes) == full for p in accepted):
                continue
            root_dist = sum(1.0 - abs(graph.edges[(a, b)]) for a, b in zip(root, root[1:]))
            candidates[full] = root_dist + spur_dist
        if not candidates:
            break
        best = min(candidates, key=lambda p: (candidates[p], len(p), p))
        dist = candidates.pop(best)
        strengths = [graph.edges[(a, b)] for a, b in zip(best, best[1:])]
        accepted.append(PropagationPath(nodes=list(best), strengths=strengths, distance=dist, reachable=True))
    return accepted


def layered_layout(paths: list[PropagationPath]) -> dict[int, int]:
    """BFS depth from the shared source over the union of the given paths.

    Nodes at equal depth are callers' to sort; the layer index is the draw
    column in a left-to-right propagation view.
    """
    if not paths or not paths[0].nodes:
        return {}
    source = paths[0].nodes[0]
    edges: dict[int, set[int]] = {}
    for p in paths:
        for a, b in zip(p.nodes, p.nodes[1:]):
            edges.setdefault(a, set()).add(b)
    layers = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(edges.get(u, ())):
                if v not in layers:
                    layers[v] = layers[u] + 1
                    nxt.append(v)
        frontier = nxt
    return layers


def influence_graph(hg: DirectedHypergraph) -> CausalGraph:
    """Propagation graph with combined causes expanded through pseudo-nodes.

    Size-1 edges map directly.  A hyperedge of size >= 2 becomes a tied
    pseudo-node: each member reaches it at distance 0 (strength 1), and it
    reaches the effect with the hyperedge's strength, so the combined hop
    costs the same as an individual edge of equal strength.
    """
    names = list(hg.nodes)
    pos = {n: i for i, n in enumerate(names)}
    edges: dict[tuple[int, int], float] = {}
    for e in hg.edges:
        if len(e.causes) == 1:
            edges[(pos[e.causes[0]], pos[e.effect])] = e.strength
    for e in hg.edges:
        if len(e.causes) < 2:
            continue
        pseudo = tied_name(e.causes)
        while pseudo in pos:  # a real node may already carry the tied name
            pseudo += "'"
        pos[pseudo] = len(names)
        names.append(pseudo)
        for member in e.causes:
            edges[(pos[member], pos[pseudo])] = 1.0
        edges[(pos[pseudo], pos[e.effect])] = e.strength
    magnitudes = [abs(s) for s in edges.values()]
    return CausalGraph(names=names, edges=edges, threshold=min(magnitudes) if magnitudes else 1e-9)
