"""Combined-cause discovery: candidate pruning, filter rules, entity tying.

Candidates of a given size are evaluated against two redundancy principles
(a member that already causes the effect individually, or a superset of an
already discovered combination, explains nothing new), then against a cheap
eliminate rule on pairwise embedding similarity and co-occurrence.  A member
set that survives is tied into a single pseudo-entity, the reduced model is
refit on the rewritten corpus, and the tied entity's voted strength toward
each surviving effect decides whether a hyperedge is emitted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .embeddings import EmbeddingTable, similarity
from .events import CooccurrenceMatrix, Corpus, Entity, Event, EventSequence
from .hypergraph import DirectedHypergraph, make_edge
from .rpp import BasisKernels, CausalGraph, FitConfig, RppParams, causal_strength, fit_detailed

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Combo:
    """A sorted member set proposed as a joint cause of one effect."""

    members: tuple[int, ...]
    effect: int

    def validate(self) -> None:
        if len(self.members) < 2:
            raise ValueError("a combination needs at least two members")
        if tuple(sorted(set(self.members))) != self.members:
            raise ValueError("members must be sorted and distinct")
        if self.effect in self.members:
            raise ValueError("effect cannot be a member")


@dataclass
class ComboRuleConfig:
    """Search budget, filter thresholds, and the tie window.

    Recruit thresholds may not be laxer than the eliminate thresholds; the
    recruit rule exists to pull exceptionally coherent member sets back out
    of the filtered pool, not to reopen it wholesale.
    """

    max_size: int = 3
    min_similarity: float = 0.1
    min_cooccurrence: float = 3.0
    recruit_similarity: float = 0.6
    recruit_cooccurrence: float = 10.0
    tie_window: float = 1.0

    def validate(self) -> None:
        if self.max_size < 1:
            raise ValueError("max_size must be at least 1")
        if self.recruit_similarity < self.min_similarity:
            raise ValueError("recruit similarity below eliminate similarity")
        if self.recruit_cooccurrence < self.min_cooccurrence:
            raise ValueError("recruit co-occurrence below eliminate co-occurrence")
        if self.tie_window < 0:
            raise ValueError("tie window must be nonnegative")


@dataclass
class FilterSet:
    """Member sets currently filtered out of the search."""

    combos: set[Combo] = field(default_factory=set)

    def member_sets(self) -> set[tuple[int, ...]]:
        return {c.members for c in self.combos}


def candidate_combos(graph: CausalGraph, discovered: DirectedHypergraph | None, effect: int, size: int) -> list[Combo]:
    """Size-``size`` member sets for one effect, after redundancy pruning.

    Excluded: the effect itself, any set containing an existing individual
    cause of the effect, and any superset of a combination already discovered
    for the effect.  Without pruning the count is C(U - 1, size).
    """
    U = graph.num_entities
    if not 0 <= effect < U:
        raise ValueError(f"unknown entity id {effect}")
    if size < 2:
        raise ValueError("combination size must be at least 2")
    singles = graph.individual_causes(effect)
    prior: list[frozenset[int]] = []
    if discovered is not None:
        pos = {n: i for i, n in enumerate(discovered.nodes)}
        effect_name = graph.names[effect]
        for e in discovered.edges:
            if e.effect == effect_name and len(e.causes) >= 2:
                ids = frozenset(pos[c] for c in e.causes if c in pos)
                prior.append(ids)
    out = []
    pool = [u for u in range(U) if u != effect]
    for members in combinations(pool, size):
        if any(m in singles for m in members):
            continue
        mset = frozenset(members)
        if any(p <= mset for p in prior):
            continue
        out.append(Combo(members=members, effect=effect))
    return out


def _pairwise_mins(members, table: EmbeddingTable, cooc: CooccurrenceMatrix) -> tuple[float, float]:
    sims = [similarity(table, u, v) for u, v in combinations(members, 2)]
    counts = [cooc.of(u, v) for u, v in combinations(members, 2)]
    return min(sims), float(min(counts))


def eliminate_rule(combo: Combo, table: EmbeddingTable, cooc: CooccurrenceMatrix, config: ComboRuleConfig) -> bool:
    """True when the member set should be filtered out (boundary keeps)."""
    min_sim, min_cooc = _pairwise_mins(combo.members, table, cooc)
    return min_sim < config.min_similarity or min_cooc < config.min_cooccurrence


def recruit_rule(combo: Combo, table: EmbeddingTable, cooc: CooccurrenceMatrix, config: ComboRuleConfig) -> bool:
    """True when a filtered member set is coherent enough to take back."""
    min_sim, min_cooc = _pairwise_mins(combo.members, table, cooc)
    return min_sim >= config.recruit_similarity and min_cooc >= config.recruit_cooccurrence


def tied_name(names) -> str:
    return "⟨" + "∧".join(names) + "⟩"


def tie_entities(corpus: Corpus, members, window: float) -> Corpus:
    """Rewrite the corpus with the member entities merged into one.

    Greedy left to right: each member keeps only its latest unconsumed event
    pending; when every member is pending within the window, one tied event
    is emitted at the latest member time and the pendings are consumed.
    Member events never consumed are dropped.  The new vocabulary is the
    survivors (dense, original order) plus the tied entity appended last.
    """
    members = tuple(sorted({int(m) for m in (members.members if isinstance(members, Combo) else members)}))
    if len(members) < 2:
        raise ValueError("a combination needs at least two members")
    for m in members:
        if not 0 <= m < corpus.num_entities:
            raise ValueError(f"unknown entity id {m}")
    member_set = set(members)
    survivors = [u for u in range(corpus.num_entities) if u not in member_set]
    remap = {old: new for new, old in enumerate(survivors)}
    tied_id = len(survivors)
    name = tied_name(corpus.entities[m].name for m in members)

    sequences = []
    for seq in corpus.sequences:
        pending: dict[int, float] = {}
        events: list[Event] = []
        for ev in seq.events:
            if ev.entity in member_set:
                pending[ev.entity] = ev.time
                if len(pending) == len(members) and ev.time - min(pending.values()) <= window:
                    events.append(Event(tied_id, ev.time))
                    pending.clear()
            else:
                events.append(Event(remap[ev.entity], ev.time))
        sequences.append(EventSequence(seq.id, events, seq.horizon))

    entities = [Entity(remap[u], corpus.entities[u].name) for u in survivors]
    entities.append(Entity(tied_id, name))
    return Corpus(entities, sequences)


def discover_combined(
    corpus: Corpus,
    graph: CausalGraph,
    table: EmbeddingTable,
    cooc: CooccurrenceMatrix,
    rules: ComboRuleConfig,
    fit_config: FitConfig,
    kernels: BasisKernels,
    base_params: RppParams | None = None,
    filtered: FilterSet | None = None,
) -> DirectedHypergraph:
    """Search combination sizes 2..max_size and emit the hypergraph.

    Individual edges from the base graph come along as size-1 hyperedges
    (self-influence stays in the graph but cannot be a hyperedge).  A member
    set is refit once per size level and scored against every effect it
    remains a candidate for; emission reuses the base graph's threshold.
    """
    rules.validate()
    fit_config.validate()
    filtered = filtered if filtered is not None else FilterSet()
    names = graph.names
    edges = [
        make_edge((names[u],), names[v], s, size_level=1)
        for (u, v), s in sorted(graph.edges.items())
        if u != v
    ]
    hg = DirectedHypergraph(nodes=list(names), edges=edges)

    for size in range(2, rules.max_size + 1):
        by_members: dict[tuple[int, ...], list[int]] = {}
        for effect in range(graph.num_entities):
            for combo in candidate_combos(graph, hg, effect, size):
                by_members.setdefault(combo.members, []).append(effect)

        filtered_members = filtered.member_sets()
        for members in sorted(by_members):
            effects = sorted(by_members[members])
            probes = [Combo(members, e) for e in effects]
            was_filtered = members in filtered_members
            recruited = False
            if was_filtered:
                if recruit_rule(probes[0], table, cooc, rules):
                    recruited = True
                    filtered.combos = {c for c in filtered.combos if c.members != members}
                else:
                    continue
            elif eliminate_rule(probes[0], table, cooc, rules):
                filtered.combos.update(probes)
                continue

            reduced = tie_entities(corpus, members, rules.tie_window)
            if reduced.total_events() == 0:
                continue
            mu_start = None
            if base_params is not None:
                survivors = [u for u in range(corpus.num_entities) if u not in members]
                tied_count = sum(1 for s in reduced.sequences for e in s.events if e.entity == len(survivors))
                total_time = sum(s.horizon for s in reduced.sequences)
                mu_start = np.append(base_params.mu[survivors], tied_count / max(total_time, 1e-12))
            try:
                refit = fit_detailed(reduced, kernels, fit_config, mu_start=mu_start).params
            except ValueError as exc:
                raise RuntimeError(
                    f"refit failed for combination {[names[m] for m in members]}: {exc}"
                ) from exc

            tied_id = reduced.num_entities - 1
            reduced_pos = {n: i for i, n in enumerate(reduced.names)}
            for effect in effects:
                strength = causal_strength(
                    refit, tied_id, reduced_pos[names[effect]], fit_config.sign_tolerance
                )
                if abs(strength) >= graph.threshold:
                    hg.edges.append(
                        make_edge(
                            tuple(names[m] for m in members),
                            names[effect],
                            strength,
                            size_level=size,
                            recruited=recruited,
                        )
                    )
                    logger.info(
                        "combined cause %s -> %s at %.3f (size %d)",
                        [names[m] for m in members],
                        names[effect],
                        strength,
                        size,
                    )
    hg.validate()
    return hg
