"""Acceptance checklist: thirteen end-to-end checks with pinned tolerances.

Each check prints one ``criterion N: PASS`` line (run pytest with -s to see
them) and enforces its own runtime ceiling where one applies.  Checks 5-7 and
13 exercise the full simulate-fit-discover loop and dominate the wall time.
"""

import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import corpus_from
from test_hypergraph import random_hypergraph
from test_ordering import all_simple_paths, path_cost, random_graph, two_clique_graph
from test_rpp import finite_difference, random_instance
from test_service import EDGE_AB, EDGE_AC, EDGE_BC, build_bundle

from causeloom.combos import Combo, ComboRuleConfig, candidate_combos, discover_combined, eliminate_rule
from causeloom.embeddings import EmbeddingTable
from causeloom.events import Corpus, Entity, Event, EventSequence, cooccurrence_counts
from causeloom.hypergraph import DirectedHypergraph, aggregate, expand, make_edge
from causeloom.ordering import communities_louvain, order_columns, propagation_path
from causeloom.rpp import (
    BasisKernels,
    CausalGraph,
    FitConfig,
    RppParams,
    build_causal_graph,
    causal_strength,
    fit,
    gradient,
    smoothed,
)
from causeloom.service import ServiceConfig, create_app
from causeloom.simulate import GeneratorConfig, PlantedCombo, simulate, synthesize


def poisson_corpus(rng, entities, rate, horizon, sequences):
    """Homogeneous background traffic: every entity at the same flat rate."""
    seqs = []
    for j in range(sequences):
        events = []
        for u in range(len(entities)):
            times = rng.uniform(0.0, horizon, int(rng.poisson(rate * horizon)))
            events.extend(Event(u, float(t)) for t in times)
        events.sort(key=lambda e: e.time)
        seqs.append(EventSequence(id=f"p{j}", events=events, horizon=float(horizon)))
    return Corpus([Entity(u, n) for u, n in enumerate(entities)], seqs)


def test_01_candidate_counts_are_binomial():
    # 17 candidate entities around one external effect; no prior causes
    names = [f"c{i:02d}" for i in range(17)] + ["effect"]
    graph = CausalGraph(names=names, edges={}, threshold=0.1)
    start = time.perf_counter()
    counts = [len(candidate_combos(graph, None, effect=17, size=k)) for k in (2, 3, 4)]
    elapsed = time.perf_counter() - start
    assert counts == [136, 680, 2380]
    assert elapsed < 1.0
    print(f"criterion 1: PASS (sizes 2/3/4 -> {counts}, {elapsed * 1000:.0f}ms)")


def test_02_eliminate_rule_removes_planted_low_cooccurrence_pairs():
    # ten candidates split into two far-apart time groups per sequence; the
    # group assignment rotates with the sequence index, so consecutive-id
    # pairs (the planted ones) never share a window while same-parity pairs
    # co-occur in every sequence
    names = [f"e{i}" for i in range(10)] + ["H"]
    planted = [(0, 1), (2, 3), (4, 5), (6, 7)]
    spec = [
        [(f"e{i}", (0.0 if (i + k) % 2 == 0 else 10.0) + 0.01 * i) for i in range(10)]
        for k in range(6)
    ]
    corpus = corpus_from(spec, horizon=20.0, names=names)
    cooc = cooccurrence_counts(corpus, window=1.0)
    # identical vectors keep similarity out of the decision
    table = EmbeddingTable(names=names, vectors=np.tile([1.0, 0.0], (len(names), 1)))
    rules = ComboRuleConfig(min_similarity=0.1, min_cooccurrence=3.0)
    graph = CausalGraph(names=names, edges={}, threshold=0.1)

    for u, v in planted:
        assert cooc.of(u, v) == 0
        assert eliminate_rule(Combo((u, v), 10), table, cooc, rules)

    reductions = []
    for size in (2, 3, 4):
        cands = candidate_combos(graph, None, effect=10, size=size)
        kept = [c for c in cands if not eliminate_rule(c, table, cooc, rules)]
        assert len(kept) <= len(cands)
        assert kept, "filtering should prune the search, not wipe it out"
        for combo in kept:
            assert not any(set(pair) <= set(combo.members) for pair in planted)
        reductions.append(f"{len(cands)}->{len(kept)}")
    print(f"criterion 2: PASS (planted pairs 4/4 removed; counts {', '.join(reductions)})")


def test_03_softplus_stays_within_ln2_envelope():
    rng = np.random.default_rng(3)
    for s in (1.0, 0.1, 0.01):
        x = rng.uniform(-30.0 * s, 30.0 * s, 10_000)
        gap = smoothed(x, s) - np.maximum(0.0, x)
        assert np.all(gap > 0.0)
        assert np.all(gap <= s * math.log(2.0))
        assert abs(float(smoothed(0.0, s)) - s * math.log(2.0)) <= 1e-12
    print("criterion 3: PASS (3 scales x 10^4 points inside (0, s*ln2])")


def test_04_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        params, corpus, kernels, config = random_instance(rng)
        got = gradient(params, corpus, kernels, config)
        want = finite_difference(params, corpus, kernels, config)
        for g, w in ((got.mu, want.mu), (got.a, want.a), (got.b, want.b)):
            rel = np.abs(g - w) / np.maximum(np.abs(w), 1.0)
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-4
    assert elapsed < 30.0
    print(f"criterion 4: PASS (worst relative error {worst:.2e} over 50 instances, {elapsed:.1f}s)")


def test_05_flat_poisson_data_recovers_rate_with_sparse_couplings():
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    corpus = poisson_corpus(rng, ["u1", "u2"], rate=2.0, horizon=50.0, sequences=20)
    kernels = BasisKernels.default_for(corpus)
    fitted = fit(corpus, kernels, FitConfig(lasso=0.01))
    elapsed = time.perf_counter() - start

    for u in range(2):
        assert abs(float(fitted.mu[u]) - 2.0) <= 0.2 * 2.0
    mass = float(np.abs(fitted.a).sum() + np.abs(fitted.b).sum())
    assert mass < 0.1 * 2 * 2 * kernels.count
    assert elapsed < 120.0
    print(f"criterion 5: PASS (mu={np.round(fitted.mu, 3).tolist()}, coupling mass {mass:.4f}, {elapsed:.1f}s)")


def test_06_planted_excitation_and_inhibition_signs_recovered():
    start = time.perf_counter()
    kernels = BasisKernels(centers=np.linspace(0.0, 2.0, 3), sigma=2.0 / 3.0, cutoff=2.0)
    truth = RppParams.zeros(2, 3)
    truth.mu[:] = [1.0, 0.5]
    truth.a[1, 0, :] = 0.3   # u1 excites u2
    truth.b[0, 1, :] = -0.4  # u2 inhibits u1
    wins = 0
    for seed in range(10):
        root = np.random.default_rng(seed)
        seqs = []
        for j in range(40):
            drawn = simulate(truth, kernels, 30.0, int(root.integers(2**31 - 1)))
            seqs.append(EventSequence(id=f"t{j}", events=drawn.events, horizon=drawn.horizon))
        corpus = Corpus([Entity(0, "u1"), Entity(1, "u2")], seqs)
        fitted = fit(corpus, kernels, FitConfig(mc_samples=300, max_iterations=150, seed=seed))
        if causal_strength(fitted, 0, 1) > 0 and causal_strength(fitted, 1, 0) < 0:
            wins += 1
    elapsed = time.perf_counter() - start
    assert wins >= 8
    assert elapsed < 600.0
    print(f"criterion 6: PASS (signs correct in {wins}/10 seeds, {elapsed:.0f}s)")


def test_07_joint_cause_discovered_without_individual_edges():
    start = time.perf_counter()
    theta = 0.1
    kernels = BasisKernels(centers=np.linspace(0.0, 2.0, 3), sigma=2.0 / 3.0, cutoff=2.0)
    wins = 0
    for seed in range(10):
        gen = GeneratorConfig(
            entities=["b", "c", "H", "d"],
            base_rate=0.35,
            effect_rate=0.03,
            combos=[PlantedCombo(("b", "c"), "H", 0.9)],
            window=1.0,
            horizon=60.0,
            sequences=40,
            seed=seed,
        )
        corpus, _ = synthesize(gen)
        config = FitConfig(mc_samples=300, max_iterations=120, seed=seed)
        base = fit(corpus, kernels, config)
        graph = build_causal_graph(base, threshold=theta, names=corpus.names)
        # filters wide open: discovery is what is under test here
        table = EmbeddingTable(names=corpus.names, vectors=np.ones((corpus.num_entities, 2)))
        cooc = cooccurrence_counts(corpus, window=1.0)
        rules = ComboRuleConfig(
            max_size=2,
            min_similarity=-1.0,
            min_cooccurrence=0.0,
            recruit_similarity=-1.0,
            recruit_cooccurrence=0.0,
            tie_window=1.0,
        )
        hg = discover_combined(corpus, graph, table, cooc, rules, config, kernels, base_params=base)
        found = {(e.causes, e.effect) for e in hg.edges}
        joint = (("b", "c"), "H") in found
        solo = (("b",), "H") in found or (("c",), "H") in found
        if joint and not solo:
            wins += 1
    elapsed = time.perf_counter() - start
    assert wins >= 8
    assert elapsed < 900.0
    print(f"criterion 7: PASS (joint-only recovery in {wins}/10 seeds at theta={theta}, {elapsed:.0f}s)")


def test_08_aggregation_round_trips_and_fixture_groups():
    rng = np.random.default_rng(88)
    for _ in range(1000):
        hg = random_hypergraph(rng)
        rebuilt = expand(aggregate(hg), nodes=list(hg.nodes))
        assert rebuilt.nodes == hg.nodes
        want = {(e.causes, e.effect): e.strength for e in hg.edges}
        got = {(e.causes, e.effect): e.strength for e in rebuilt.edges}
        assert got == want

    # four independent causes collapse into a single all-OR column
    fan_in = DirectedHypergraph(
        nodes=["A", "B", "C", "D", "E"],
        edges=[
            make_edge(("B",), "A", 0.8),
            make_edge(("C",), "A", 0.6),
            make_edge(("D",), "A", -0.5),
            make_edge(("E",), "A", 0.9),
        ],
    )
    groups = aggregate(fan_in)
    assert len(groups) == 1
    assert groups[0].and_core == ()
    assert groups[0].or_set == ("B", "C", "D", "E")
    assert groups[0].effect == "A"

    # one shared member with four alternatives keeps the shared one as core
    shared = DirectedHypergraph(
        nodes=["A", "F", "G", "H", "I", "J"],
        edges=[
            make_edge(("F", "G"), "A", 0.7),
            make_edge(("F", "H"), "A", 0.5),
            make_edge(("F", "I"), "A", -0.4),
            make_edge(("F", "J"), "A", 0.6),
        ],
    )
    groups = aggregate(shared)
    assert len(groups) == 1
    assert groups[0].and_core == ("F",)
    assert groups[0].or_set == ("G", "H", "I", "J")
    assert groups[0].effect == "A"
    print("criterion 8: PASS (1000 round trips; fan-in and shared-core fixtures exact)")


def test_09_column_ordering_contracts():
    rng = np.random.default_rng(99)
    checked = {"strength": 0, "degree": 0, "topology": 0}
    while min(checked.values()) < 200:
        hg = random_hypergraph(rng)
        groups = aggregate(hg)
        if not groups:
            continue
        ids = {n: i for i, n in enumerate(hg.nodes)}
        by_id = {g.id: g for g in groups}

        perm = order_columns(groups, "strength", ids).permutation
        mags = [by_id[gid].max_magnitude() for gid in perm]
        assert all(x >= y for x, y in zip(mags, mags[1:]))
        checked["strength"] += 1

        perm = order_columns(groups, "degree", ids).permutation
        degrees = [by_id[gid].degree() for gid in perm]
        assert degrees == sorted(degrees)
        checked["degree"] += 1

        focus = hg.nodes[int(rng.integers(len(hg.nodes)))]
        perm = order_columns(groups, "topology", ids, focus=focus).permutation

        def block(g):
            if g.touches_as_cause(focus):
                return 0
            return 1 if g.effect == focus else 2

        blocks = [block(by_id[gid]) for gid in perm]
        assert blocks == sorted(blocks), "focus blocks must form contiguous prefixes"
        checked["topology"] += 1
    print("criterion 9: PASS (200 random fixtures per strategy)")


def test_10_propagation_matches_exhaustive_minimum():
    rng = np.random.default_rng(1010)
    for _ in range(500):
        graph = random_graph(rng, max_nodes=8)
        U = graph.num_entities
        source, target = int(rng.integers(U)), int(rng.integers(U))
        result = propagation_path(graph, source, target)
        paths = all_simple_paths(graph, source, target)
        if not paths:
            assert not result.reachable
            continue
        best = min(path_cost(graph, p) for p in paths)
        assert result.reachable
        assert result.distance == pytest.approx(best, abs=1e-9)
        assert path_cost(graph, result.nodes) == pytest.approx(result.distance, abs=1e-9)
    print("criterion 10: PASS (500 random graphs, shortest distances all match)")


def test_11_louvain_improves_monotonically_and_splits_cliques():
    rng = np.random.default_rng(1111)
    for _ in range(30):
        graph = random_graph(rng)
        part = communities_louvain(graph, seed=int(rng.integers(1000)))
        assert all(b >= a - 1e-12 for a, b in zip(part.history, part.history[1:]))

    part = communities_louvain(two_clique_graph(), seed=0)
    assert len(set(part.communities.values())) == 2
    assert {part.communities[u] for u in range(4)} == {0}
    assert {part.communities[u] for u in range(4, 8)} == {1}
    assert part.modularity > 0.3
    print(f"criterion 11: PASS (passes monotone; two cliques split at Q={part.modularity:.4f})")


def test_12_journal_replay_reproduces_graph_bitwise(tmp_path):
    build_bundle(tmp_path)
    config = ServiceConfig(snapshot_dir=str(tmp_path))

    client = TestClient(create_app(config))
    before = client.get("/api/graph").content
    for body in (
        {"edge_id": EDGE_AB, "action": "flip_sign"},
        {"edge_id": EDGE_BC, "action": "set_strength", "value": 0.45},
        {"edge_id": EDGE_AC, "action": "delete"},
    ):
        assert client.post("/api/amendments", json=body).status_code == 200
    pre_kill = client.get("/api/graph").content
    assert pre_kill != before
    del client  # nothing carries over but the snapshot and the journal file

    revived = TestClient(create_app(ServiceConfig(snapshot_dir=str(tmp_path))))
    assert revived.get("/api/graph").content == pre_kill
    print("criterion 12: PASS (restarted service serves a bitwise-equal graph)")


def test_13_one_fit_iteration_at_desk_scale():
    rng = np.random.default_rng(7)
    corpus = poisson_corpus(rng, [f"s{u}" for u in range(9)], rate=0.5, horizon=40.0, sequences=199)
    kernels = BasisKernels.default_for(corpus)
    start = time.perf_counter()
    fit(corpus, kernels, FitConfig(max_iterations=1))
    elapsed = time.perf_counter() - start
    assert elapsed <= 50.0
    print(
        f"criterion 13: PASS (9 entities / 199 sequences / {corpus.total_events()} events, "
        f"one iteration in {elapsed:.1f}s)"
    )
