"""Tests for artifact files, resumability checks, and the snapshot bundle."""

import json

import numpy as np
import pytest

from conftest import corpus_from

from causeloom.artifacts import (
    file_digest,
    load_corpus,
    load_embeddings,
    load_hypergraph,
    load_params,
    load_snapshot,
    read_artifact,
    save_corpus,
    save_embeddings,
    save_hypergraph,
    save_params,
    stage_is_current,
    write_artifact,
    write_snapshot,
)
from causeloom.embeddings import EmbeddingTable
from causeloom.hypergraph import DirectedHypergraph, make_edge
from causeloom.ordering import Partition
from causeloom.rpp import BasisKernels, CausalGraph, RppParams


def small_corpus():
    return corpus_from([[("a", 1.0), ("b", 2.5)], [("b", 0.5)]], horizon=5.0, names=["a", "b"])


def small_params():
    kernels = BasisKernels(centers=np.array([0.0, 1.0]), sigma=0.5, cutoff=2.0)
    params = RppParams(
        mu=np.array([0.4, 0.2]),
        a=np.full((2, 2, 2), 0.1),
        b=np.full((2, 2, 2), -0.05),
    )
    return params, kernels


class TestArtifactFiles:
    def test_round_trip_keeps_body_config_and_inputs(self, tmp_path):
        path = tmp_path / "out.json"
        write_artifact(path, "thing", {"x": [1, 2]}, config={"k": 3}, inputs={"in": "ab" * 32})
        payload = read_artifact(path, "thing")
        assert payload["x"] == [1, 2]
        assert payload["config"] == {"k": 3}
        assert payload["inputs"] == {"in": "ab" * 32}

    def test_kind_mismatch_rejected(self, tmp_path):
        path = tmp_path / "out.json"
        write_artifact(path, "thing", {}, config={}, inputs={})
        with pytest.raises(ValueError, match="not a widget"):
            read_artifact(path, "widget")

    def test_stage_current_only_on_exact_match(self, tmp_path):
        path = tmp_path / "out.json"
        config, inputs = {"k": 3}, {"in": "x"}
        assert not stage_is_current(path, "thing", config, inputs)
        write_artifact(path, "thing", {}, config, inputs)
        assert stage_is_current(path, "thing", config, inputs)
        assert not stage_is_current(path, "thing", {"k": 4}, inputs)
        assert not stage_is_current(path, "thing", config, {"in": "y"})
        assert not stage_is_current(path, "widget", config, inputs)

    def test_stage_not_current_on_garbage_file(self, tmp_path):
        path = tmp_path / "out.json"
        path.write_text("{not json", encoding="utf-8")
        assert not stage_is_current(path, "thing", {}, {})

    def test_digest_is_sha256_of_bytes(self, tmp_path):
        path = tmp_path / "blob"
        path.write_bytes(b"abc")
        assert file_digest(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


class TestTypedArtifacts:
    def test_corpus_round_trip(self, tmp_path):
        path = tmp_path / "corpus.json"
        corpus = small_corpus()
        save_corpus(path, corpus, config={"fmt": "jsonl"}, inputs={})
        assert load_corpus(path).to_json() == corpus.to_json()

    def test_embeddings_round_trip(self, tmp_path):
        path = tmp_path / "emb.json"
        table = EmbeddingTable(names=["a", "b"], vectors=np.array([[0.5, -1.0], [2.0, 0.25]]))
        save_embeddings(path, table, config={}, inputs={})
        back = load_embeddings(path)
        assert back.names == table.names
        assert np.array_equal(back.vectors, table.vectors)

    def test_params_round_trip(self, tmp_path):
        path = tmp_path / "params.json"
        params, kernels = small_params()
        save_params(path, params, kernels, ["a", "b"], config={"seed": 0}, inputs={})
        got_params, got_kernels, entities = load_params(path)
        assert entities == ["a", "b"]
        assert np.array_equal(got_params.mu, params.mu)
        assert np.array_equal(got_params.a, params.a)
        assert np.array_equal(got_params.b, params.b)
        assert np.array_equal(got_kernels.centers, kernels.centers)
        assert got_kernels.sigma == kernels.sigma
        assert got_kernels.cutoff == kernels.cutoff

    def test_hypergraph_round_trip(self, tmp_path):
        path = tmp_path / "hg.json"
        hg = DirectedHypergraph(nodes=["a", "b", "z"], edges=[make_edge(("a", "b"), "z", -0.4)])
        save_hypergraph(path, hg, config={}, inputs={})
        assert load_hypergraph(path).to_json() == hg.to_json()

    def test_wrong_loader_rejects(self, tmp_path):
        path = tmp_path / "corpus.json"
        save_corpus(path, small_corpus(), config={}, inputs={})
        with pytest.raises(ValueError, match="not a params"):
            load_params(path)


def bundle_pieces():
    corpus = small_corpus()
    table = EmbeddingTable(names=["a", "b"], vectors=np.array([[1.0, 0.0], [0.0, 1.0]]))
    graph = CausalGraph(names=["a", "b"], edges={(0, 1): 0.5}, threshold=0.1)
    hg = DirectedHypergraph(nodes=["a", "b"], edges=[make_edge(("a",), "b", 0.5)])
    partition = Partition(communities={0: 0, 1: 0}, modularity=0.0)
    return corpus, table, graph, hg, partition


class TestSnapshotBundle:
    def test_round_trip(self, tmp_path):
        corpus, table, graph, hg, partition = bundle_pieces()
        write_snapshot(tmp_path, corpus, table, graph, hg, partition, config={"run": 1}, created_at=123.0)
        snap = load_snapshot(tmp_path)
        assert snap.corpus.to_json() == corpus.to_json()
        assert snap.table.to_json() == table.to_json()
        assert snap.graph.to_json() == graph.to_json()
        assert snap.hypergraph.to_json() == hg.to_json()
        assert snap.partition.to_json() == partition.to_json()
        assert snap.config == {"run": 1}
        assert snap.created_at == 123.0

    def test_bundle_files_exist_with_digests(self, tmp_path):
        corpus, table, graph, hg, partition = bundle_pieces()
        write_snapshot(tmp_path, corpus, table, graph, hg, partition, config={})
        head = json.loads((tmp_path / "snapshot.json").read_text())
        assert head["corpus_digest"] == file_digest(tmp_path / "corpus.json")
        assert head["embeddings_digest"] == file_digest(tmp_path / "embeddings.json")

    def test_corrupted_member_detected(self, tmp_path):
        corpus, table, graph, hg, partition = bundle_pieces()
        write_snapshot(tmp_path, corpus, table, graph, hg, partition, config={})
        member = tmp_path / "corpus.json"
        member.write_text(member.read_text().replace("2.5", "2.6"), encoding="utf-8")
        with pytest.raises(ValueError, match="corpus.json digest mismatch"):
            load_snapshot(tmp_path)

    def test_rewrite_is_reproducible(self, tmp_path):
        """Writing the same snapshot twice yields byte-identical member files."""
        corpus, table, graph, hg, partition = bundle_pieces()
        write_snapshot(tmp_path / "one", corpus, table, graph, hg, partition, config={"c": 1}, created_at=5.0)
        write_snapshot(tmp_path / "two", corpus, table, graph, hg, partition, config={"c": 1}, created_at=5.0)
        for name in ("snapshot.json", "corpus.json", "embeddings.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
