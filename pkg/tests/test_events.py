"""Corpus ingestion, filtering, co-occurrence, and histogram behavior."""

import numpy as np
import pytest

from causeloom.events import (
    Corpus,
    CorpusFormatError,
    cooccurrence_counts,
    filter_top_entities,
    occurrence_histogram,
    parse_corpus,
    serialize_corpus,
)

from conftest import corpus_from, random_corpus


class TestParseCorpus:
    def test_single_line_with_horizon(self):
        text = '{"horizon": 1.0}\n{"seq":"s1","entity":"a","t":0.5}\n'
        corpus = parse_corpus(text)
        assert corpus.num_entities == 1
        assert len(corpus.sequences) == 1
        seq = corpus.sequences[0]
        assert seq.horizon == 1.0
        assert [(e.entity, e.time) for e in seq.events] == [(0, 0.5)]

    def test_horizon_defaults_to_max_event_time(self):
        corpus = parse_corpus('{"seq":"s","entity":"a","t":2.5}\n{"seq":"s","entity":"a","t":1.0}\n')
        assert corpus.sequences[0].horizon == 2.5

    def test_events_sorted_with_stable_ties(self):
        text = (
            '{"seq":"s","entity":"a","t":1.0}\n'
            '{"seq":"s","entity":"b","t":1.0}\n'
            '{"seq":"s","entity":"c","t":0.5}\n'
        )
        corpus = parse_corpus(text)
        got = [(e.entity, e.time) for e in corpus.sequences[0].events]
        # c first; the two t=1.0 events keep input order (a before b)
        assert got == [(2, 0.5), (0, 1.0), (1, 1.0)]

    def test_entity_ids_dense_first_appearance(self):
        corpus = parse_corpus(
            '{"seq":"s","entity":"z","t":0.1}\n{"seq":"s","entity":"a","t":0.2}\n'
        )
        assert corpus.names == ["z", "a"]
        assert [e.id for e in corpus.entities] == [0, 1]

    def test_negative_timestamp_reports_line(self):
        text = '{"seq":"s","entity":"a","t":0.5}\n{"seq":"s","entity":"b","t":-1}\n'
        with pytest.raises(CorpusFormatError, match="negative timestamp at line 2"):
            parse_corpus(text)

    def test_malformed_line_reports_line(self):
        with pytest.raises(CorpusFormatError, match="line 1"):
            parse_corpus("not json\n")

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusFormatError, match="empty corpus"):
            parse_corpus("")

    def test_event_beyond_declared_horizon_rejected(self):
        text = '{"horizon": 1.0}\n{"seq":"s","entity":"a","t":2.0}\n'
        with pytest.raises(CorpusFormatError):
            parse_corpus(text)

    def test_csv_parse(self):
        corpus = parse_corpus("seq,entity,t\ns1,a,0.5\ns1,b,0.7\n", format="csv")
        assert corpus.num_entities == 2
        assert corpus.total_events() == 2

    def test_roundtrip_200_random_corpora(self, rng):
        # parser-canonical ids (first appearance), then serialize/parse is exact
        for _ in range(200):
            corpus = parse_corpus(serialize_corpus(random_corpus(rng), format="jsonl"))
            again = parse_corpus(serialize_corpus(corpus, format="jsonl"))
            assert again.to_json() == corpus.to_json()

    def test_csv_roundtrip(self, rng):
        # csv carries no horizon column, so use corpora where horizon = max time
        for _ in range(50):
            base = random_corpus(rng, declared_horizon=False)
            corpus = parse_corpus(serialize_corpus(base, format="csv"), format="csv")
            again = parse_corpus(serialize_corpus(corpus, format="csv"), format="csv")
            assert again.to_json() == corpus.to_json()


class TestFilterTopEntities:
    def test_keeps_k_most_frequent(self):
        corpus = corpus_from([[("a", t) for t in (1, 2, 3, 4, 5)] + [("b", 1), ("b", 2), ("b", 3), ("c", 1)]])
        kept = filter_top_entities(corpus, 2)
        assert kept.names == ["a", "b"]
        assert kept.total_events() == 8

    def test_k_equal_u_is_identity(self):
        corpus = corpus_from([[("a", 1), ("b", 2)]])
        kept = filter_top_entities(corpus, 2)
        assert kept.to_json() == corpus.to_json()

    def test_tie_prefers_smaller_id(self):
        corpus = corpus_from([[("a", 1), ("a", 2), ("b", 3), ("b", 4)]])
        kept = filter_top_entities(corpus, 1)
        assert kept.names == ["a"]

    def test_k_beyond_u_warns_and_keeps_all(self, caplog):
        corpus = corpus_from([[("a", 1)]])
        with caplog.at_level("WARNING"):
            kept = filter_top_entities(corpus, 5)
        assert kept.num_entities == 1
        assert any("keeping all" in r.message for r in caplog.records)

    def test_never_grows_and_size_is_min(self, rng):
        for _ in range(50):
            corpus = random_corpus(rng)
            k = int(rng.integers(1, corpus.num_entities + 1))
            kept = filter_top_entities(corpus, k)
            assert kept.total_events() <= corpus.total_events()
            assert kept.num_entities == min(k, corpus.num_entities)

    def test_empty_sequences_dropped(self):
        corpus = corpus_from([[("a", 1), ("a", 2)], [("b", 1)]])
        kept = filter_top_entities(corpus, 1)
        assert len(kept.sequences) == 1


class TestCooccurrence:
    def test_hand_count(self):
        # window 0.6 pairs: (a@0,b@0.5), (b@0.5,a@1.0) in seq 1; (b@0,a@0.3) in seq 2
        corpus = corpus_from([[("a", 0.0), ("b", 0.5), ("a", 1.0)], [("b", 0.0), ("a", 0.3)]])
        m = cooccurrence_counts(corpus, 0.6)
        assert m.counts[0][1] == 3
        assert m.counts[1][0] == 3

    def test_window_zero_only_simultaneous(self):
        corpus = corpus_from([[("a", 1.0), ("b", 1.0), ("b", 2.0)]])
        m = cooccurrence_counts(corpus, 0.0)
        assert m.counts[0][1] == 1

    def test_single_entity_all_zero(self):
        corpus = corpus_from([[("a", 1.0), ("a", 1.5)]])
        m = cooccurrence_counts(corpus, 5.0)
        assert np.all(np.asarray(m.counts) == 0)

    def test_symmetric_zero_diagonal_window_monotone(self, rng):
        for _ in range(50):
            corpus = random_corpus(rng)
            w = float(rng.uniform(0.1, 3.0))
            small = np.asarray(cooccurrence_counts(corpus, w).counts)
            large = np.asarray(cooccurrence_counts(corpus, 2 * w).counts)
            assert np.array_equal(small, small.T)
            assert np.all(np.diag(small) == 0)
            assert np.all(large >= small)


class TestHistogram:
    def test_hand_binning(self):
        corpus = corpus_from([[("a", 0.1), ("a", 0.5), ("a", 1.5)]], horizon=2.0)
        assert occurrence_histogram(corpus, 0, 1.0).tolist() == [2, 1]

    def test_no_events_all_zero(self):
        corpus = corpus_from([[("a", 0.5)]], horizon=2.0, names=["a", "b"])
        assert occurrence_histogram(corpus, 1, 1.0).tolist() == [0, 0]

    def test_boundary_event_falls_in_second_bin(self):
        corpus = corpus_from([[("a", 1.0)]], horizon=2.0)
        assert occurrence_histogram(corpus, 0, 1.0).tolist() == [0, 1]

    def test_unknown_entity(self):
        corpus = corpus_from([[("a", 0.5)]])
        with pytest.raises(ValueError):
            occurrence_histogram(corpus, 7, 1.0)

    def test_bin_sums_match_entity_counts(self, rng):
        for _ in range(100):
            corpus = random_corpus(rng)
            w = float(rng.uniform(0.3, 4.0))
            counts = corpus.entity_counts()
            for u in range(corpus.num_entities):
                assert occurrence_histogram(corpus, u, w).sum() == counts[u]


class TestCorpusModel:
    def test_validate_rejects_bad_entity_id(self):
        corpus = corpus_from([[("a", 0.5)]])
        bad = Corpus(corpus.entities, corpus.sequences)
        object.__setattr__(bad.sequences[0].events[0], "entity", 9)
        with pytest.raises(ValueError):
            bad.validate()

    def test_json_roundtrip(self, rng):
        corpus = random_corpus(rng)
        assert Corpus.from_json(corpus.to_json()).to_json() == corpus.to_json()
