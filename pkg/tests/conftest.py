"""Shared builders for compact hand-checkable fixtures."""

import numpy as np
import pytest

from causeloom.events import Corpus, Entity, Event, EventSequence


def corpus_from(spec, horizon=None, names=None):
    """Build a corpus from [[(entity_name, time), ...], ...].

    Entity ids follow first appearance across sequences, matching the parser.
    """
    name_to_id = {}
    if names:
        for n in names:
            name_to_id[n] = len(name_to_id)
    for seq in spec:
        for name, _ in seq:
            if name not in name_to_id:
                name_to_id[name] = len(name_to_id)
    sequences = []
    for i, seq in enumerate(spec):
        events = [Event(name_to_id[n], float(t)) for n, t in sorted(seq, key=lambda p: p[1])]
        h = horizon if horizon is not None else (max(t for _, t in seq) if seq else 1.0)
        sequences.append(EventSequence(id=f"s{i}", events=events, horizon=float(h)))
    entities = [Entity(i, n) for n, i in sorted(name_to_id.items(), key=lambda p: p[1])]
    return Corpus(entities, sequences)


def random_corpus(rng, max_entities=6, max_sequences=5, max_events=12, horizon=10.0, declared_horizon=True):
    U = int(rng.integers(1, max_entities + 1))
    names = [f"e{u}" for u in range(U)]
    spec = []
    for _ in range(int(rng.integers(1, max_sequences + 1))):
        n = int(rng.integers(1, max_events + 1))
        spec.append([(names[int(rng.integers(0, U))], float(rng.uniform(0, horizon))) for _ in range(n)])
    return corpus_from(spec, horizon=horizon if declared_horizon else None, names=names)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
