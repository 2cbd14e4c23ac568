"""Entity embeddings via skip-gram with negative sampling over event streams.

Each sequence is read as a token stream of entity ids in time order; context
is positional (a radius counted in events, not in time).  Training is plain
numpy SGD, single threaded, and fully determined by the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .events import Corpus


@dataclass
class SkipGramConfig:
    dimension: int = 32
    radius: int = 2
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.dimension < 1 or self.radius < 1 or self.negatives < 0 or self.epochs < 1:
            raise ValueError("invalid skip-gram config")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class EmbeddingTable:
    """Trained vectors, one row per entity id, plus the entity names."""

    names: list[str]
    vectors: np.ndarray  # (U, D)

    def to_json(self) -> dict:
        return {name: [float(x) for x in self.vectors[i]] for i, name in enumerate(self.names)}

    @classmethod
    def from_json(cls, blob: dict) -> "EmbeddingTable":
        names = list(blob)
        vectors = np.array([blob[n] for n in names], dtype=float)
        return cls(names, vectors)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_embeddings(corpus: Corpus, config: SkipGramConfig | None = None) -> EmbeddingTable:
    """Train entity vectors on the corpus streams.

    Negatives are drawn from the unigram distribution raised to 3/4.  The
    vocabulary must have at least two entities: with one entity there is no
    similarity to speak of.
    """
    config = config or SkipGramConfig()
    config.validate()
    U = corpus.num_entities
    if U < 2:
        raise ValueError("similarity undefined for one entity")
    if corpus.total_events() == 0:
        raise ValueError("empty corpus")

    counts = corpus.entity_counts().astype(float)
    noise = counts**0.75
    total = noise.sum()
    if total == 0:
        raise ValueError("empty corpus")
    noise /= total

    rng = np.random.default_rng(config.seed)
    D = config.dimension
    w_in = (rng.random((U, D)) - 0.5) / D
    w_out = np.zeros((U, D))

    streams = [seq.entities() for seq in corpus.sequences if len(seq.events) > 0]
    lr = config.learning_rate
    for _ in range(config.epochs):
        for stream in streams:
            n = len(stream)
            for i in range(n):
                center = stream[i]
                lo = max(0, i - config.radius)
                hi = min(n, i + config.radius + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    ctx = stream[j]
                    targets = np.empty(1 + config.negatives, dtype=np.int64)
                    targets[0] = ctx
                    targets[1:] = rng.choice(U, size=config.negatives, p=noise)
                    labels = np.zeros(len(targets))
                    labels[0] = 1.0
                    # resampled-as-positive negatives would cancel the update; drop them
                    keep = np.ones(len(targets), dtype=bool)
                    keep[1:] = targets[1:] != ctx
                    targets, labels = targets[keep], labels[keep]

                    v_in = w_in[center]
                    z = w_out[targets] @ v_in
                    g = (_sigmoid(z) - labels) * lr
                    grad_in = g @ w_out[targets]
                    w_out[targets] -= g[:, None] * v_in
                    w_in[center] = v_in - grad_in

    return EmbeddingTable(corpus.names, w_in)


def similarity(table: EmbeddingTable, u: int, v: int) -> float:
    """Cosine similarity between two entity vectors, in [-1, 1]."""
    for idx in (u, v):
        if not 0 <= idx < len(table.names):
            raise ValueError(f"unknown entity id {idx}")
    a, b = table.vectors[u], table.vectors[v]
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        raise ValueError("untrained entity")
    return float(np.dot(a, b) / (na * nb))


def similarity_matrix(table: EmbeddingTable) -> np.ndarray:
    norms = np.linalg.norm(table.vectors, axis=1)
    if np.any(norms == 0):
        raise ValueError("untrained entity")
    unit = table.vectors / norms[:, None]
    return np.clip(unit @ unit.T, -1.0, 1.0)
