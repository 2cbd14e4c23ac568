"""Pipeline artifact files and the snapshot bundle the service loads.

Every stage output is plain JSON carrying the stage config echo and sha256
digests of its input files, which is what makes reruns resumable: a stage
whose recorded inputs and config match the current invocation is a no-op.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

from .embeddings import EmbeddingTable
from .events import Corpus
from .hypergraph import DirectedHypergraph
from .ordering import Partition
from .rpp import BasisKernels, CausalGraph, RppParams

SNAPSHOT_FILE = "snapshot.json"
CORPUS_FILE = "corpus.json"
EMBEDDINGS_FILE = "embeddings.json"


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def canonical_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def write_artifact(path: str | Path, kind: str, body: dict, config: dict, inputs: dict[str, str]) -> None:
    payload = {"kind": kind, "config": config, "inputs": inputs, **body}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def read_artifact(path: str | Path, kind: str) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != kind:
        raise ValueError(f"{path} is not a {kind} artifact")
    return payload


def stage_is_current(out_path: str | Path, kind: str, config: dict, inputs: dict[str, str]) -> bool:
    """True when the existing output already reflects these inputs and config."""
    path = Path(out_path)
    if not path.exists():
        return False
    try:
        payload = read_artifact(path, kind)
    except (ValueError, json.JSONDecodeError):
        return False
    return payload.get("config") == config and payload.get("inputs") == inputs


def save_corpus(path, corpus: Corpus, config: dict, inputs: dict[str, str]) -> None:
    write_artifact(path, "corpus", corpus.to_json(), config, inputs)


def load_corpus(path) -> Corpus:
    return Corpus.from_json(read_artifact(path, "corpus"))


def save_embeddings(path, table: EmbeddingTable, config: dict, inputs: dict[str, str]) -> None:
    write_artifact(path, "embeddings", {"table": table.to_json()}, config, inputs)


def load_embeddings(path) -> EmbeddingTable:
    return EmbeddingTable.from_json(read_artifact(path, "embeddings")["table"])


def save_params(path, params: RppParams, kernels: BasisKernels, entities: list[str], config: dict, inputs: dict[str, str]) -> None:
    body = {"params": params.to_json(kernels), "entities": entities}
    write_artifact(path, "params", body, config, inputs)


def load_params(path) -> tuple[RppParams, BasisKernels, list[str]]:
    payload = read_artifact(path, "params")
    params, kernels = RppParams.from_json(payload["params"])
    return params, kernels, list(payload["entities"])


def save_hypergraph(path, hg: DirectedHypergraph, config: dict, inputs: dict[str, str]) -> None:
    write_artifact(path, "hypergraph", {"hypergraph": hg.to_json()}, config, inputs)


def load_hypergraph(path) -> DirectedHypergraph:
    return DirectedHypergraph.from_json(read_artifact(path, "hypergraph")["hypergraph"])


@dataclass
class Snapshot:
    """Everything the service needs to answer queries without refitting."""

    corpus: Corpus
    table: EmbeddingTable
    graph: CausalGraph
    hypergraph: DirectedHypergraph
    partition: Partition
    config: dict
    created_at: float
    corpus_digest: str
    embeddings_digest: str


def write_snapshot(
    bundle_dir: str | Path,
    corpus: Corpus,
    table: EmbeddingTable,
    graph: CausalGraph,
    hypergraph: DirectedHypergraph,
    partition: Partition,
    config: dict,
    created_at: float | None = None,
) -> Path:
    bundle = Path(bundle_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    (bundle / CORPUS_FILE).write_text(canonical_dumps(corpus.to_json()) + "\n", encoding="utf-8")
    (bundle / EMBEDDINGS_FILE).write_text(canonical_dumps(table.to_json()) + "\n", encoding="utf-8")
    head = {
        "created_at": created_at if created_at is not None else time.time(),
        "config": config,
        "corpus_digest": file_digest(bundle / CORPUS_FILE),
        "embeddings_digest": file_digest(bundle / EMBEDDINGS_FILE),
        "graph": graph.to_json(),
        "hypergraph": hypergraph.to_json(),
        "partition": partition.to_json(),
    }
    (bundle / SNAPSHOT_FILE).write_text(json.dumps(head, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return bundle


def load_snapshot(bundle_dir: str | Path) -> Snapshot:
    bundle = Path(bundle_dir)
    head = json.loads((bundle / SNAPSHOT_FILE).read_text(encoding="utf-8"))
    for name, digest in ((CORPUS_FILE, head["corpus_digest"]), (EMBEDDINGS_FILE, head["embeddings_digest"])):
        actual = file_digest(bundle / name)
        if actual != digest:
            raise ValueError(f"snapshot bundle corrupt: {name} digest mismatch")
    corpus = Corpus.from_json(json.loads((bundle / CORPUS_FILE).read_text(encoding="utf-8")))
    table = EmbeddingTable.from_json(json.loads((bundle / EMBEDDINGS_FILE).read_text(encoding="utf-8")))
    return Snapshot(
        corpus=corpus,
        table=table,
        graph=CausalGraph.from_json(head["graph"]),
        hypergraph=DirectedHypergraph.from_json(head["hypergraph"]),
        partition=Partition.from_json(head["partition"]),
        config=head["config"],
        created_at=float(head["created_at"]),
        corpus_digest=head["corpus_digest"],
        embeddings_digest=head["embeddings_digest"],
    )
