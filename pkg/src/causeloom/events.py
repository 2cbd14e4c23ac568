"""Event-sequence corpus: ingest, filtering, co-occurrence counting, histograms.

A corpus is a set of independently observed event sequences over one shared
entity vocabulary.  Entity ids are dense ints assigned in order of first
appearance; every event carries the entity id and a nonnegative timestamp, and
every sequence carries an observation horizon that bounds its event times.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)


class CorpusFormatError(ValueError):
    """Input stream violates the corpus wire format."""


@dataclass(frozen=True)
class Entity:
    """Dense id plus the stable external name."""

    id: int
    name: str


@dataclass(frozen=True)
class Event:
    entity: int
    time: float


@dataclass
class EventSequence:
    """One observed stream.

    Attributes:
        id: external sequence key, unique within the corpus.
        events: time-sorted (stable for ties, input order preserved).
        horizon: observation window length; every event time is <= horizon.
    """

    id: str
    events: list[Event] = field(default_factory=list)
    horizon: float = 0.0

    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.events], dtype=float)

    def entities(self) -> np.ndarray:
        return np.array([e.entity for e in self.events], dtype=np.int64)


@dataclass
class Corpus:
    entities: list[Entity]
    sequences: list[EventSequence]

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entities]

    def id_of(self, name: str) -> int:
        for e in self.entities:
            if e.name == name:
                return e.id
        raise ValueError(f"unknown entity name {name!r}")

    def total_events(self) -> int:
        return sum(len(s.events) for s in self.sequences)

    def entity_counts(self) -> np.ndarray:
        counts = np.zeros(self.num_entities, dtype=np.int64)
        for seq in self.sequences:
            for ev in seq.events:
                counts[ev.entity] += 1
        return counts

    def max_horizon(self) -> float:
        return max((s.horizon for s in self.sequences), default=0.0)

    def validate(self) -> None:
        if not self.sequences or self.total_events() == 0:
            raise CorpusFormatError("empty corpus")
        for i, ent in enumerate(self.entities):
            if ent.id != i:
                raise CorpusFormatError(f"entity ids not dense at {ent}")
        names = [e.name for e in self.entities]
        if len(set(names)) != len(names):
            raise CorpusFormatError("duplicate entity names")
        seen = set()
        for seq in self.sequences:
            if seq.id in seen:
                raise CorpusFormatError(f"duplicate sequence id {seq.id!r}")
            seen.add(seq.id)
            if seq.horizon <= 0:
                raise CorpusFormatError(f"sequence {seq.id!r} has nonpositive horizon")
            last = 0.0
            for ev in seq.events:
                if not 0 <= ev.entity < self.num_entities:
                    raise CorpusFormatError(f"event entity {ev.entity} out of range")
                if ev.time < 0:
                    raise CorpusFormatError(f"negative timestamp in sequence {seq.id!r}")
                if ev.time < last:
                    raise CorpusFormatError(f"sequence {seq.id!r} not time-sorted")
                if ev.time > seq.horizon:
                    raise CorpusFormatError(
                        f"event at t={ev.time} exceeds horizon {seq.horizon} in sequence {seq.id!r}"
                    )
                last = ev.time

    def to_json(self) -> dict:
        return {
            "entities": self.names,
            "sequences": [
                {
                    "id": s.id,
                    "horizon": s.horizon,
                    "events": [[e.entity, e.time] for e in s.events],
                }
                for s in self.sequences
            ],
        }

    @classmethod
    def from_json(cls, blob: dict) -> "Corpus":
        entities = [Entity(i, n) for i, n in enumerate(blob["entities"])]
        sequences = [
            EventSequence(
                id=s["id"],
                events=[Event(int(u), float(t)) for u, t in s["events"]],
                horizon=float(s["horizon"]),
            )
            for s in blob["sequences"]
        ]
        corpus = cls(entities, sequences)
        corpus.validate()
        return corpus


def _as_text(source) -> str:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


def _build(rows: list[tuple[str, str, float]], declared_horizon: float | None) -> Corpus:
    # rows arrive in input order; ties in time keep that order (stable sort).
    name_to_id: dict[str, int] = {}
    seq_order: dict[str, list[tuple[float, int]]] = {}
    for seq_id, entity, t in rows:
        if entity not in name_to_id:
            name_to_id[entity] = len(name_to_id)
        seq_order.setdefault(seq_id, []).append((t, name_to_id[entity]))

    sequences = []
    for seq_id, pairs in seq_order.items():
        pairs.sort(key=lambda p: p[0])  # stable: equal times keep input order
        events = [Event(u, t) for t, u in pairs]
        horizon = declared_horizon if declared_horizon is not None else pairs[-1][0]
        if horizon <= 0:
            # all-zero timestamps with no declared horizon leave nothing observable
            raise CorpusFormatError(f"sequence {seq_id!r} has nonpositive horizon")
        for t, _ in pairs:
            if t > horizon:
                raise CorpusFormatError(
                    f"event at t={t} exceeds declared horizon {horizon} in sequence {seq_id!r}"
                )
        sequences.append(EventSequence(seq_id, events, float(horizon)))

    entities = [Entity(i, n) for n, i in name_to_id.items()]
    corpus = Corpus(entities, sequences)
    corpus.validate()
    return corpus


def parse_corpus(source, format: str = "jsonl") -> Corpus:
    """Parse a corpus from a byte or text stream.

    ``jsonl``: one object per line with keys seq, entity, t; one optional
    header object ``{"horizon": h}`` declares a shared horizon for the file.
    ``csv``: header row with columns seq, entity, t.

    Raises CorpusFormatError on malformed lines (with line number), negative
    timestamps, or an empty corpus.
    """
    text = _as_text(source)
    if format == "jsonl":
        return _parse_jsonl(text)
    if format == "csv":
        return _parse_csv(text)
    raise ValueError(f"unknown corpus format {format!r}")


def _parse_jsonl(text: str) -> Corpus:
    rows: list[tuple[str, str, float]] = []
    declared: float | None = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"malformed line {line_no}: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise CorpusFormatError(f"malformed line {line_no}: expected an object")
        if set(obj) == {"horizon"}:
            if declared is not None:
                raise CorpusFormatError(f"malformed line {line_no}: duplicate horizon header")
            if not isinstance(obj["horizon"], (int, float)) or obj["horizon"] <= 0:
                raise CorpusFormatError(f"malformed line {line_no}: horizon must be positive")
            declared = float(obj["horizon"])
            continue
        if not {"seq", "entity", "t"} <= set(obj):
            raise CorpusFormatError(f"malformed line {line_no}: missing seq/entity/t")
        seq_id, entity, t = obj["seq"], obj["entity"], obj["t"]
        if not isinstance(seq_id, str) or not isinstance(entity, str):
            raise CorpusFormatError(f"malformed line {line_no}: seq and entity must be strings")
        if not isinstance(t, (int, float)) or isinstance(t, bool):
            raise CorpusFormatError(f"malformed line {line_no}: t must be a number")
        if t < 0:
            raise CorpusFormatError(f"negative timestamp at line {line_no}")
        rows.append((seq_id, entity, float(t)))
    if not rows:
        raise CorpusFormatError("empty corpus")
    return _build(rows, declared)


def _parse_csv(text: str) -> Corpus:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"seq", "entity", "t"} <= set(reader.fieldnames):
        raise CorpusFormatError("malformed line 1: header row with seq,entity,t required")
    rows: list[tuple[str, str, float]] = []
    for rec in reader:
        line_no = reader.line_num
        try:
            t = float(rec["t"])
        except (TypeError, ValueError):
            raise CorpusFormatError(f"malformed line {line_no}: t must be a number") from None
        if rec["seq"] is None or rec["entity"] is None:
            raise CorpusFormatError(f"malformed line {line_no}: missing seq/entity")
        if t < 0:
            raise CorpusFormatError(f"negative timestamp at line {line_no}")
        rows.append((rec["seq"], rec["entity"], t))
    if not rows:
        raise CorpusFormatError("empty corpus")
    return _build(rows, None)


def serialize_corpus(corpus: Corpus, format: str = "jsonl") -> bytes:
    """Write a corpus back to the wire format; parse(serialize(c)) == c.

    JSONL carries a shared horizon header only when one is needed; corpora
    whose horizons cannot be expressed in the target format are refused.
    """
    max_times = [max((e.time for e in s.events), default=0.0) for s in corpus.sequences]
    natural = all(s.horizon == mt for s, mt in zip(corpus.sequences, max_times))
    horizons = {s.horizon for s in corpus.sequences}

    if format == "jsonl":
        out = io.StringIO()
        if not natural:
            if len(horizons) != 1:
                raise ValueError("corpus horizons not representable in jsonl format")
            out.write(json.dumps({"horizon": horizons.pop()}) + "\n")
        for seq in corpus.sequences:
            for ev in seq.events:
                rec = {"seq": seq.id, "entity": corpus.entities[ev.entity].name, "t": ev.time}
                out.write(json.dumps(rec) + "\n")
        return out.getvalue().encode("utf-8")

    if format == "csv":
        if not natural:
            raise ValueError("corpus horizons not representable in csv format")
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["seq", "entity", "t"])
        for seq in corpus.sequences:
            for ev in seq.events:
                writer.writerow([seq.id, corpus.entities[ev.entity].name, repr(ev.time)])
        return out.getvalue().encode("utf-8")

    raise ValueError(f"unknown corpus format {format!r}")


def filter_top_entities(corpus: Corpus, k: int) -> Corpus:
    """Keep the k entities with the most events; ties break to the smaller id.

    Remaining entities are reindexed densely in original id order; sequences
    that end up empty are dropped.  k larger than the vocabulary keeps all
    entities and logs a warning.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    counts = corpus.entity_counts()
    if k >= corpus.num_entities:
        if k > corpus.num_entities:
            logger.warning(
                "filter_top_entities: k=%d exceeds vocabulary size %d; keeping all",
                k,
                corpus.num_entities,
            )
        return Corpus(list(corpus.entities), [replace(s, events=list(s.events)) for s in corpus.sequences])

    order = sorted(range(corpus.num_entities), key=lambda u: (-counts[u], u))
    kept = sorted(order[:k])
    remap = {old: new for new, old in enumerate(kept)}
    entities = [Entity(remap[old], corpus.entities[old].name) for old in kept]
    sequences = []
    for seq in corpus.sequences:
        events = [Event(remap[e.entity], e.time) for e in seq.events if e.entity in remap]
        if events:
            sequences.append(EventSequence(seq.id, events, seq.horizon))
    return Corpus(entities, sequences)


@dataclass
class CooccurrenceMatrix:
    """Symmetric pair counts within a time window.

    counts[u, v] is the number of event pairs (one event of u, one of v,
    u != v, same sequence) whose gap is <= window, each unordered event pair
    counted once.
    """

    counts: np.ndarray
    window: float

    def of(self, u: int, v: int) -> int:
        return int(self.counts[u, v])


def cooccurrence_counts(corpus: Corpus, window: float) -> CooccurrenceMatrix:
    if window < 0:
        raise ValueError("window must be nonnegative")
    U = corpus.num_entities
    counts = np.zeros((U, U), dtype=np.int64)
    for seq in corpus.sequences:
        times = seq.times()
        ents = seq.entities()
        start = 0
        for j in range(len(times)):
            while times[j] - times[start] > window:
                start += 1
            for i in range(start, j):
                if ents[i] != ents[j]:
                    counts[ents[i], ents[j]] += 1
                    counts[ents[j], ents[i]] += 1
    return CooccurrenceMatrix(counts, window)


def occurrence_histogram(corpus: Corpus, entity: int, bin_width: float) -> np.ndarray:
    """Event counts for one entity in half-open bins [i*w, (i+1)*w).

    The number of bins is ceil(max_horizon / w) over the whole corpus and the
    last bin is closed at the horizon, so a boundary event at exactly the max
    horizon still lands in a bin.
    """
    if not 0 <= entity < corpus.num_entities:
        raise ValueError(f"unknown entity id {entity}")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    max_h = corpus.max_horizon()
    nbins = max(1, math.ceil(max_h / bin_width))
    hist = np.zeros(nbins, dtype=np.int64)
    for seq in corpus.sequences:
        for ev in seq.events:
            if ev.entity != entity:
                continue
            idx = int(ev.time // bin_width)
            if idx >= nbins:  # event exactly at the corpus max horizon
                idx = nbins - 1
            hist[idx] += 1
    return hist
