"""Read-mostly HTTP API over a snapshot bundle plus an amendment journal.

The service never refits anything: every response is derived from the loaded
snapshot and the journal prefix visible at request time.  Amendment writes
are serialized through one lock and fsynced before the response leaves, so a
killed and restarted process replays to the exact same state.  All JSON is
emitted with sorted keys to keep equal states bitwise equal.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import yaml
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel

from .artifacts import Snapshot, load_snapshot
from .events import occurrence_histogram
from .hypergraph import Amendment, apply_amendments, filter_edges, aggregate, VALID_ACTIONS
from .ordering import (
    influence_graph,
    k_shortest_paths,
    layered_layout,
    order_columns,
    order_rows,
    propagation_path,
)

ENV_PORT = "CAUSELOOM_PORT"
ENV_SNAPSHOT = "CAUSELOOM_SNAPSHOT"


class SortedJSONResponse(Response):
    media_type = "application/json"

    def render(self, content) -> bytes:
        return json.dumps(content, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass
class ServiceConfig:
    snapshot_dir: str | None = None
    journal_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8765

    def resolved_journal(self) -> Path | None:
        if self.journal_path:
            return Path(self.journal_path)
        if self.snapshot_dir:
            return Path(self.snapshot_dir) / "journal.jsonl"
        return None


def load_service_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Config file (YAML or JSON) with environment overrides on top."""
    env = env if env is not None else os.environ
    raw: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text) or {}
        if not isinstance(raw, dict):
            raise ValueError("service config must be a mapping")
        if isinstance(raw.get("serve"), dict):  # same file the pipeline stages read
            raw = raw["serve"]
    config = ServiceConfig(
        snapshot_dir=raw.get("snapshot_dir"),
        journal_path=raw.get("journal_path"),
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8765)),
    )
    if env.get(ENV_SNAPSHOT):
        config.snapshot_dir = env[ENV_SNAPSHOT]
    if env.get(ENV_PORT):
        config.port = int(env[ENV_PORT])
    return config


class AmendmentJournal:
    """Append-only JSONL log; the file on disk is the source of truth."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.entries: list[Amendment] = []
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.entries.append(Amendment.from_json(json.loads(line)))

    def snapshot(self) -> list[Amendment]:
        with self._lock:
            return list(self.entries)

    def append_checked(self, edge_id: str, action: str, value: float | None, author: str, live_edge_ids) -> Amendment:
        """Validate against the current amended state and persist atomically.

        live_edge_ids is a callable evaluated under the lock, so two racing
        writers cannot both amend an edge the first one deletes.
        """
        with self._lock:
            entry = Amendment(
                seq=self.entries[-1].seq + 1 if self.entries else 1,
                edge_id=edge_id,
                action=action,
                value=value,
                author=author,
                ts=time.time(),
            )
            entry.validate()
            if edge_id not in live_edge_ids(self.entries):
                raise KeyError(edge_id)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_json(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.entries.append(entry)
            return entry


class AmendmentRequest(BaseModel):
    edge_id: str
    action: str
    value: float | None = None
    author: str = "anonymous"


def _bad_request(detail: str) -> HTTPException:
    return HTTPException(status_code=400, detail=detail)


def _not_found(detail: str) -> HTTPException:
    return HTTPException(status_code=404, detail=detail)


_ERROR_NAMES = {400: "invalid", 404: "not_found", 409: "no_snapshot", 500: "internal"}


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="causeloom", default_response_class=SortedJSONResponse)

    snapshot: Snapshot | None = None
    journal: AmendmentJournal | None = None
    if config.snapshot_dir and (Path(config.snapshot_dir) / "snapshot.json").exists():
        snapshot = load_snapshot(config.snapshot_dir)
        journal = AmendmentJournal(config.resolved_journal())
    app.state.snapshot = snapshot
    app.state.journal = journal
    app.state.config = config

    @app.exception_handler(HTTPException)
    async def _http_error(_req: Request, exc: HTTPException):
        name = _ERROR_NAMES.get(exc.status_code, "error")
        return SortedJSONResponse({"error": name, "detail": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return SortedJSONResponse({"error": "invalid", "detail": str(exc.errors())}, status_code=400)

    def need_snapshot() -> Snapshot:
        if app.state.snapshot is None:
            raise HTTPException(status_code=409, detail="no snapshot loaded")
        return app.state.snapshot

    def amended_graph(entries=None):
        snap = need_snapshot()
        entries = entries if entries is not None else app.state.journal.snapshot()
        amended, _skipped = apply_amendments(snap.hypergraph, entries)
        return amended

    def parse_filters(min_strength: float, max_degree: int | None, sign: str):
        if min_strength < 0:
            raise _bad_request("min_strength must be nonnegative")
        if max_degree is not None and max_degree < 1:
            raise _bad_request("max_degree must be at least 1")
        if sign not in ("any", "impelling", "inhibiting"):
            raise _bad_request(f"unknown sign filter {sign!r}")
        return min_strength, max_degree, sign

    def resolve_entity(snap: Snapshot, key: str) -> int:
        names = snap.corpus.names
        if key in names:
            return names.index(key)
        if key.isdigit() and int(key) < len(names):
            return int(key)
        raise _not_found(f"unknown entity {key!r}")

    def build_orders(snap: Snapshot, groups, rows: str, columns: str, focus: str | None,
                     rows_perm: str | None, cols_perm: str | None):
        entity_ids = {e.name: e.id for e in snap.corpus.entities}
        row_perm = None
        if rows_perm is not None:
            try:
                row_perm = [int(x) for x in rows_perm.split(",") if x != ""]
            except ValueError:
                raise _bad_request("rows_perm must be comma-separated entity ids") from None
        col_perm = cols_perm.split(",") if cols_perm is not None else None
        if focus is not None and focus not in entity_ids:
            raise _not_found(f"unknown entity {focus!r}")
        try:
            row_order = order_rows(
                snap.corpus.entities, rows,
                partition=snap.partition, table=snap.table, permutation=row_perm,
            )
            column_order = order_columns(groups, columns, entity_ids, focus=focus, permutation=col_perm)
        except ValueError as exc:
            raise _bad_request(str(exc)) from None
        return row_order, column_order

    @app.get("/api/health")
    def health():
        return {"status": "ok", "snapshot_loaded": app.state.snapshot is not None}

    @app.get("/api/graph")
    def get_graph(
        min_strength: float = 0.0,
        max_degree: int | None = None,
        sign: str = "any",
        rows: str = "base",
        columns: str = "direction",
        focus: str | None = None,
        rows_perm: str | None = None,
        cols_perm: str | None = None,
    ):
        snap = need_snapshot()
        lo, deg, sgn = parse_filters(min_strength, max_degree, sign)
        visible = filter_edges(amended_graph(), min_strength=lo, max_degree=deg, sign=sgn)
        groups = aggregate(visible)
        row_order, column_order = build_orders(snap, groups, rows, columns, focus, rows_perm, cols_perm)
        by_id = {g.id: g for g in groups}
        communities = snap.partition.communities
        entities = [
            {"id": u, "name": snap.corpus.entities[u].name, "community": communities.get(u, 0)}
            for u in row_order.permutation
        ]
        return {
            "created_at": snap.created_at,
            "entities": entities,
            "groups": [by_id[gid].to_json() for gid in column_order.permutation],
            "row_order": {"strategy": row_order.strategy, "permutation": row_order.permutation},
            "column_order": {"strategy": column_order.strategy, "permutation": column_order.permutation},
            "filters": {"min_strength": lo, "max_degree": deg, "sign": sgn},
        }

    @app.post("/api/amendments")
    def post_amendment(body: AmendmentRequest):
        snap = need_snapshot()
        if body.action not in VALID_ACTIONS:
            raise _bad_request(f"unknown action {body.action!r}")
        try:
            Amendment(seq=1, edge_id=body.edge_id, action=body.action, value=body.value).validate()
        except ValueError as exc:
            raise _bad_request(str(exc)) from None

        def live_ids(entries):
            amended, _ = apply_amendments(snap.hypergraph, entries)
            return {e.id for e in amended.edges}

        try:
            entry = app.state.journal.append_checked(
                body.edge_id, body.action, body.value, body.author, live_ids
            )
        except KeyError:
            raise _not_found(f"unknown edge id {body.edge_id!r}") from None
        return {"seq": entry.seq}

    @app.get("/api/propagation")
    def get_propagation(
        source: str,
        target: str,
        k: int = 3,
        min_strength: float = 0.0,
        max_degree: int | None = None,
        sign: str = "any",
    ):
        snap = need_snapshot()
        lo, deg, sgn = parse_filters(min_strength, max_degree, sign)
        if k < 1:
            raise _bad_request("k must be at least 1")
        source_name = snap.corpus.names[resolve_entity(snap, source)]
        target_name = snap.corpus.names[resolve_entity(snap, target)]
        visible = filter_edges(amended_graph(), min_strength=lo, max_degree=deg, sign=sgn)
        graph = influence_graph(visible)
        src = graph.names.index(source_name)
        dst = graph.names.index(target_name)
        best = propagation_path(graph, src, dst)
        if not best.reachable:
            return {
                "source": graph.names[src],
                "target": graph.names[dst],
                "reachable": False,
                "path": None,
                "layers": {},
            }
        paths = k_shortest_paths(graph, src, dst, k=k)
        layers = layered_layout(paths)
        return {
            "source": graph.names[src],
            "target": graph.names[dst],
            "reachable": True,
            "path": {
                "nodes": [graph.names[u] for u in best.nodes],
                "strengths": best.strengths,
                "distance": best.distance,
            },
            "alternatives": [
                {"nodes": [graph.names[u] for u in p.nodes], "distance": p.distance} for p in paths
            ],
            "layers": {graph.names[u]: layer for u, layer in layers.items()},
        }

    @app.get("/api/histogram")
    def get_histogram(entity: str, bin: float):
        snap = need_snapshot()
        if bin <= 0:
            raise _bad_request("bin must be positive")
        uid = resolve_entity(snap, entity)
        hist = occurrence_histogram(snap.corpus, uid, bin)
        return {
            "entity": snap.corpus.names[uid],
            "bin_width": bin,
            "bins": [int(x) for x in hist],
        }

    @app.get("/api/communities")
    def get_communities():
        snap = need_snapshot()
        return {
            "communities": {snap.corpus.names[u]: c for u, c in snap.partition.communities.items()},
            "modularity": snap.partition.modularity,
        }

    @app.get("/api/orderings")
    def get_orderings(
        rows: str = "base",
        columns: str = "direction",
        focus: str | None = None,
        rows_perm: str | None = None,
        cols_perm: str | None = None,
        min_strength: float = 0.0,
        max_degree: int | None = None,
        sign: str = "any",
    ):
        snap = need_snapshot()
        lo, deg, sgn = parse_filters(min_strength, max_degree, sign)
        visible = filter_edges(amended_graph(), min_strength=lo, max_degree=deg, sign=sgn)
        groups = aggregate(visible)
        row_order, column_order = build_orders(snap, groups, rows, columns, focus, rows_perm, cols_perm)
        return {
            "rows": {"strategy": row_order.strategy, "permutation": row_order.permutation},
            "columns": {"strategy": column_order.strategy, "permutation": column_order.permutation},
        }

    return app
