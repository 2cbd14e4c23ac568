"""Command line driver: ingest -> embed -> fit -> combine -> export -> serve.

Each stage reads the previous stage's artifact and writes its own, echoing
its config and input digests so a rerun with unchanged inputs is a no-op.
Exit codes: 0 ok, 2 validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import yaml

from .artifacts import (
    canonical_dumps,
    file_digest,
    load_corpus,
    load_embeddings,
    load_hypergraph,
    load_params,
    read_artifact,
    save_corpus,
    save_embeddings,
    save_hypergraph,
    save_params,
    stage_is_current,
    write_snapshot,
)
from .combos import ComboRuleConfig, discover_combined
from .embeddings import SkipGramConfig, train_embeddings
from .events import CorpusFormatError, cooccurrence_counts, filter_top_entities, parse_corpus, serialize_corpus
from .ordering import communities_louvain
from .rpp import BasisKernels, CausalGraph, FitConfig, build_causal_graph, fit_detailed
from .service import create_app, load_service_config
from .simulate import GeneratorConfig, PlantedCombo, PlantedEdge, synthesize

STAGES = ("ingest", "embed", "fit", "combine", "export", "simulate", "serve")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValueError("config file must be a mapping")
    return raw


def _stage_config(stage: str, args, defaults: dict) -> dict:
    """Defaults, overridden by the config file section, overridden by flags."""
    raw = _load_config_file(args.config)
    if stage in raw:
        section = raw[stage]
        if not isinstance(section, dict):
            raise ValueError(f"config section {stage!r} must be a mapping")
    elif any(k in raw for k in STAGES):
        section = {}
    else:
        section = raw  # flat file: the whole mapping is this stage's section
    cfg = dict(defaults)
    for key, value in section.items():
        if key not in defaults:
            raise ValueError(f"unknown config key {key!r} for stage {stage!r}")
        cfg[key] = value
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _from_fields(cls, cfg: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    return cls(**{k: v for k, v in cfg.items() if k in names})


def _skip_if_current(out: str, kind: str, cfg: dict, inputs: dict) -> bool:
    if stage_is_current(out, kind, cfg, inputs):
        print(f"{kind} artifact up to date: {out}")
        return True
    return False


def cmd_ingest(args) -> int:
    cfg = _stage_config("ingest", args, {"format": "jsonl", "top_k": None})
    inputs = {"events": file_digest(args.input)}
    if _skip_if_current(args.out, "corpus", cfg, inputs):
        return 0
    corpus = parse_corpus(Path(args.input).read_text(encoding="utf-8"), format=cfg["format"])
    if cfg["top_k"] is not None:
        corpus = filter_top_entities(corpus, int(cfg["top_k"]))
    save_corpus(args.out, corpus, cfg, inputs)
    print(f"ingested {corpus.total_events()} events, {corpus.num_entities} entities -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    defaults = dataclasses.asdict(SkipGramConfig())
    cfg = _stage_config("embed", args, defaults)
    inputs = {"corpus": file_digest(args.corpus)}
    if _skip_if_current(args.out, "embeddings", cfg, inputs):
        return 0
    corpus = load_corpus(args.corpus)
    table = train_embeddings(corpus, _from_fields(SkipGramConfig, cfg))
    save_embeddings(args.out, table, cfg, inputs)
    print(f"trained {len(table.names)} embeddings (dim {cfg['dimension']}) -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    defaults = dataclasses.asdict(FitConfig())
    defaults.update({"kernel_count": 3, "kernel_span": 10.0})
    cfg = _stage_config("fit", args, defaults)
    inputs = {"corpus": file_digest(args.corpus)}
    if _skip_if_current(args.out, "params", cfg, inputs):
        return 0
    corpus = load_corpus(args.corpus)
    kernels = BasisKernels.default_for(corpus, count=int(cfg["kernel_count"]), span_multiplier=cfg["kernel_span"])
    result = fit_detailed(corpus, kernels, _from_fields(FitConfig, cfg))
    save_params(args.out, result.params, kernels, corpus.names, cfg, inputs)
    state = "converged" if result.converged else "stopped at iteration cap"
    print(f"fit {state}, objective {result.objectives[-1]:.6f} -> {args.out}")
    return 0


def cmd_combine(args) -> int:
    defaults = dataclasses.asdict(ComboRuleConfig())
    defaults.update({"threshold": 0.1, "window": 1.0})
    cfg = _stage_config("combine", args, defaults)
    inputs = {
        "corpus": file_digest(args.corpus),
        "params": file_digest(args.params),
        "embeddings": file_digest(args.embeddings),
    }
    if _skip_if_current(args.out, "hypergraph", cfg, inputs):
        return 0
    corpus = load_corpus(args.corpus)
    table = load_embeddings(args.embeddings)
    params, kernels, names = load_params(args.params)
    # refits reuse the hyperparameters the base fit was produced with
    fit_config = _from_fields(FitConfig, read_artifact(args.params, "params")["config"])
    graph = build_causal_graph(params, cfg["threshold"], sign_tolerance=fit_config.sign_tolerance, names=names)
    cooc = cooccurrence_counts(corpus, cfg["window"])
    rules = _from_fields(ComboRuleConfig, cfg)
    hg = discover_combined(corpus, graph, table, cooc, rules, fit_config, kernels, base_params=params)
    save_hypergraph(args.out, hg, cfg, inputs)
    combined = sum(1 for e in hg.edges if len(e.causes) > 1)
    print(f"hypergraph: {len(hg.edges)} edges ({combined} combined) -> {args.out}")
    return 0


def _graph_from_hyperedges(hg, names: list[str], threshold: float) -> CausalGraph:
    pos = {n: i for i, n in enumerate(names)}
    edges = {
        (pos[e.causes[0]], pos[e.effect]): e.strength for e in hg.edges if len(e.causes) == 1
    }
    return CausalGraph(names=list(names), edges=edges, threshold=threshold)


def cmd_export(args) -> int:
    cfg = _stage_config("export", args, {"louvain_seed": 0})
    inputs = {
        "corpus": file_digest(args.corpus),
        "embeddings": file_digest(args.embeddings),
        "hypergraph": file_digest(args.hypergraph),
    }
    head_path = Path(args.out) / "snapshot.json"
    if head_path.exists():
        head = json.loads(head_path.read_text(encoding="utf-8"))
        echo = head.get("config", {})
        if echo.get("inputs") == inputs and echo.get("export") == cfg:
            print(f"snapshot bundle up to date: {args.out}")
            return 0
    corpus = load_corpus(args.corpus)
    table = load_embeddings(args.embeddings)
    hg = load_hypergraph(args.hypergraph)
    combine_cfg = read_artifact(args.hypergraph, "hypergraph")["config"]
    graph = _graph_from_hyperedges(hg, corpus.names, combine_cfg.get("threshold", 0.1))
    partition = communities_louvain(graph, seed=int(cfg["louvain_seed"]))
    write_snapshot(
        args.out, corpus, table, graph, hg, partition,
        config={"inputs": inputs, "export": cfg, "combine": combine_cfg},
    )
    print(f"snapshot bundle -> {args.out}")
    return 0


def _parse_plant(spec: str) -> PlantedCombo:
    head, arrow, rest = spec.partition("->")
    if not arrow or not head or not rest:
        raise ValueError(f"bad combo spec {spec!r}; expected 'b,c->H' or 'b,c->H:0.8'")
    effect, colon, weight = rest.partition(":")
    members = tuple(m.strip() for m in head.split(",") if m.strip())
    if len(members) < 2:
        raise ValueError(f"combo spec {spec!r} needs at least two members")
    return PlantedCombo(members=members, effect=effect.strip(), weight=float(weight) if colon else 0.8)


def _parse_edge(spec: str) -> PlantedEdge:
    head, arrow, rest = spec.partition("->")
    if not arrow or not head or not rest:
        raise ValueError(f"bad edge spec {spec!r}; expected 'a->b:0.4'")
    effect, colon, weight = rest.partition(":")
    return PlantedEdge(cause=head.strip(), effect=effect.strip(), weight=float(weight) if colon else 0.5)


def cmd_simulate(args) -> int:
    defaults = {
        "entities": 3, "base_rate": 0.5, "effect_rate": 0.05, "window": 1.0,
        "horizon": 40.0, "sequences": 30, "seed": 0, "plant": [], "edge": [],
    }
    cfg = _stage_config("simulate", args, defaults)
    combos = [_parse_plant(s) for s in cfg["plant"]]
    edges = [_parse_edge(s) for s in cfg["edge"]]

    names: list[str] = []
    for combo in combos:
        for n in (*combo.members, combo.effect):
            if n not in names:
                names.append(n)
    for edge in edges:
        for n in (edge.cause, edge.effect):
            if n not in names:
                names.append(n)
    count = int(cfg["entities"])
    if count < len(names):
        raise ValueError(f"--entities {count} is smaller than the {len(names)} named entities")
    filler = 0
    while len(names) < count:
        candidate = f"x{filler}"
        filler += 1
        if candidate not in names:
            names.append(candidate)

    config = GeneratorConfig(
        entities=names,
        base_rate=cfg["base_rate"],
        effect_rate=cfg["effect_rate"],
        edges=edges,
        combos=combos,
        window=cfg["window"],
        horizon=cfg["horizon"],
        sequences=int(cfg["sequences"]),
        seed=int(cfg["seed"]),
    )
    corpus, manifest = synthesize(config)
    Path(args.out).write_bytes(serialize_corpus(corpus, format="jsonl"))
    manifest_path = args.manifest or str(Path(args.out).with_suffix(".manifest.json"))
    Path(manifest_path).write_text(canonical_dumps(manifest) + "\n", encoding="utf-8")
    print(f"simulated {corpus.total_events()} events over {len(corpus.sequences)} sequences -> {args.out}")
    print(f"ground truth manifest -> {manifest_path}")
    return 0


def cmd_serve(args) -> int:
    config = load_service_config(args.config)
    if args.snapshot is not None:
        config.snapshot_dir = args.snapshot
    if args.port is not None:
        config.port = args.port
    if args.host is not None:
        config.host = args.host
    import uvicorn  # deferred: only this subcommand needs the server

    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causeloom", description=__doc__.splitlines()[0])
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="YAML or JSON config file, sections keyed by stage name")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", parents=[shared], help="parse raw events into a corpus artifact")
    p.add_argument("--input", required=True, help="JSONL or CSV event stream")
    p.add_argument("--format", choices=("jsonl", "csv"))
    p.add_argument("--top-k", type=int, dest="top_k", help="keep only the k most frequent entities")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("embed", parents=[shared], help="train entity embeddings from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dimension", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("fit", parents=[shared], help="fit the reactive point process")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smoothing", type=float)
    p.add_argument("--ridge", type=float)
    p.add_argument("--lasso", type=float)
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--initial-step", type=float, dest="initial_step")
    p.add_argument("--backtrack", type=float)
    p.add_argument("--max-backtracks", type=int, dest="max_backtracks")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--sign-tolerance", type=float, dest="sign_tolerance")
    p.add_argument("--kernel-count", type=int, dest="kernel_count")
    p.add_argument("--kernel-span", type=float, dest="kernel_span",
                   help="kernel cutoff as a multiple of the median positive gap")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("combine", parents=[shared], help="search for combined causes and build the hypergraph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, help="minimum |strength| for an edge to appear")
    p.add_argument("--window", type=float, help="co-occurrence window in time units")
    p.add_argument("--max-size", type=int, dest="max_size")
    p.add_argument("--min-similarity", type=float, dest="min_similarity")
    p.add_argument("--min-cooccurrence", type=float, dest="min_cooccurrence")
    p.add_argument("--recruit-similarity", type=float, dest="recruit_similarity")
    p.add_argument("--recruit-cooccurrence", type=float, dest="recruit_cooccurrence")
    p.add_argument("--tie-window", type=float, dest="tie_window")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("export", parents=[shared], help="write the snapshot bundle the service loads")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--hypergraph", required=True)
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--louvain-seed", type=int, dest="louvain_seed")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", parents=[shared], help="generate a synthetic corpus with known ground truth")
    p.add_argument("--out", required=True, help="JSONL event stream, ingestable as-is")
    p.add_argument("--manifest", help="ground truth path (default: <out>.manifest.json)")
    p.add_argument("--entities", type=int, help="total entity count including planted names")
    p.add_argument("--plant", action="append", help="combined cause, e.g. 'b,c->H' or 'b,c->H:0.9'")
    p.add_argument("--edge", action="append", help="pairwise edge, e.g. 'a->b:0.4' (negative inhibits)")
    p.add_argument("--base-rate", type=float, dest="base_rate")
    p.add_argument("--effect-rate", type=float, dest="effect_rate")
    p.add_argument("--window", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--sequences", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", parents=[shared], help="serve a snapshot bundle over HTTP")
    p.add_argument("--snapshot", help="snapshot bundle directory")
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except CorpusFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
