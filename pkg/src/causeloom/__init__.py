"""Combined-causality analytics for temporal event sequences.

Fits a reactive point process over an event corpus, scores signed causal
strengths, searches for combined (multi-entity) causes, and serves the
resulting weighted directed hypergraph for interactive exploration.
"""

__version__ = "0.1.0"

from .artifacts import Snapshot, load_snapshot, write_snapshot
from .combos import Combo, ComboRuleConfig, FilterSet, discover_combined, tie_entities, tied_name
from .embeddings import EmbeddingTable, SkipGramConfig, similarity, similarity_matrix, train_embeddings
from .events import (
    Corpus,
    CorpusFormatError,
    Entity,
    Event,
    EventSequence,
    cooccurrence_counts,
    filter_top_entities,
    occurrence_histogram,
    parse_corpus,
    serialize_corpus,
)
from .hypergraph import (
    AggregatedGroup,
    Amendment,
    DirectedHypergraph,
    Hyperedge,
    aggregate,
    apply_amendments,
    expand,
    filter_edges,
    make_edge,
)
from .ordering import (
    Partition,
    PropagationPath,
    communities_louvain,
    influence_graph,
    k_shortest_paths,
    layered_layout,
    modularity,
    order_columns,
    order_rows,
    propagation_path,
)
from .rpp import (
    BasisKernels,
    CausalGraph,
    FitConfig,
    FitResult,
    RppParams,
    build_causal_graph,
    causal_strength,
    fit,
    fit_detailed,
    log_likelihood,
    strength_matrix,
)
from .service import ServiceConfig, create_app, load_service_config
from .simulate import GeneratorConfig, PlantedCombo, PlantedEdge, simulate, synthesize
