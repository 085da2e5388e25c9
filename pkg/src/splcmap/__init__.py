"""splcmap: concept-map construction and exploration for software product lines."""

from .asset_scanner import (
    Asset,
    AssetKind,
    Diagnostic,
    ScanConfig,
    Segment,
    TraceMetrics,
    TraceTable,
    VariationPoint,
    scan_corpus,
    trace_metrics,
)
from .cmap_document import (
    CmapDocument,
    DocumentError,
    KnownStatus,
    OverlayResult,
    assemble,
    export,
    known_overlay,
    load_document,
    parse_document,
    to_json_text,
)
from .concept_builder import (
    Concept,
    ConceptError,
    CorpusStats,
    apply_curation,
    cluster_keywords,
    rank_concepts,
    relevance,
)
from .curation import CurationError, CurationFile, EdgeEdit
from .errors import SplcmapError
from .feature_model import (
    CrossTreeConstraint,
    Dependency,
    Feature,
    FeatureModel,
    FeatureModelError,
    Phase,
    TraversalBatch,
    TraversalPlan,
    Variability,
    count_products,
    features_dependent,
    parse_feature_model,
    serialize_feature_model,
    traversal_plan,
)
from .lexicon import Keyword, LexiconConfig, extract_keywords, normalize, tokenize
from .pipeline import PipelineConfig, PipelineError, RunResult, build_concept_map, run
from .relationship_builder import (
    EdgeProposal,
    Provenance,
    RelationshipError,
    apply_edge_curation,
    propose_relationships,
)

__version__ = "0.1.0"
