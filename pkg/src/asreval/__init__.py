"""ASR evaluation toolkit.

Word error rate from minimum-edit-distance alignment, embedding-based
semantic distance, WER-preserving hypothesis perturbation, decoupled
intent/slot frame metrics, entity F1, and correlation reporting.
"""

__version__ = "0.1.0"

from .alignment import Alignment, EditOp, ErrorCounts, align, corpus_wer, wer
from .analytics import EvalReport, UtteranceRecord, build_report, pearson, render
from .corpus import (
    Corpus,
    NormalizedSentence,
    UtterancePair,
    load_corpus,
    normalize,
    save_corpus,
)
from .embeddings import (
    CacheBackend,
    EmbeddingBackendDescriptor,
    RemoteBackend,
    SentenceEmbedding,
    StubBackend,
    embed_batch,
    parse_backend,
    read_cache,
    stub_token_vector,
    write_cache,
)
from .entities import EntityF1, EntitySet, entity_f1
from .frames import (
    FrameMetrics,
    SemanticNode,
    drop_slot_text,
    frame_metrics,
    parse_frame,
    serialize_frame,
    top_intent,
)
from .perturb import (
    PerturbationBudget,
    PerturbationRecipe,
    generate_better,
    generate_set,
    generate_worse,
)
from .semdist import SemDistResult, score_corpus, semdist

__all__ = [
    "Alignment",
    "CacheBackend",
    "Corpus",
    "EditOp",
    "EmbeddingBackendDescriptor",
    "EntityF1",
    "EntitySet",
    "ErrorCounts",
    "EvalReport",
    "FrameMetrics",
    "NormalizedSentence",
    "PerturbationBudget",
    "PerturbationRecipe",
    "RemoteBackend",
    "SemDistResult",
    "SemanticNode",
    "SentenceEmbedding",
    "StubBackend",
    "UtterancePair",
    "UtteranceRecord",
    "align",
    "build_report",
    "corpus_wer",
    "drop_slot_text",
    "embed_batch",
    "entity_f1",
    "frame_metrics",
    "generate_better",
    "generate_set",
    "generate_worse",
    "load_corpus",
    "normalize",
    "parse_backend",
    "parse_frame",
    "pearson",
    "read_cache",
    "render",
    "save_corpus",
    "score_corpus",
    "semdist",
    "serialize_frame",
    "stub_token_vector",
    "top_intent",
    "wer",
    "write_cache",
]
