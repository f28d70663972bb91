"""Cosine semantic distance between reference and hypothesis embeddings.

semdist(a, b) = 1 - (a . b) / (||a|| ||b||), computed in double precision.
Scale-invariant, symmetric, zero for positively parallel vectors. The
mathematical range is [0, 2]; scores above 1 are surfaced, never clamped
away (only sub-ulp boundary dust is snapped onto the range).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .embeddings import Backend, SentenceEmbedding, embed_batch
from .errors import CacheMissError, ContractError, InputError

# rounding guard: |cos| can exceed 1 by a few ulps for (anti)parallel inputs
_BOUNDARY_EPS = 1e-9


def semdist(e_ref: SentenceEmbedding, e_hyp: SentenceEmbedding) -> float:
    """Cosine distance between two sentence embeddings, in [0, 2]."""
    if e_ref.dim != e_hyp.dim:
        raise ContractError(f"dimension mismatch: {e_ref.dim} vs {e_hyp.dim}")
    a = e_ref.values
    b = e_hyp.values
    value = 1.0 - float(np.dot(a, b)) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    if value < 0.0:
        if value < -_BOUNDARY_EPS:
            raise ContractError(f"cosine distance {value} below 0: non-finite inputs?")
        return 0.0
    if value > 2.0:
        if value > 2.0 + _BOUNDARY_EPS:
            raise ContractError(f"cosine distance {value} above 2: non-finite inputs?")
        return 2.0
    return value


@dataclass(frozen=True)
class SemDistResult:
    """Per-utterance scores in corpus order plus their arithmetic mean."""

    scores: tuple[tuple[str, float], ...]
    mean: float
    backend_identity: str

    def by_id(self) -> dict[str, float]:
        return dict(self.scores)


def score_corpus(corpus: Corpus, backend: Backend) -> SemDistResult:
    """Score every (reference, hypothesis) pair of a corpus.

    Embedding requests are batched per side; the corpus aggregate is the
    unweighted mean of per-utterance scores, accumulated with exact
    summation so it is independent of evaluation order.
    """
    references = []
    hypotheses = []
    for pair in corpus:
        if pair.hypothesis is None:
            raise InputError(f"utterance {pair.id!r} has no hypothesis to score")
        if not pair.reference.strip():
            raise InputError(f"utterance {pair.id!r} has an empty reference")
        if not pair.hypothesis.strip():
            raise InputError(f"utterance {pair.id!r} has an empty hypothesis")
        references.append(pair.reference)
        hypotheses.append(pair.hypothesis)
    if not references:
        return SemDistResult(scores=(), mean=float("nan"), backend_identity=backend.descriptor.identity)

    try:
        ref_embeddings = embed_batch(backend, references)
        hyp_embeddings = embed_batch(backend, hypotheses)
    except CacheMissError as exc:
        missing = set(exc.missing)
        ids = [p.id for p in corpus if p.reference in missing or (p.hypothesis or "") in missing]
        raise CacheMissError(f"{exc} (utterances: {ids})", missing=exc.missing) from exc

    scores = tuple(
        (pair.id, semdist(e_ref, e_hyp))
        for pair, e_ref, e_hyp in zip(corpus, ref_embeddings, hyp_embeddings)
    )
    mean = math.fsum(score for _, score in scores) / len(scores)
    return SemDistResult(scores=scores, mean=mean, backend_identity=backend.descriptor.identity)
