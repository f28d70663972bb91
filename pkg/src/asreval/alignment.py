"""Minimum-edit-distance word alignment and Word Error Rate.

Unit costs for substitution, insertion, and deletion. The backtrace is
deterministic: ties are broken match > substitution > deletion >
insertion, scanning from the sequence ends, so golden alignments are
reproducible. WER values are exact fractions; formatting to percentages
happens at the reporting layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .corpus import NormalizedSentence
from .errors import ContractError, UndefinedMetricError

MATCH = "match"
SUBSTITUTION = "substitution"
INSERTION = "insertion"
DELETION = "deletion"


@dataclass(frozen=True)
class EditOp:
    """One step of an alignment. Insertions carry only the hypothesis
    token, deletions only the reference token."""

    kind: str
    ref_token: str | None = None
    hyp_token: str | None = None

    def __post_init__(self) -> None:
        if self.kind in (MATCH, SUBSTITUTION):
            if self.ref_token is None or self.hyp_token is None:
                raise ContractError(f"{self.kind} op needs both tokens")
            if self.kind == MATCH and self.ref_token != self.hyp_token:
                raise ContractError("match op requires equal tokens")
            if self.kind == SUBSTITUTION and self.ref_token == self.hyp_token:
                raise ContractError("substitution op requires unequal tokens")
        elif self.kind == INSERTION:
            if self.ref_token is not None or self.hyp_token is None:
                raise ContractError("insertion op carries only a hypothesis token")
        elif self.kind == DELETION:
            if self.ref_token is None or self.hyp_token is not None:
                raise ContractError("deletion op carries only a reference token")
        else:
            raise ContractError(f"unknown edit op kind {self.kind!r}")


@dataclass(frozen=True)
class ErrorCounts:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    def __post_init__(self) -> None:
        if min(self.substitutions, self.insertions, self.deletions, self.ref_len) < 0:
            raise ContractError("error counts must be nonnegative")
        if self.substitutions + self.deletions > self.ref_len:
            raise ContractError("substitutions + deletions cannot exceed reference length")

    @property
    def total_edits(self) -> int:
        return self.substitutions + self.insertions + self.deletions


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]
    counts: ErrorCounts

    def ref_tokens(self) -> tuple[str, ...]:
        return tuple(op.ref_token for op in self.ops if op.kind != INSERTION)  # type: ignore[misc]

    def hyp_tokens(self) -> tuple[str, ...]:
        return tuple(op.hyp_token for op in self.ops if op.kind != DELETION)  # type: ignore[misc]


def _tokens(sentence: NormalizedSentence | Sequence[str]) -> tuple[str, ...]:
    if isinstance(sentence, NormalizedSentence):
        return sentence.tokens
    return tuple(sentence)


def align(
    reference: NormalizedSentence | Sequence[str],
    hypothesis: NormalizedSentence | Sequence[str],
) -> Alignment:
    """Align hypothesis to reference with minimal S+I+D under unit costs.

    Either side may be empty. The op sequence replays both inputs: reading
    ref tokens of non-insertion ops reproduces the reference, hyp tokens
    of non-deletion ops the hypothesis.
    """
    ref = _tokens(reference)
    hyp = _tokens(hypothesis)
    n, m = len(ref), len(hyp)

    # dist[i][j] = edit distance between ref[:i] and hyp[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        ref_tok = ref[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ref_tok == hyp[j - 1] else 1
            row[j] = min(prev[j - 1] + cost, prev[j] + 1, row[j - 1] + 1)

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1][j - 1] == here:
            ops.append(EditOp(MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and dist[i - 1][j - 1] + 1 == here:
            ops.append(EditOp(SUBSTITUTION, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i - 1][j] + 1 == here:
            ops.append(EditOp(DELETION, ref[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp(INSERTION, None, hyp[j - 1]))
            j -= 1
    ops.reverse()

    counts = ErrorCounts(
        substitutions=sum(1 for op in ops if op.kind == SUBSTITUTION),
        insertions=sum(1 for op in ops if op.kind == INSERTION),
        deletions=sum(1 for op in ops if op.kind == DELETION),
        ref_len=n,
    )
    if counts.total_edits != dist[n][m]:
        raise ContractError("backtrace does not reproduce the DP edit count")
    return Alignment(ops=tuple(ops), counts=counts)


def wer(counts: ErrorCounts) -> Fraction:
    """(S + I + D) / reference length, as an exact ratio. May exceed 1."""
    if counts.ref_len == 0:
        raise UndefinedMetricError("WER is undefined for an empty reference")
    return Fraction(counts.total_edits, counts.ref_len)


def corpus_wer(alignments: Iterable[Alignment]) -> Fraction:
    """Pooled corpus WER: total errors over total reference length (not
    the mean of per-utterance WERs)."""
    total_edits = 0
    total_ref = 0
    for alignment in alignments:
        total_edits += alignment.counts.total_edits
        total_ref += alignment.counts.ref_len
    if total_ref == 0:
        raise UndefinedMetricError("corpus WER is undefined without reference words")
    return Fraction(total_edits, total_ref)


def alignment_record(utterance_id: str, alignment: Alignment) -> dict[str, Any]:
    """JSONL-ready per-utterance alignment dump."""
    counts = alignment.counts
    return {
        "id": utterance_id,
        "S": counts.substitutions,
        "I": counts.insertions,
        "D": counts.deletions,
        "N": counts.ref_len,
        "wer": float(wer(counts)) if counts.ref_len else None,
        "ops": [[op.kind, op.ref_token, op.hyp_token] for op in alignment.ops],
    }
