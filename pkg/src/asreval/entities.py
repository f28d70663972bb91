"""Entity-set F1 between gold annotations (from references) and predicted
annotations (from hypotheses).

Entities match on (type, normalized surface string) with multiset
semantics — repeated identical entities must each be matched. Scores are
micro-averaged: true positives are per-utterance multiset intersections,
summed over the corpus.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import load_jsonl, normalize
from .errors import ContractError, CorpusFormatError

Entity = tuple[str, str]  # (type, normalized surface text)


@dataclass(frozen=True)
class EntitySet:
    """Multiset of typed entities for one utterance."""

    entities: tuple[Entity, ...]

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, str]]) -> "EntitySet":
        entities = []
        for record in records:
            entity_type = record.get("type", "")
            raw_text = record.get("text", "")
            if not entity_type:
                raise CorpusFormatError("entity type must be nonempty")
            text = normalize(raw_text).joined()
            if not text:
                raise CorpusFormatError(
                    f"entity text {raw_text!r} is empty after normalization"
                )
            entities.append((entity_type, text))
        return cls(entities=tuple(entities))

    def counter(self) -> Counter[Entity]:
        return Counter(self.entities)

    def __len__(self) -> int:
        return len(self.entities)


def entity_counts(gold: EntitySet, predicted: EntitySet) -> tuple[int, int, int]:
    """Per-utterance (true positives, predicted total, gold total)."""
    overlap = gold.counter() & predicted.counter()
    return sum(overlap.values()), len(predicted), len(gold)


@dataclass(frozen=True)
class EntityF1:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted_total: int
    gold_total: int

    @property
    def no_entities(self) -> bool:
        """Degenerate corpus: no entities on either side anywhere."""
        return self.predicted_total == 0 and self.gold_total == 0


def entity_f1(gold: Sequence[EntitySet], predicted: Sequence[EntitySet]) -> EntityF1:
    """Micro-averaged entity F1 over id-aligned utterance lists.

    Conventions: a corpus with no entities on either side scores 1.0
    (flagged via no_entities); otherwise an empty side yields 0 for its
    ratio, and F1 is 0 whenever there are no true positives.
    """
    if len(gold) != len(predicted):
        raise ContractError(
            f"gold and predicted lists differ in length: {len(gold)} vs {len(predicted)}"
        )
    tp = pred_total = gold_total = 0
    for gold_set, pred_set in zip(gold, predicted):
        utt_tp, utt_pred, utt_gold = entity_counts(gold_set, pred_set)
        tp += utt_tp
        pred_total += utt_pred
        gold_total += utt_gold

    if pred_total == 0 and gold_total == 0:
        return EntityF1(1.0, 1.0, 1.0, 0, 0, 0)
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EntityF1(precision, recall, f1, tp, pred_total, gold_total)


def load_entity_annotations(path: str | Path) -> dict[str, EntitySet]:
    """Read {"id", "entities": [{"type", "text"}, ...]} JSONL, keyed by id
    in file order."""
    annotations: dict[str, EntitySet] = {}
    for line_no, record in enumerate(load_jsonl(path), start=1):
        if "id" not in record:
            raise CorpusFormatError(f"line {line_no}: missing 'id' field")
        utterance_id = record["id"]
        if utterance_id in annotations:
            raise CorpusFormatError(f"line {line_no}: duplicate id {utterance_id!r}")
        try:
            annotations[utterance_id] = EntitySet.from_records(record.get("entities", []))
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"line {line_no}: {exc}") from exc
    return annotations
