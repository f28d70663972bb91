"""Corpus data model, text normalization, and JSONL ingestion/persistence.

A corpus is an ordered list of (reference, hypothesis) utterance pairs.
The exchange format is JSONL, one record per line:

    {"id": str, "reference": str, "hypothesis": str?}

Records may carry extension fields ("frame", "entities", ...) which are
preserved opaquely across load/save round trips.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import CorpusFormatError, InputError

DOMAIN_TAGS = ("open", "assistant", "other")

_LABEL_KEYS = ("id", "reference", "hypothesis")


@dataclass(frozen=True)
class NormalizedSentence:
    """Token sequence produced by :func:`normalize`, plus the raw text it
    came from."""

    tokens: tuple[str, ...]
    source: str

    def __len__(self) -> int:
        return len(self.tokens)

    def joined(self) -> str:
        return " ".join(self.tokens)


def normalize(text: str) -> NormalizedSentence:
    """Normalize raw text into word tokens.

    Unicode canonical composition (NFC), lowercasing, then whitespace
    tokenization; runs of whitespace collapse and leading/trailing
    whitespace is dropped. Idempotent: normalizing the joined tokens
    reproduces the same token list. Punctuation stays attached to tokens.
    """
    composed = unicodedata.normalize("NFC", text)
    return NormalizedSentence(tokens=tuple(composed.lower().split()), source=text)


@dataclass(frozen=True)
class UtterancePair:
    """One reference transcription plus one hypothesis; the atomic scoring
    unit.

    ``hypothesis`` is None when the record carried no hypothesis at all;
    an empty string is a real (fully deleted) hypothesis and is preserved
    as such.
    """

    id: str
    reference: str
    hypothesis: str | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusFormatError("utterance id must be nonempty")
        if not normalize(self.reference).tokens:
            raise CorpusFormatError(
                f"reference of utterance {self.id!r} is empty after normalization"
            )

    def normalized_reference(self) -> NormalizedSentence:
        return normalize(self.reference)

    def normalized_hypothesis(self) -> NormalizedSentence:
        if self.hypothesis is None:
            raise InputError(f"utterance {self.id!r} has no hypothesis")
        return normalize(self.hypothesis)

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {"id": self.id, "reference": self.reference}
        if self.hypothesis is not None:
            record["hypothesis"] = self.hypothesis
        record.update(self.extras)
        return record

    def with_hypothesis(self, hypothesis: str) -> "UtterancePair":
        return UtterancePair(self.id, self.reference, hypothesis, dict(self.extras))


@dataclass(frozen=True)
class Corpus:
    """Named, ordered collection of utterance pairs with distinct ids."""

    name: str
    pairs: tuple[UtterancePair, ...]
    domain_tag: str = "other"

    def __post_init__(self) -> None:
        if self.domain_tag not in DOMAIN_TAGS:
            raise InputError(
                f"domain_tag must be one of {DOMAIN_TAGS}, got {self.domain_tag!r}"
            )
        seen: set[str] = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise CorpusFormatError(f"duplicate utterance id {pair.id!r}")
            seen.add(pair.id)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def ids(self) -> tuple[str, ...]:
        return tuple(pair.id for pair in self.pairs)

    def get(self, utterance_id: str) -> UtterancePair:
        for pair in self.pairs:
            if pair.id == utterance_id:
                return pair
        raise KeyError(utterance_id)

    def reference_vocabulary(self) -> tuple[str, ...]:
        """All distinct normalized reference tokens, sorted for determinism."""
        vocab: set[str] = set()
        for pair in self.pairs:
            vocab.update(pair.normalized_reference().tokens)
        return tuple(sorted(vocab))

    def with_hypotheses(self, hypotheses: Mapping[str, str]) -> "Corpus":
        """New corpus with hypotheses replaced; ids and references kept."""
        missing = [p.id for p in self.pairs if p.id not in hypotheses]
        if missing:
            raise InputError(f"hypotheses missing for ids: {missing}")
        return Corpus(
            name=self.name,
            pairs=tuple(p.with_hypothesis(hypotheses[p.id]) for p in self.pairs),
            domain_tag=self.domain_tag,
        )


def _pair_from_record(record: Any, line_no: int) -> UtterancePair:
    if not isinstance(record, dict):
        raise CorpusFormatError(f"line {line_no}: record is not a JSON object")
    if "id" not in record:
        raise CorpusFormatError(f"line {line_no}: missing 'id' field")
    if "reference" not in record:
        raise CorpusFormatError(f"line {line_no}: missing 'reference' field")
    utterance_id = record["id"]
    reference = record["reference"]
    hypothesis = record.get("hypothesis")
    if not isinstance(utterance_id, str) or not isinstance(reference, str):
        raise CorpusFormatError(f"line {line_no}: 'id' and 'reference' must be strings")
    if hypothesis is not None and not isinstance(hypothesis, str):
        raise CorpusFormatError(f"line {line_no}: 'hypothesis' must be a string")
    extras = {k: v for k, v in record.items() if k not in _LABEL_KEYS}
    try:
        return UtterancePair(utterance_id, reference, hypothesis, extras)
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"line {line_no}: {exc}") from exc


def load_corpus(
    path: str | Path,
    name: str | None = None,
    domain_tag: str = "other",
) -> Corpus:
    """Load a corpus from a JSONL file, preserving record order.

    Raises CorpusFormatError naming the line number for malformed lines
    and naming the id for duplicates. ``name`` defaults to the file stem.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"corpus file not found: {path}")
    pairs: list[UtterancePair] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            pair = _pair_from_record(record, line_no)
            if pair.id in seen:
                raise CorpusFormatError(f"line {line_no}: duplicate utterance id {pair.id!r}")
            seen.add(pair.id)
            pairs.append(pair)
    return Corpus(name=name if name is not None else path.stem, pairs=tuple(pairs), domain_tag=domain_tag)


def save_corpus(corpus: Corpus | Iterable[UtterancePair], path: str | Path) -> None:
    """Write pairs as JSONL such that load_corpus reproduces them
    field-for-field (empty hypotheses stay explicit empty strings)."""
    path = Path(path)
    pairs = corpus.pairs if isinstance(corpus, Corpus) else tuple(corpus)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for pair in pairs:
                handle.write(json.dumps(pair.to_record(), ensure_ascii=False, sort_keys=False))
                handle.write("\n")
    except OSError as exc:
        raise InputError(f"cannot write corpus to {path}: {exc}") from exc


_JSON_LINE = re.compile(r"\S")


def load_jsonl(path: str | Path) -> list[dict[str, Any]]:
    """Read generic JSONL records (used for annotations and metric dumps)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    records: list[dict[str, Any]] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not _JSON_LINE.search(line):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"line {line_no}: record is not a JSON object")
            records.append(record)
    return records


def save_jsonl(records: Iterable[Mapping[str, Any]], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(dict(record), ensure_ascii=False))
                handle.write("\n")
    except OSError as exc:
        raise InputError(f"cannot write to {path}: {exc}") from exc
