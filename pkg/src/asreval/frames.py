"""Decoupled intent/slot parse trees: parser, serializer, comparators,
and the three frame-level metrics (intent accuracy, exact match, exact
match on the token-stripped tree).

Canonical serialization, single-space separated:

    [IN:LABEL token ... [SL:LABEL token ... ] ... ]

Intents nest only slots and slots nest only intents. Labels are
uppercase [A-Z0-9_]+.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from .corpus import load_jsonl, normalize
from .errors import CorpusFormatError, InputError, UndefinedMetricError

INTENT = "intent"
SLOT = "slot"

_LABEL_RE = re.compile(r"[A-Z0-9_]+\Z")
_PREFIXES = {"IN:": INTENT, "SL:": SLOT}


class FrameParseError(InputError):
    """Malformed serialized frame; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class SemanticNode:
    """One intent or slot node. ``parts`` interleaves leaf text tokens and
    child nodes in serialization order."""

    kind: str
    label: str
    parts: tuple[Union["SemanticNode", str], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (INTENT, SLOT):
            raise InputError(f"node kind must be intent or slot, got {self.kind!r}")
        if not _LABEL_RE.match(self.label):
            raise InputError(f"malformed label {self.label!r} (expected [A-Z0-9_]+)")
        for part in self.parts:
            if isinstance(part, SemanticNode):
                if part.kind == self.kind:
                    raise InputError(
                        f"{self.kind} {self.label} cannot nest another {part.kind} "
                        f"({part.label}) directly"
                    )
            elif not isinstance(part, str) or not part or any(c.isspace() for c in part):
                raise InputError(f"leaf token {part!r} must be nonempty and whitespace-free")

    @property
    def children(self) -> tuple["SemanticNode", ...]:
        return tuple(p for p in self.parts if isinstance(p, SemanticNode))

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(p for p in self.parts if isinstance(p, str))


def parse_frame(serialized: str) -> SemanticNode:
    """Parse the bracketed serialization into a tree.

    Grammar (whitespace-separated): '[' ('IN:'|'SL:') LABEL (token | subtree)* ']'
    The root must be an intent. Errors report the character position.
    """
    # each piece is "[IN:LABEL", "[SL:LABEL", "]", or a plain token
    stack: list[tuple[str, str, int, list[SemanticNode | str]]] = []
    root: SemanticNode | None = None
    for match in re.finditer(r"\S+", serialized):
        piece, position = match.group(), match.start()
        if root is not None:
            raise FrameParseError("content after the root closes", position)
        if piece.startswith("["):
            head = piece[1:]
            prefix = head[:3]
            if prefix not in _PREFIXES:
                raise FrameParseError(
                    f"opening bracket must be [IN: or [SL:, got {piece!r}", position
                )
            kind = _PREFIXES[prefix]
            label = head[3:]
            if not _LABEL_RE.match(label):
                raise FrameParseError(f"malformed label {label!r}", position)
            if not stack and kind != INTENT:
                raise FrameParseError("root node must be an intent", position)
            if stack and stack[-1][0] == kind:
                raise FrameParseError(
                    f"{kind} cannot nest directly inside another {kind}", position
                )
            stack.append((kind, label, position, []))
        elif piece == "]":
            if not stack:
                raise FrameParseError("unbalanced ']'", position)
            kind, label, _, parts = stack.pop()
            node = SemanticNode(kind=kind, label=label, parts=tuple(parts))
            if stack:
                stack[-1][3].append(node)
            else:
                root = node
        else:
            if "]" in piece or "[" in piece:
                raise FrameParseError(f"brackets must be whitespace-separated: {piece!r}", position)
            if not stack:
                raise FrameParseError(f"token {piece!r} outside any node", position)
            stack[-1][3].append(piece)
    if stack:
        raise FrameParseError("unbalanced '[': node never closed", stack[-1][2])
    if root is None:
        raise FrameParseError("empty input", 0)
    return root


def serialize_frame(node: SemanticNode) -> str:
    """Canonical single-space serialization; parse(serialize(t)) == t."""
    prefix = "IN:" if node.kind == INTENT else "SL:"
    pieces = [f"[{prefix}{node.label}"]
    for part in node.parts:
        pieces.append(serialize_frame(part) if isinstance(part, SemanticNode) else part)
    pieces.append("]")
    return " ".join(pieces)


def top_intent(tree: SemanticNode) -> str:
    """Label of the root intent."""
    return tree.label


def drop_slot_text(tree: SemanticNode) -> SemanticNode:
    """Same shape and labels with every leaf token list emptied. Idempotent."""
    return SemanticNode(
        kind=tree.kind,
        label=tree.label,
        parts=tuple(drop_slot_text(p) for p in tree.parts if isinstance(p, SemanticNode)),
    )


def _normalized_tree(tree: SemanticNode) -> SemanticNode:
    """Tokens folded through the WER text normalization, so exact match is
    case-insensitive and consistent with the rest of the pipeline."""
    parts: list[SemanticNode | str] = []
    for part in tree.parts:
        if isinstance(part, SemanticNode):
            parts.append(_normalized_tree(part))
        else:
            parts.extend(normalize(part).tokens)
    return SemanticNode(kind=tree.kind, label=tree.label, parts=tuple(parts))


@dataclass(frozen=True)
class FrameMetrics:
    intent_acc: float
    em: float
    em_tree: float
    n: int


def frame_metrics(pairs: Iterable[tuple[SemanticNode, SemanticNode]]) -> FrameMetrics:
    """Score (gold, predicted) tree pairs.

    intent_acc: equal top-level intent. em: whole trees equal (labels,
    structure, and normalized tokens, order-sensitive). em_tree: equal
    after dropping slot text on both sides. em <= em_tree by construction.
    """
    pairs = list(pairs)
    if not pairs:
        raise UndefinedMetricError("frame metrics are undefined for an empty pair list")
    intent_hits = em_hits = em_tree_hits = 0
    for gold, predicted in pairs:
        if top_intent(gold) == top_intent(predicted):
            intent_hits += 1
        if _normalized_tree(gold) == _normalized_tree(predicted):
            em_hits += 1
        if drop_slot_text(gold) == drop_slot_text(predicted):
            em_tree_hits += 1
    n = len(pairs)
    return FrameMetrics(
        intent_acc=intent_hits / n,
        em=em_hits / n,
        em_tree=em_tree_hits / n,
        n=n,
    )


def load_frame_annotations(path: str | Path) -> list[tuple[str, SemanticNode, SemanticNode]]:
    """Read {"id", "gold_frame", "pred_frame"} JSONL into parsed pairs."""
    annotations = []
    for line_no, record in enumerate(load_jsonl(path), start=1):
        try:
            utterance_id = record["id"]
            gold = parse_frame(record["gold_frame"])
            predicted = parse_frame(record["pred_frame"])
        except KeyError as exc:
            raise CorpusFormatError(f"line {line_no}: missing field {exc}") from exc
        except FrameParseError as exc:
            raise CorpusFormatError(f"line {line_no}: {exc}") from exc
        annotations.append((utterance_id, gold, predicted))
    return annotations
