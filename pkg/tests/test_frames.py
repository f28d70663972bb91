from __future__ import annotations

import random

import pytest

from asreval.errors import CorpusFormatError, InputError, UndefinedMetricError
from asreval.frames import (
    FrameParseError,
    SemanticNode,
    drop_slot_text,
    frame_metrics,
    load_frame_annotations,
    parse_frame,
    serialize_frame,
    top_intent,
)

REMINDER = (
    "[IN:CREATE_REMINDER [SL:PERSON_REMINDED me ] "
    "[SL:TODO [IN:CREATE_CALL [SL:METHOD call ] [SL:CONTACT John ] ] ] ]"
)


class TestParse:
    def test_nested_reminder_tree(self):
        tree = parse_frame(REMINDER)
        assert tree.kind == "intent"
        assert tree.label == "CREATE_REMINDER"
        person, todo = tree.children
        assert (person.label, person.tokens) == ("PERSON_REMINDED", ("me",))
        assert todo.label == "TODO"
        (call,) = todo.children
        assert call.label == "CREATE_CALL"
        method, contact = call.children
        assert method.tokens == ("call",)
        assert contact.tokens == ("John",)

    def test_bare_intent(self):
        tree = parse_frame("[IN:A ]")
        assert tree.label == "A"
        assert tree.parts == ()

    def test_root_must_be_intent(self):
        with pytest.raises(FrameParseError):
            parse_frame("[SL:X y ]")

    def test_slot_inside_slot_rejected(self):
        with pytest.raises(FrameParseError, match="slot"):
            parse_frame("[IN:A [SL:B [SL:C x ] ] ]")

    def test_intent_inside_intent_rejected(self):
        with pytest.raises(FrameParseError, match="intent"):
            parse_frame("[IN:A [IN:B ] ]")

    def test_unbalanced_open(self):
        with pytest.raises(FrameParseError, match="never closed"):
            parse_frame("[IN:A [SL:B x ]")

    def test_unbalanced_close(self):
        with pytest.raises(FrameParseError, match="unbalanced"):
            parse_frame("]")
        with pytest.raises(FrameParseError, match="after the root"):
            parse_frame("[IN:A ] ]")

    def test_malformed_label(self):
        with pytest.raises(FrameParseError, match="label"):
            parse_frame("[IN:lower_case ]")

    def test_error_reports_position(self):
        with pytest.raises(FrameParseError) as excinfo:
            parse_frame("[IN:A [SL:B x ] [SL:bad y ] ]")
        assert excinfo.value.position == 16

    def test_token_outside_node(self):
        with pytest.raises(FrameParseError, match="outside"):
            parse_frame("stray [IN:A ]")

    def test_content_after_root(self):
        with pytest.raises(FrameParseError, match="after the root"):
            parse_frame("[IN:A ] trailing")

    def test_attached_bracket_rejected(self):
        with pytest.raises(FrameParseError):
            parse_frame("[IN:A x]")


class TestSerialize:
    def test_canonical_round_trip_of_reminder(self):
        tree = parse_frame(REMINDER)
        assert serialize_frame(tree) == REMINDER
        assert parse_frame(serialize_frame(tree)) == tree

    def test_collapses_extra_whitespace_to_canonical(self):
        loose = "[IN:A   [SL:B   x   ]\n]"
        assert serialize_frame(parse_frame(loose)) == "[IN:A [SL:B x ] ]"


def random_tree(rng: random.Random, kind="intent", depth=0) -> SemanticNode:
    labels = ["ALPHA", "BRAVO", "CHARLIE", "DELTA_1", "ECHO_2"]
    words = ["go", "stop", "john", "home", "nine", "call"]
    parts: list[SemanticNode | str] = []
    budget = rng.randint(0, 3 if depth < 3 else 1)
    child_kind = "slot" if kind == "intent" else "intent"
    for _ in range(budget):
        if depth < 3 and rng.random() < 0.4:
            parts.append(random_tree(rng, kind=child_kind, depth=depth + 1))
        else:
            parts.append(rng.choice(words))
    return SemanticNode(kind=kind, label=rng.choice(labels), parts=tuple(parts))


class TestRoundTripProperty:
    def test_parse_serialize_identity_over_random_trees(self):
        rng = random.Random(1)
        for _ in range(300):
            tree = random_tree(rng)
            assert parse_frame(serialize_frame(tree)) == tree


class TestTopIntent:
    def test_reminder(self):
        assert top_intent(parse_frame(REMINDER)) == "CREATE_REMINDER"

    def test_bare(self):
        assert top_intent(parse_frame("[IN:A ]")) == "A"

    def test_depends_only_on_root(self):
        a = parse_frame("[IN:A [SL:B x ] ]")
        b = parse_frame("[IN:A [SL:C y z ] ]")
        assert top_intent(a) == top_intent(b)


class TestDropSlotText:
    def test_reminder_structure_kept_tokens_gone(self):
        stripped = drop_slot_text(parse_frame(REMINDER))
        assert serialize_frame(stripped) == (
            "[IN:CREATE_REMINDER [SL:PERSON_REMINDED ] "
            "[SL:TODO [IN:CREATE_CALL [SL:METHOD ] [SL:CONTACT ] ] ] ]"
        )

    def test_tokenless_tree_unchanged(self):
        tree = parse_frame("[IN:A [SL:B ] ]")
        assert drop_slot_text(tree) == tree

    def test_idempotent_over_random_trees(self):
        rng = random.Random(2)
        for _ in range(200):
            tree = random_tree(rng)
            once = drop_slot_text(tree)
            assert drop_slot_text(once) == once


class TestFrameMetrics:
    def test_all_identical(self):
        tree = parse_frame(REMINDER)
        metrics = frame_metrics([(tree, tree)] * 4)
        assert (metrics.intent_acc, metrics.em, metrics.em_tree) == (1.0, 1.0, 1.0)
        assert metrics.n == 4

    def test_slot_token_difference_counts_in_em_tree_only(self):
        gold = parse_frame("[IN:CREATE_CALL [SL:CONTACT john ] ]")
        pred = parse_frame("[IN:CREATE_CALL [SL:CONTACT jon ] ]")
        metrics = frame_metrics([(gold, pred)])
        assert metrics.intent_acc == 1.0
        assert metrics.em == 0.0
        assert metrics.em_tree == 1.0

    def test_token_comparison_case_insensitive(self):
        gold = parse_frame("[IN:A [SL:B John ] ]")
        pred = parse_frame("[IN:A [SL:B john ] ]")
        assert frame_metrics([(gold, pred)]).em == 1.0

    def test_child_order_significant(self):
        gold = parse_frame("[IN:A [SL:B x ] [SL:C y ] ]")
        pred = parse_frame("[IN:A [SL:C y ] [SL:B x ] ]")
        metrics = frame_metrics([(gold, pred)])
        assert metrics.em == 0.0
        assert metrics.em_tree == 0.0

    def test_empty_list_undefined(self):
        with pytest.raises(UndefinedMetricError):
            frame_metrics([])

    def test_em_le_em_tree_over_random_pairs(self):
        rng = random.Random(3)
        pairs = []
        for _ in range(1000):
            gold = random_tree(rng)
            pred = gold if rng.random() < 0.5 else random_tree(rng)
            pairs.append((gold, pred))
        metrics = frame_metrics(pairs)
        assert metrics.em <= metrics.em_tree


class TestNodeInvariants:
    def test_kind_checked(self):
        with pytest.raises(InputError):
            SemanticNode(kind="verb", label="A")

    def test_label_regex(self):
        with pytest.raises(InputError):
            SemanticNode(kind="intent", label="bad-label")

    def test_alternation_enforced_in_constructor(self):
        slot = SemanticNode(kind="slot", label="B")
        with pytest.raises(InputError):
            SemanticNode(kind="slot", label="A", parts=(slot,))

    def test_tokens_must_be_whitespace_free(self):
        with pytest.raises(InputError):
            SemanticNode(kind="intent", label="A", parts=("two words",))


class TestAnnotationsIO:
    def test_load(self, tmp_jsonl):
        import json

        path = tmp_jsonl(
            [
                json.dumps(
                    {"id": "u1", "gold_frame": "[IN:A x ]", "pred_frame": "[IN:A x ]"}
                ),
                json.dumps(
                    {"id": "u2", "gold_frame": "[IN:B ]", "pred_frame": "[IN:A ]"}
                ),
            ]
        )
        annotations = load_frame_annotations(path)
        assert [uid for uid, _, _ in annotations] == ["u1", "u2"]
        metrics = frame_metrics([(g, p) for _, g, p in annotations])
        assert metrics.intent_acc == 0.5

    def test_parse_error_names_line(self, tmp_jsonl):
        import json

        path = tmp_jsonl(
            [json.dumps({"id": "u1", "gold_frame": "[SL:A ]", "pred_frame": "[IN:A ]"})]
        )
        with pytest.raises(CorpusFormatError, match="line 1"):
            load_frame_annotations(path)
