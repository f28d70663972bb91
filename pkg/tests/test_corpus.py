from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asreval.corpus import (
    Corpus,
    UtterancePair,
    load_corpus,
    normalize,
    save_corpus,
)
from asreval.errors import CorpusFormatError, InputError


def test_normalize_lowercases_and_splits():
    assert normalize("This is a cat").tokens == ("this", "is", "a", "cat")


def test_normalize_collapses_whitespace():
    assert normalize("  She   is  ").tokens == ("she", "is")


def test_normalize_empty_input():
    assert normalize("").tokens == ()


def test_normalize_keeps_punctuation_attached():
    assert normalize("don't stop, now.").tokens == ("don't", "stop,", "now.")


def test_normalize_source_preserved():
    sentence = normalize("Mixed CASE text")
    assert sentence.source == "Mixed CASE text"
    assert sentence.joined() == "mixed case text"


@given(st.text(max_size=200))
@settings(max_examples=300)
def test_normalize_idempotent(text):
    once = normalize(text)
    again = normalize(once.joined())
    assert once.tokens == again.tokens


@given(st.text(max_size=200))
def test_normalize_tokens_have_no_whitespace(text):
    for token in normalize(text).tokens:
        assert token
        assert not any(c.isspace() for c in token)


# hand-counted token counts for a small mixed fixture
FIXTURE_SENTENCES = [
    ("this is a cat", 4),
    ("She is so cute", 4),
    ("we hitting that new club tonight girl", 7),
    ("aw you are all so sweet", 6),
    ("PLEASE REMIND ME TO CALL JOHN", 6),
    ("turn on the lights", 4),
    ("what's the weather tomorrow", 4),
    ("play  some   jazz", 3),
    (" set an alarm for six ", 5),
    ("call mom", 2),
    ("add milk to my shopping list", 6),
    ("how far is the moon", 5),
    ("je suis très fatigué", 4),
    ("Schön, dich zu sehen", 4),
    ("one", 1),
    ("two words", 2),
    ("a b c d e f g h", 8),
    ("don't forget the appointment", 4),
    ("it's 9 o'clock", 3),
    ("send a message to alex", 5),
]


def test_token_counts_match_manual_split():
    assert len(FIXTURE_SENTENCES) == 20
    for text, expected_count in FIXTURE_SENTENCES:
        assert len(normalize(text).tokens) == expected_count, text


class TestUtterancePair:
    def test_requires_nonempty_id(self):
        with pytest.raises(CorpusFormatError):
            UtterancePair(id="", reference="hello")

    def test_requires_nonempty_reference(self):
        with pytest.raises(CorpusFormatError):
            UtterancePair(id="u1", reference="   ")

    def test_hypothesis_may_be_empty(self):
        pair = UtterancePair(id="u1", reference="hello", hypothesis="")
        assert pair.normalized_hypothesis().tokens == ()

    def test_missing_hypothesis_rejected_at_use(self):
        pair = UtterancePair(id="u1", reference="hello")
        with pytest.raises(InputError):
            pair.normalized_hypothesis()


class TestCorpus:
    def test_duplicate_ids_rejected(self):
        pairs = (
            UtterancePair("u1", "a cat"),
            UtterancePair("u1", "a dog"),
        )
        with pytest.raises(CorpusFormatError, match="u1"):
            Corpus(name="c", pairs=pairs)

    def test_domain_tag_checked(self):
        with pytest.raises(InputError):
            Corpus(name="c", pairs=(), domain_tag="bogus")

    def test_reference_vocabulary_sorted_and_unique(self):
        corpus = Corpus(
            name="c",
            pairs=(
                UtterancePair("u1", "the cat sat"),
                UtterancePair("u2", "The cat ran"),
            ),
        )
        assert corpus.reference_vocabulary() == ("cat", "ran", "sat", "the")


class TestLoadCorpus:
    def test_two_line_file_order_preserved(self, tmp_jsonl):
        path = tmp_jsonl(
            [
                json.dumps({"id": "u1", "reference": "a cat", "hypothesis": "a cap"}),
                json.dumps({"id": "u2", "reference": "dogs bark"}),
            ]
        )
        corpus = load_corpus(path)
        assert corpus.ids() == ("u1", "u2")
        assert corpus.pairs[0].hypothesis == "a cap"
        assert corpus.pairs[1].hypothesis is None
        assert corpus.name == "data"

    def test_duplicate_id_names_the_id(self, tmp_jsonl):
        path = tmp_jsonl(
            [
                json.dumps({"id": "u1", "reference": "a"}),
                json.dumps({"id": "u1", "reference": "b"}),
            ]
        )
        with pytest.raises(CorpusFormatError, match="'u1'"):
            load_corpus(path)

    def test_malformed_line_names_line_number(self, tmp_jsonl):
        path = tmp_jsonl(
            [
                json.dumps({"id": "u1", "reference": "a"}),
                json.dumps({"id": "u2", "reference": "b"}),
                "{not json",
            ]
        )
        with pytest.raises(CorpusFormatError, match="line 3"):
            load_corpus(path)

    def test_missing_file(self):
        with pytest.raises(InputError, match="no/such/file"):
            load_corpus("no/such/file.jsonl")

    def test_extension_fields_preserved(self, tmp_jsonl):
        path = tmp_jsonl(
            [
                json.dumps(
                    {
                        "id": "u1",
                        "reference": "call john",
                        "hypothesis": "call jon",
                        "frame": "[IN:CREATE_CALL [SL:CONTACT john ] ]",
                        "entities": [{"type": "PERSON", "text": "john"}],
                    }
                )
            ]
        )
        corpus = load_corpus(path)
        assert corpus.pairs[0].extras["frame"] == "[IN:CREATE_CALL [SL:CONTACT john ] ]"
        assert corpus.pairs[0].extras["entities"] == [{"type": "PERSON", "text": "john"}]


class TestRoundTrip:
    def test_simple_round_trip(self, tmp_path):
        corpus = Corpus(
            name="rt",
            pairs=(
                UtterancePair("u1", "a cat", "a cap", {"frame": "[IN:X ]"}),
                UtterancePair("u2", "dogs bark", None),
                UtterancePair("u3", "hello there", ""),
            ),
        )
        path = tmp_path / "rt.jsonl"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert loaded.pairs == corpus.pairs

    def test_empty_hypothesis_serialized_explicitly(self, tmp_path):
        corpus = Corpus(name="c", pairs=(UtterancePair("u1", "a cat", ""),))
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        record = json.loads(path.read_text().strip())
        assert record["hypothesis"] == ""

    def test_unwritable_path(self):
        corpus = Corpus(name="c", pairs=(UtterancePair("u1", "a cat"),))
        with pytest.raises(InputError):
            save_corpus(corpus, "/no/such/dir/out.jsonl")

    @given(
        rows=st.lists(
            st.tuples(
                st.text(
                    alphabet=st.characters(blacklist_categories=("Cs",)),
                    min_size=1,
                    max_size=30,
                ).filter(lambda t: bool(normalize(t).tokens)),
                st.one_of(
                    st.none(),
                    st.text(
                        alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30
                    ),
                ),
            ),
            max_size=20,
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_unicode_round_trip(self, rows, tmp_path_factory):
        pairs = tuple(
            UtterancePair(f"u{i}", reference, hypothesis)
            for i, (reference, hypothesis) in enumerate(rows)
        )
        corpus = Corpus(name="u", pairs=pairs)
        path = tmp_path_factory.mktemp("rt") / "corpus.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path).pairs == corpus.pairs


def normalize_import_guard():
    # `normalize` must be importable from the package root as well
    from asreval import normalize as root_normalize

    assert root_normalize is normalize
