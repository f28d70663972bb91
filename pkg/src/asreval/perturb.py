"""WER-preserving hypothesis perturbation.

Starting from a baseline hypothesis set and its alignments, builds:

* worse mode  — random-word substitutions/insertions and random-position
  deletions matching each utterance's S/I/D budget exactly, so hypotheses
  get semantically worse at identical WER.
* better mode — meaning-preserving edits (adjacent-word swaps consuming 2
  substitution errors each, article insertions consuming 1 each, and a
  function-word substitution as fallback) consuming the same total edit
  budget, so hypotheses get semantically better at identical WER.

Every generated hypothesis is re-verified with align(); random edits can
accidentally create a cheaper alignment, so failed attempts are
resampled. Generation is deterministic: the per-utterance RNG is seeded
from (recipe seed, utterance id), making results independent of
evaluation order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Any, Mapping

from .alignment import Alignment, ErrorCounts, INSERTION, SUBSTITUTION, align
from .corpus import Corpus, NormalizedSentence
from .errors import (
    InfeasibleBudgetError,
    InputError,
    UnsatisfiableBudgetError,
    VerificationError,
)
from .embeddings import stable_hash64

ARTICLES = ("a", "an", "the")
FUNCTION_WORDS = ("the", "a", "an", "so", "then", "well", "please", "just")

WORSE = "worse"
BETTER = "better"


@dataclass(frozen=True)
class PerturbationBudget:
    """Per-utterance error budget, taken from the baseline set's counts."""

    substitutions: int
    insertions: int
    deletions: int

    @classmethod
    def from_counts(cls, counts: ErrorCounts) -> "PerturbationBudget":
        return cls(counts.substitutions, counts.insertions, counts.deletions)

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def as_dict(self) -> dict[str, int]:
        return {"S": self.substitutions, "I": self.insertions, "D": self.deletions}


@dataclass(frozen=True)
class PerturbationRecipe:
    mode: str  # "worse" | "better"
    seed: int
    vocabulary: tuple[str, ...] = ()
    max_retries: int = 100

    def __post_init__(self) -> None:
        if self.mode not in (WORSE, BETTER):
            raise InputError(f"mode must be '{WORSE}' or '{BETTER}', got {self.mode!r}")
        if self.max_retries < 0:
            raise InputError("max_retries must be nonnegative")


def _utterance_rng(recipe: PerturbationRecipe, utterance_id: str, salt: str = "") -> random.Random:
    return random.Random(stable_hash64(recipe.seed, utterance_id, recipe.mode, salt))


def _as_sentence(tokens: list[str]) -> NormalizedSentence:
    return NormalizedSentence(tokens=tuple(tokens), source=" ".join(tokens))


def _worse_attempt(
    ref: tuple[str, ...],
    budget: PerturbationBudget,
    vocabulary: tuple[str, ...],
    rng: random.Random,
    avoid_interactions: bool,
    cluster_deletions: bool = False,
) -> list[str] | None:
    """One sampled edit script. With avoid_interactions set, placements
    that are known to collapse into cheaper alignments or re-labeled
    signatures are rejected: every insertion gap must keep enough matched
    survivors between itself and every deletion (see the anchor rule
    below), and substituted/inserted words must not duplicate nearby
    original tokens (a copy of a just-removed word re-matches and drops
    an edit). With cluster_deletions, deletions form one contiguous block
    at one end so an insertion gap with enough anchors exists whenever
    enough tokens survive. Returns None when no compliant placement was
    found this attempt.
    """
    n = len(ref)
    if cluster_deletions and budget.deletions:
        anchor = rng.choice([0, n - budget.deletions])
        del_positions = set(range(anchor, anchor + budget.deletions))
        remaining = [i for i in range(n) if i not in del_positions]
        sub_positions = rng.sample(remaining, budget.substitutions)
    else:
        positions = rng.sample(range(n), budget.substitutions + budget.deletions)
        sub_positions = positions[: budget.substitutions]
        del_positions = set(positions[budget.substitutions :])

    def nearby(original_index: int, radius: int = 2) -> set[str]:
        lo = max(0, original_index - radius)
        return set(ref[lo : original_index + radius + 1])

    tokens: list[str | None] = list(ref)
    substituted = set(sub_positions)
    for position in sub_positions:
        banned = nearby(position) if avoid_interactions else {ref[position]}
        candidates = [word for word in vocabulary if word not in banned]
        if not candidates:
            if avoid_interactions:
                return None
            raise UnsatisfiableBudgetError(
                f"vocabulary has no word distinct from {ref[position]!r}"
            )
        tokens[position] = rng.choice(candidates)
    for position in del_positions:
        tokens[position] = None

    survivor_origins = [i for i in range(n) if i not in del_positions]
    survivors = [tokens[i] for i in survivor_origins]
    # survivor-coordinate boundary of each deletion, and which survivors
    # still match their original token (substituted ones do not anchor the
    # alignment: a del..ins window with < 2 anchors between ties with an
    # all-substitution decomposition and the backtrace relabels it)
    boundaries = sorted(
        {sum(1 for i in range(p) if i not in del_positions) for p in del_positions}
    )
    anchored = [origin not in substituted for origin in survivor_origins]
    anchor_prefix = [0]
    for is_anchor in anchored:
        anchor_prefix.append(anchor_prefix[-1] + int(is_anchor))

    def anchors_between(gap: int, boundary: int) -> int:
        lo, hi = min(gap, boundary), max(gap, boundary)
        return anchor_prefix[hi] - anchor_prefix[lo]

    gap_count = len(survivors) + 1
    if avoid_interactions and budget.insertions and boundaries:
        # a del-group of size d and an ins-group of size i re-label as
        # substitutions whenever the anchor run between them is <= min(d, i)
        separation = min(budget.deletions, budget.insertions) + 1
        valid_gaps = [
            g for g in range(gap_count)
            if all(anchors_between(g, b) >= separation for b in boundaries)
        ]
        if not valid_gaps:
            return None
    else:
        valid_gaps = list(range(gap_count))

    inserts: list[tuple[int, str]] = []
    for _ in range(budget.insertions):
        gap = rng.choice(valid_gaps)
        if avoid_interactions:
            window_origins = survivor_origins[max(0, gap - 2) : gap + 2]
            banned = set()
            for origin in window_origins:
                banned |= nearby(origin, radius=1)
            candidates = [word for word in vocabulary if word not in banned]
            if not candidates:
                return None
        else:
            candidates = list(vocabulary)
        inserts.append((gap, rng.choice(candidates)))
    for gap, word in sorted(inserts, reverse=True):
        survivors.insert(gap, word)
    return survivors


def generate_worse(
    reference: NormalizedSentence,
    budget: PerturbationBudget,
    recipe: PerturbationRecipe,
    utterance_id: str = "",
) -> tuple[NormalizedSentence, int]:
    """Random-word perturbation matching the budget's S/I/D exactly.

    Substitutions and deletions are placed at distinct original-reference
    positions; substituted words are never the original word; insertions
    land in the intermediate sequence. Early attempts avoid placements
    that provably collapse into cheaper alignments; later attempts fall
    back to fully unconstrained sampling. Every attempt is verified with
    align() and resampled on mismatch. Returns the sentence and the
    retries spent.
    """
    if recipe.mode != WORSE:
        raise InputError("generate_worse requires a worse-mode recipe")
    vocabulary = recipe.vocabulary
    if not vocabulary:
        raise InputError("worse mode needs a nonempty substitution vocabulary")
    ref = reference.tokens
    n = len(ref)
    if budget.substitutions + budget.deletions > n:
        raise InfeasibleBudgetError(
            f"budget S+D={budget.substitutions + budget.deletions} exceeds "
            f"reference length {n}",
            utterance_id=utterance_id or None,
        )

    rng = _utterance_rng(recipe, utterance_id)
    attempts = recipe.max_retries + 1
    # three sampling tiers: free placement with interaction avoidance,
    # clustered deletions when free placement leaves no room, then fully
    # unconstrained; align() verification gates all of them
    tier1 = max(1, (attempts * 3) // 5)
    tier2 = max(tier1 + 1, attempts - attempts // 6)
    for attempt in range(attempts):
        try:
            tokens = _worse_attempt(
                ref, budget, vocabulary, rng,
                avoid_interactions=attempt < tier2,
                cluster_deletions=tier1 <= attempt < tier2,
            )
        except UnsatisfiableBudgetError as exc:
            exc.utterance_id = utterance_id or None
            exc.retries = attempt
            raise
        if tokens is None:
            continue
        counts = align(ref, tokens).counts
        if PerturbationBudget.from_counts(counts) == budget:
            return _as_sentence(tokens), attempt
    raise UnsatisfiableBudgetError(
        f"could not realize budget {budget.as_dict()} within "
        f"{recipe.max_retries} retries",
        utterance_id=utterance_id or None,
        retries=recipe.max_retries,
    )


def _swap_sites(ref: tuple[str, ...], rng: random.Random, wanted: int) -> list[int]:
    """Pick up to `wanted` non-overlapping adjacent positions with distinct
    tokens, in random order."""
    candidates = [i for i in range(len(ref) - 1) if ref[i] != ref[i + 1]]
    rng.shuffle(candidates)
    picked: list[int] = []
    for site in candidates:
        if len(picked) >= wanted:
            break
        if all(abs(site - other) >= 2 for other in picked):
            picked.append(site)
    return picked


def _verify_better(
    alignment: Alignment, total: int, fallback_word: str | None
) -> bool:
    """A better-mode output must spend exactly `total` edits, all of them
    swap-induced substitution pairs, article insertions, or the single
    declared fallback substitution."""
    if alignment.counts.total_edits != total or alignment.counts.deletions != 0:
        return False
    ops = alignment.ops
    fallback_seen = 0
    index = 0
    while index < len(ops):
        op = ops[index]
        if op.kind == INSERTION:
            if op.hyp_token not in ARTICLES:
                return False
            index += 1
        elif op.kind == SUBSTITUTION:
            nxt = ops[index + 1] if index + 1 < len(ops) else None
            if (
                nxt is not None
                and nxt.kind == SUBSTITUTION
                and op.ref_token == nxt.hyp_token
                and op.hyp_token == nxt.ref_token
            ):
                index += 2  # crossed pair: an adjacent swap
            elif fallback_word is not None and op.hyp_token == fallback_word:
                fallback_seen += 1
                index += 1
            else:
                return False
        else:
            index += 1
    if fallback_word is not None and fallback_seen != 1:
        return False
    return True


def generate_better(
    reference: NormalizedSentence,
    budget: PerturbationBudget,
    recipe: PerturbationRecipe,
    utterance_id: str = "",
    extra_edits: int = 0,
    rng_salt: str = "",
) -> tuple[NormalizedSentence, int]:
    """Meaning-preserving perturbation consuming budget.total (+extra)
    edits: floor(S/2) adjacent swaps, the rest article insertions; odd
    leftover substitution budget and all deletion budget become article
    insertions, or a single function-word substitution when verification
    demands it. Returns the sentence and the retries spent.
    """
    if recipe.mode != BETTER:
        raise InputError("generate_better requires a better-mode recipe")
    ref = reference.tokens
    total = budget.total + extra_edits
    if total == 0:
        return _as_sentence(list(ref)), 0

    rng = _utterance_rng(recipe, utterance_id, rng_salt)
    attempts = recipe.max_retries + 1
    plain_attempts = max(1, attempts - attempts // 3)  # leave retries for the fallback
    for attempt in range(attempts):
        use_fallback = attempt >= plain_attempts
        sites = _swap_sites(ref, rng, budget.substitutions // 2)
        articles = total - 2 * len(sites)

        tokens = list(ref)
        for site in sites:
            tokens[site], tokens[site + 1] = tokens[site + 1], tokens[site]

        fallback_word: str | None = None
        if use_fallback and articles >= 1:
            swapped = {s for site in sites for s in (site, site + 1)}
            free = [i for i in range(len(ref)) if i not in swapped]
            if free:
                position = rng.choice(free)
                choices = [w for w in FUNCTION_WORDS if w != ref[position]]
                fallback_word = rng.choice(choices)
                tokens[position] = fallback_word
                articles -= 1

        for _ in range(articles):
            tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(ARTICLES))

        alignment = align(ref, tokens)
        if _verify_better(alignment, total, fallback_word):
            return _as_sentence(tokens), attempt
    raise UnsatisfiableBudgetError(
        f"could not realize {total} meaning-preserving edits within "
        f"{recipe.max_retries} retries",
        utterance_id=utterance_id or None,
        retries=recipe.max_retries,
    )


def generate_set(
    corpus: Corpus,
    recipe: PerturbationRecipe,
    alignments: Mapping[str, Alignment] | None = None,
) -> tuple[Corpus, list[dict[str, Any]]]:
    """Perturb a whole baseline set, preserving corpus WER exactly.

    `alignments` maps utterance id to the baseline alignment (computed
    from the corpus hypotheses when omitted) and must cover every
    utterance. Budgets are enforced per-utterance in worse mode; in
    better mode an utterance whose budget cannot be realized falls back
    to its unedited reference and the leftover edits are redistributed as
    article insertions to the longest other utterances, keeping corpus
    totals equal. Returns the new corpus plus a manifest of per-utterance
    seeds, budgets, and retry counts.
    """
    if alignments is None:
        alignments = {
            pair.id: align(pair.normalized_reference(), pair.normalized_hypothesis())
            for pair in corpus
        }
    missing = [pair.id for pair in corpus if pair.id not in alignments]
    if missing:
        raise InputError(f"alignments missing for ids: {missing}")

    if not recipe.vocabulary:
        recipe = replace(recipe, vocabulary=corpus.reference_vocabulary())

    outputs: dict[str, NormalizedSentence] = {}
    manifest: list[dict[str, Any]] = []
    budgets: dict[str, PerturbationBudget] = {}
    retries: dict[str, int] = {}
    failed: list[str] = []

    for pair in corpus:
        reference = pair.normalized_reference()
        budget = PerturbationBudget.from_counts(alignments[pair.id].counts)
        budgets[pair.id] = budget
        try:
            if recipe.mode == WORSE:
                sentence, spent = generate_worse(reference, budget, recipe, pair.id)
            else:
                sentence, spent = generate_better(reference, budget, recipe, pair.id)
        except UnsatisfiableBudgetError:
            if recipe.mode == WORSE:
                failed.append(pair.id)
                continue
            sentence, spent = reference, recipe.max_retries
            failed.append(pair.id)
        outputs[pair.id] = sentence
        retries[pair.id] = spent

    if recipe.mode == WORSE and failed:
        raise UnsatisfiableBudgetError(
            f"unsatisfiable budgets for utterances: {failed}",
            utterance_id=failed[0],
            retries=recipe.max_retries,
        )

    if recipe.mode == BETTER and failed:
        _reallocate_better(corpus, recipe, budgets, outputs, retries, failed)

    total_budget = sum(budgets[pair.id].total for pair in corpus)
    total_generated = sum(
        align(pair.normalized_reference(), outputs[pair.id]).counts.total_edits
        for pair in corpus
    )
    if total_generated != total_budget:
        raise VerificationError(
            f"corpus edit totals diverged: generated {total_generated}, "
            f"budgeted {total_budget}"
        )

    for pair in corpus:
        manifest.append(
            {
                "id": pair.id,
                "mode": recipe.mode,
                "seed": stable_hash64(recipe.seed, pair.id, recipe.mode, ""),
                "budget": budgets[pair.id].as_dict(),
                "retries": retries[pair.id],
                "hypothesis": outputs[pair.id].joined(),
            }
        )
    perturbed = corpus.with_hypotheses({uid: s.joined() for uid, s in outputs.items()})
    return perturbed, manifest


def _reallocate_better(
    corpus: Corpus,
    recipe: PerturbationRecipe,
    budgets: Mapping[str, PerturbationBudget],
    outputs: dict[str, NormalizedSentence],
    retries: dict[str, int],
    failed: list[str],
) -> None:
    """Move edits that a failed utterance could not host onto the longest
    other utterances as extra article insertions."""
    leftover = sum(budgets[uid].total for uid in failed)
    hosts = sorted(
        (pair for pair in corpus if pair.id not in failed),
        key=lambda pair: len(pair.normalized_reference().tokens),
        reverse=True,
    )
    for pair in hosts:
        if leftover == 0:
            break
        reference = pair.normalized_reference()
        try:
            sentence, spent = generate_better(
                reference,
                budgets[pair.id],
                recipe,
                pair.id,
                extra_edits=leftover,
                rng_salt="realloc",
            )
        except UnsatisfiableBudgetError:
            continue
        outputs[pair.id] = sentence
        retries[pair.id] = spent
        leftover = 0
    if leftover:
        raise UnsatisfiableBudgetError(
            f"unsatisfiable better-mode budgets for utterances: {failed} "
            f"({leftover} edits could not be reallocated)",
            utterance_id=failed[0],
            retries=recipe.max_retries,
        )
