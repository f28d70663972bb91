"""Command-line interface.

Subcommands: wer, semdist, perturb, nlu-eval, ner-eval, report. Every run
writes a machine-readable config echo next to its outputs so results are
reproducible from the echo alone. Exit codes: 0 success, 1 input/IO
error, 2 contract/verification failure, 3 backend/transport failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .alignment import Alignment, align, alignment_record, corpus_wer
from .analytics import UtteranceRecord, build_report, render, scatter_csv
from .corpus import Corpus, load_corpus, load_jsonl, save_corpus, save_jsonl
from .embeddings import parse_backend
from .entities import entity_counts, entity_f1, load_entity_annotations
from .errors import AsrEvalError, BackendError, ContractError, InputError
from .frames import drop_slot_text, frame_metrics, load_frame_annotations, top_intent, _normalized_tree
from .perturb import PerturbationRecipe, generate_set
from .semdist import score_corpus

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONTRACT = 2
EXIT_BACKEND = 3


def _percent(ratio: Fraction | float) -> str:
    return f"{float(ratio) * 100.0:.2f}%"


def _write_config_echo(anchor: Path, subcommand: str, options: dict[str, Any]) -> None:
    """Drop `<anchor>.config.json` beside the outputs: the subcommand and
    every option needed to reproduce the run."""
    echo = {
        "tool": "asreval",
        "version": __version__,
        "subcommand": subcommand,
        "options": {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(options.items())
            if not callable(v)
        },
    }
    path = anchor.with_name(anchor.name + ".config.json")
    path.write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_with_overlay(corpus_path: str, hypotheses_path: str | None) -> Corpus:
    corpus = load_corpus(corpus_path)
    if hypotheses_path is None:
        return corpus
    overlay = load_corpus(hypotheses_path)
    return corpus.with_hypotheses(
        {p.id: p.hypothesis for p in overlay if p.hypothesis is not None}
    )


def _align_corpus(corpus: Corpus) -> dict[str, Alignment]:
    return {
        pair.id: align(pair.normalized_reference(), pair.normalized_hypothesis())
        for pair in corpus
    }


def cmd_wer(args: argparse.Namespace) -> int:
    corpus = _load_with_overlay(args.corpus, args.hypotheses)
    alignments = _align_corpus(corpus)
    pooled = corpus_wer(alignments.values())
    print(f"utterances: {len(corpus)}")
    print(f"corpus WER: {_percent(pooled)}")
    if args.dump_alignments:
        out = Path(args.dump_alignments)
        save_jsonl(
            (alignment_record(pair.id, alignments[pair.id]) for pair in corpus), out
        )
        _write_config_echo(out, "wer", vars(args))
    return EXIT_OK


def cmd_semdist(args: argparse.Namespace) -> int:
    corpus = _load_with_overlay(args.corpus, args.hypotheses)
    backend = parse_backend(args.backend, jobs=args.jobs)
    result = score_corpus(corpus, backend)
    print(f"utterances: {len(corpus)}")
    print(f"backend: {result.backend_identity}")
    print(f"corpus SemDist: {result.mean:.4f}")
    if args.scores:
        out = Path(args.scores)
        save_jsonl(
            ({"id": uid, "semdist": score} for uid, score in result.scores), out
        )
        _write_config_echo(out, "semdist", vars(args))
    return EXIT_OK


def cmd_perturb(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    recipe = PerturbationRecipe(mode=args.mode, seed=args.seed, max_retries=args.max_retries)
    alignments = _align_corpus(corpus)
    baseline_wer = corpus_wer(alignments.values())
    perturbed, manifest = generate_set(corpus, recipe, alignments)
    perturbed_wer = corpus_wer(_align_corpus(perturbed).values())
    if perturbed_wer != baseline_wer:
        raise ContractError(
            f"perturbed corpus WER {perturbed_wer} != baseline {baseline_wer}"
        )
    print(f"baseline WER:  {_percent(baseline_wer)}")
    print(f"perturbed WER: {_percent(perturbed_wer)}")
    out = Path(args.output)
    save_corpus(perturbed, out)
    if args.manifest:
        save_jsonl(manifest, Path(args.manifest))
    _write_config_echo(out, "perturb", vars(args))
    return EXIT_OK


def cmd_nlu_eval(args: argparse.Namespace) -> int:
    annotations = load_frame_annotations(args.frames)
    if not annotations:
        raise InputError(f"no frame annotations in {args.frames}")
    metrics = frame_metrics([(gold, pred) for _, gold, pred in annotations])
    print(f"utterances: {metrics.n}")
    print(f"intent accuracy: {_percent(metrics.intent_acc)}")
    print(f"exact match:     {_percent(metrics.em)}")
    print(f"exact match tree: {_percent(metrics.em_tree)}")
    if args.output:
        out = Path(args.output)
        out.write_text(
            json.dumps(
                {
                    "n": metrics.n,
                    "intent_acc": metrics.intent_acc,
                    "em": metrics.em,
                    "em_tree": metrics.em_tree,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        _write_config_echo(out, "nlu-eval", vars(args))
    return EXIT_OK


def cmd_ner_eval(args: argparse.Namespace) -> int:
    gold = load_entity_annotations(args.gold)
    predicted = load_entity_annotations(args.pred)
    missing = [uid for uid in gold if uid not in predicted]
    if missing:
        raise InputError(f"predicted entities missing for ids: {missing[:10]}")
    ids = list(gold)
    score = entity_f1([gold[uid] for uid in ids], [predicted[uid] for uid in ids])
    print(f"utterances: {len(ids)}")
    print(f"precision: {score.precision:.3f}")
    print(f"recall:    {score.recall:.3f}")
    print(f"F1:        {score.f1:.3f}")
    if score.no_entities:
        print("note: no entities on either side; F1 degenerate at 1.0")
    if args.output:
        out = Path(args.output)
        out.write_text(
            json.dumps(
                {
                    "precision": score.precision,
                    "recall": score.recall,
                    "f1": score.f1,
                    "true_positives": score.true_positives,
                    "predicted_total": score.predicted_total,
                    "gold_total": score.gold_total,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        _write_config_echo(out, "ner-eval", vars(args))
    return EXIT_OK


def _records_from_files(args: argparse.Namespace) -> list[UtteranceRecord]:
    from .alignment import ErrorCounts

    wer_rows = {row["id"]: row for row in load_jsonl(args.wer)}
    semdist_rows = {row["id"]: row for row in load_jsonl(args.semdist)} if args.semdist else {}

    frame_outcomes: dict[str, tuple[bool, bool, bool]] = {}
    if args.frames:
        for uid, gold, pred in load_frame_annotations(args.frames):
            frame_outcomes[uid] = (
                top_intent(gold) == top_intent(pred),
                _normalized_tree(gold) == _normalized_tree(pred),
                drop_slot_text(gold) == drop_slot_text(pred),
            )

    entity_outcomes: dict[str, tuple[int, int, int]] = {}
    if args.entities_gold and args.entities_pred:
        gold = load_entity_annotations(args.entities_gold)
        predicted = load_entity_annotations(args.entities_pred)
        for uid in gold:
            if uid in predicted:
                entity_outcomes[uid] = entity_counts(gold[uid], predicted[uid])

    records = []
    for uid, row in wer_rows.items():
        frame = frame_outcomes.get(uid)
        entities = entity_outcomes.get(uid)
        records.append(
            UtteranceRecord(
                id=uid,
                wer=float(row["wer"]),
                error_counts=ErrorCounts(row["S"], row["I"], row["D"], row["N"]),
                semdist=semdist_rows.get(uid, {}).get("semdist"),
                intent_match=frame[0] if frame else None,
                em_match=frame[1] if frame else None,
                em_tree_match=frame[2] if frame else None,
                entity_tp=entities[0] if entities else None,
                entity_pred_total=entities[1] if entities else None,
                entity_gold_total=entities[2] if entities else None,
            )
        )
    return records


def cmd_report(args: argparse.Namespace) -> int:
    records = _records_from_files(args)
    if not records:
        raise InputError("no utterance records to report on")
    report, scatter = build_report(records, set_name=args.set_name, backend=args.backend_identity)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for fmt, filename in (("json", "report.json"), ("markdown", "report.md"), ("csv", "report.csv")):
        (out_dir / filename).write_text(render(report, fmt), encoding="utf-8")
    (out_dir / "scatter.csv").write_text(scatter_csv(scatter), encoding="utf-8")
    _write_config_echo(out_dir / "report", "report", vars(args))
    print(render(report, "markdown"), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asreval",
        description="Evaluate ASR hypotheses: WER, semantic distance, "
        "WER-preserving perturbations, and downstream NLU/NER metrics.",
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel in-flight embedding batches")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_wer = sub.add_parser("wer", help="corpus word error rate")
    p_wer.add_argument("corpus", help="corpus JSONL with reference and hypothesis fields")
    p_wer.add_argument("--hypotheses", help="corpus JSONL whose hypotheses override the corpus")
    p_wer.add_argument("--dump-alignments", help="write per-utterance alignment JSONL here")
    p_wer.set_defaults(func=cmd_wer)

    p_sem = sub.add_parser("semdist", help="corpus semantic distance")
    p_sem.add_argument("corpus")
    p_sem.add_argument("--hypotheses")
    p_sem.add_argument(
        "--backend",
        default="stub:seed=0,dim=768",
        help="stub:seed=N,dim=D | cache:PATH | http://HOST:PORT",
    )
    p_sem.add_argument("--scores", help="write per-utterance scores JSONL here")
    p_sem.set_defaults(func=cmd_semdist)

    p_perturb = sub.add_parser("perturb", help="generate a WER-preserving hypothesis set")
    p_perturb.add_argument("corpus", help="baseline corpus JSONL (hypothesis = baseline set)")
    p_perturb.add_argument("--mode", choices=["worse", "better"], required=True)
    p_perturb.add_argument("--seed", type=int, required=True)
    p_perturb.add_argument("--max-retries", type=int, default=100)
    p_perturb.add_argument("--output", required=True, help="perturbed corpus JSONL")
    p_perturb.add_argument("--manifest", help="write per-utterance generation manifest here")
    p_perturb.set_defaults(func=cmd_perturb)

    p_nlu = sub.add_parser("nlu-eval", help="intent/exact-match metrics over frame annotations")
    p_nlu.add_argument("frames", help='JSONL of {"id","gold_frame","pred_frame"}')
    p_nlu.add_argument("--output", help="write metrics JSON here")
    p_nlu.set_defaults(func=cmd_nlu_eval)

    p_ner = sub.add_parser("ner-eval", help="entity F1 between gold and predicted annotations")
    p_ner.add_argument("--gold", required=True)
    p_ner.add_argument("--pred", required=True)
    p_ner.add_argument("--output", help="write metrics JSON here")
    p_ner.set_defaults(func=cmd_ner_eval)

    p_report = sub.add_parser("report", help="join metric files into a corpus report")
    p_report.add_argument("--wer", required=True, help="alignment dump JSONL from `wer`")
    p_report.add_argument("--semdist", help="scores JSONL from `semdist`")
    p_report.add_argument("--frames", help="frame annotation JSONL")
    p_report.add_argument("--entities-gold")
    p_report.add_argument("--entities-pred")
    p_report.add_argument("--set-name", default="eval")
    p_report.add_argument("--backend-identity", default="")
    p_report.add_argument("--out-dir", required=True)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AsrEvalError as exc:  # contract and verification failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
