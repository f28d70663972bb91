"""Joins per-utterance metrics into corpus reports.

Computes the WER/semantic-distance correlation, applies the scatter
filter 0 < WER <= 100%, and renders report rows (one per hypothesis set)
as JSON, CSV, or a markdown table. Every aggregate in a report is
recomputable from the per-utterance records shipped with it, and render()
re-checks that before emitting anything.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from .alignment import ErrorCounts, corpus_wer
from .errors import ContractError, UndefinedMetricError

SCATTER_HEADER = "id,wer,semdist"


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation, two-pass mean-centered, in [-1, 1]."""
    if len(xs) != len(ys):
        raise UndefinedMetricError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise UndefinedMetricError("correlation needs at least 2 points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    cov = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = math.fsum((x - mean_x) ** 2 for x in xs)
    var_y = math.fsum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        raise UndefinedMetricError("correlation undefined: zero variance")
    r = cov / math.sqrt(var_x * var_y)
    # guard rounding dust just past the mathematical range
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class UtteranceRecord:
    """Everything measured about one utterance, joined on id."""

    id: str
    wer: float
    error_counts: ErrorCounts | None = None
    semdist: float | None = None
    intent_match: bool | None = None
    em_match: bool | None = None
    em_tree_match: bool | None = None
    entity_tp: int | None = None
    entity_pred_total: int | None = None
    entity_gold_total: int | None = None

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {"id": self.id, "wer": self.wer}
        if self.error_counts is not None:
            record.update(
                S=self.error_counts.substitutions,
                I=self.error_counts.insertions,
                D=self.error_counts.deletions,
                N=self.error_counts.ref_len,
            )
        for key in (
            "semdist",
            "intent_match",
            "em_match",
            "em_tree_match",
            "entity_tp",
            "entity_pred_total",
            "entity_gold_total",
        ):
            value = getattr(self, key)
            if value is not None:
                record[key] = value
        return record


@dataclass(frozen=True)
class EvalReport:
    """One hypothesis set's corpus-level numbers, plus the records they
    were aggregated from and the aggregation choices made."""

    set_name: str
    n: int
    corpus_wer: float | None
    corpus_semdist: float | None
    intent_acc: float | None
    em: float | None
    em_tree: float | None
    ner_f1: float | None
    pearson_r: float | None            # on the scatter-filtered population
    pearson_r_unfiltered: float | None
    backend: str
    decisions: tuple[str, ...]
    records: tuple[UtteranceRecord, ...]

    _COLUMNS = (
        "set_name", "n", "corpus_wer", "corpus_semdist", "intent_acc", "em",
        "em_tree", "ner_f1", "pearson_r", "pearson_r_unfiltered", "backend",
    )

    def to_dict(self) -> dict[str, Any]:
        payload = {name: getattr(self, name) for name in self._COLUMNS}
        payload["decisions"] = list(self.decisions)
        payload["utterances"] = [record.to_record() for record in self.records]
        return payload


def _fraction_mean(values: list[bool]) -> float:
    return sum(values) / len(values)


def _aggregate(records: Sequence[UtteranceRecord], scatter_filter: bool = True) -> dict[str, Any]:
    counts = [r.error_counts for r in records if r.error_counts is not None]
    wers = [r.wer for r in records]
    semdists = [r.semdist for r in records if r.semdist is not None]

    aggregates: dict[str, Any] = {}
    decisions = []
    if counts and len(counts) == len(records):
        total_edits = sum(c.total_edits for c in counts)
        total_ref = sum(c.ref_len for c in counts)
        aggregates["corpus_wer"] = float(Fraction(total_edits, total_ref)) if total_ref else None
        decisions.append("corpus WER pooled: total errors over total reference words")
    else:
        aggregates["corpus_wer"] = None
    if semdists and len(semdists) == len(records):
        aggregates["corpus_semdist"] = math.fsum(semdists) / len(semdists)
        decisions.append("corpus semantic distance: unweighted mean over utterances")
        above_one = sum(1 for value in semdists if value > 1.0)
        if above_one:
            decisions.append(
                f"diagnostic: {above_one} utterance(s) scored semantic distance > 1"
            )
    else:
        aggregates["corpus_semdist"] = None

    for field_name, metric in (
        ("intent_match", "intent_acc"),
        ("em_match", "em"),
        ("em_tree_match", "em_tree"),
    ):
        values = [getattr(r, field_name) for r in records if getattr(r, field_name) is not None]
        aggregates[metric] = _fraction_mean(values) if values else None

    entity_rows = [
        r for r in records
        if r.entity_tp is not None
        and r.entity_pred_total is not None
        and r.entity_gold_total is not None
    ]
    if entity_rows:
        tp = sum(r.entity_tp for r in entity_rows)
        pred_total = sum(r.entity_pred_total for r in entity_rows)
        gold_total = sum(r.entity_gold_total for r in entity_rows)
        if pred_total == 0 and gold_total == 0:
            aggregates["ner_f1"] = 1.0
            decisions.append("entity F1 degenerate: no entities on either side")
        else:
            precision = tp / pred_total if pred_total else 0.0
            recall = tp / gold_total if gold_total else 0.0
            aggregates["ner_f1"] = (
                2 * precision * recall / (precision + recall) if precision + recall else 0.0
            )
            decisions.append("entity F1 micro-averaged over (type, normalized text) multisets")
    else:
        aggregates["ner_f1"] = None

    if scatter_filter:
        filtered = [
            (r.wer, r.semdist)
            for r in records
            if r.semdist is not None and 0.0 < r.wer <= 1.0
        ]
        paired = [(r.wer, r.semdist) for r in records if r.semdist is not None]
        aggregates["pearson_r"] = _safe_pearson(filtered)
        aggregates["pearson_r_unfiltered"] = _safe_pearson(paired)
        decisions.append("scatter and headline correlation filtered to 0 < WER <= 100%")
    return {"aggregates": aggregates, "decisions": decisions}


def _safe_pearson(points: list[tuple[float, float]]) -> float | None:
    try:
        return pearson([p[0] for p in points], [p[1] for p in points])
    except UndefinedMetricError:
        return None


def build_report(
    records: Sequence[UtteranceRecord],
    set_name: str,
    backend: str = "",
) -> tuple[EvalReport, list[tuple[str, float, float]]]:
    """Aggregate records into a report plus scatter rows.

    Scatter rows are (id, wer, semdist) for utterances passing the
    0 < WER <= 100% filter. The correlation is reported both on the
    filtered population (headline) and unfiltered.
    """
    if not records:
        raise UndefinedMetricError("cannot build a report from zero records")
    summary = _aggregate(records)
    aggregates = summary["aggregates"]
    scatter = [
        (r.id, r.wer, r.semdist)
        for r in records
        if r.semdist is not None and 0.0 < r.wer <= 1.0
    ]
    report = EvalReport(
        set_name=set_name,
        n=len(records),
        corpus_wer=aggregates["corpus_wer"],
        corpus_semdist=aggregates["corpus_semdist"],
        intent_acc=aggregates["intent_acc"],
        em=aggregates["em"],
        em_tree=aggregates["em_tree"],
        ner_f1=aggregates["ner_f1"],
        pearson_r=aggregates["pearson_r"],
        pearson_r_unfiltered=aggregates["pearson_r_unfiltered"],
        backend=backend,
        decisions=tuple(summary["decisions"]),
        records=tuple(records),
    )
    return report, scatter


def _check_consistency(report: EvalReport) -> None:
    """Reported aggregates must match a recomputation from the shipped
    records exactly (modulo float repr)."""
    recomputed = _aggregate(report.records)["aggregates"]
    for name, fresh in recomputed.items():
        stored = getattr(report, name)
        if stored is None and fresh is None:
            continue
        if stored is None or fresh is None or abs(stored - fresh) > 1e-12:
            raise ContractError(
                f"report field {name} = {stored} does not match recomputation {fresh}"
            )


def _percent(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def _fixed(value: float | None, digits: int) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def render(reports: EvalReport | Sequence[EvalReport], fmt: str = "json") -> str:
    """Deterministic serialization of one or more report rows.

    Formats: json (full fidelity, record lists included), csv and
    markdown-table (percentages with 2 decimals, semantic distance with
    4, entity F1 with 3 — the table shape used for corpus comparisons).
    """
    rows = [reports] if isinstance(reports, EvalReport) else list(reports)
    for report in rows:
        _check_consistency(report)
    if fmt == "json":
        return json.dumps([r.to_dict() for r in rows], indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        out.write("set,n,wer,semdist,intent_acc,em,em_tree,ner_f1,pearson_r\n")
        for r in rows:
            out.write(
                ",".join(
                    [
                        r.set_name,
                        str(r.n),
                        _percent(r.corpus_wer),
                        _fixed(r.corpus_semdist, 4),
                        _percent(r.intent_acc),
                        _percent(r.em),
                        _percent(r.em_tree),
                        _fixed(r.ner_f1, 3),
                        _fixed(r.pearson_r, 4),
                    ]
                )
                + "\n"
            )
        return out.getvalue()
    if fmt in ("markdown", "markdown-table", "md"):
        header = "| Set | WER | SemDist | IntentAcc | EM | EM Tree | NER-F1 |"
        rule = "|---|---|---|---|---|---|---|"
        lines = [header, rule]
        for r in rows:
            lines.append(
                "| {} | {} | {} | {} | {} | {} | {} |".format(
                    r.set_name,
                    _percent(r.corpus_wer),
                    _fixed(r.corpus_semdist, 4),
                    _percent(r.intent_acc),
                    _percent(r.em),
                    _percent(r.em_tree),
                    _fixed(r.ner_f1, 3),
                )
            )
        return "\n".join(lines) + "\n"
    raise ContractError(f"unknown render format {fmt!r}")


def scatter_csv(rows: Sequence[tuple[str, float, float]]) -> str:
    """Scatter file body: header then one `id,wer,semdist` row per
    filtered utterance."""
    lines = [SCATTER_HEADER]
    for utterance_id, wer_value, semdist_value in rows:
        lines.append(f"{utterance_id},{wer_value!r},{semdist_value!r}")
    return "\n".join(lines) + "\n"
