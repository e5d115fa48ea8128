"""Scoring: confusion matrices, precision/recall/F1 and tokens per second.

Two scoring modes are supported. ``in_document`` counts an answer as correct
when the date occurs anywhere in the document (a hallucination check);
``matches_target`` requires it to equal the expert-assigned target.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cascade import PredictionRecord, StageTrace
from .corpus import Corpus, Document
from .dates import extract_candidates

__all__ = [
    "CHARS_PER_TOKEN",
    "MODES",
    "REPORT_COLUMNS",
    "ConfusionMatrix",
    "Metrics",
    "MetricsReport",
    "StageReport",
    "TpsStats",
    "build_report",
    "chain_tps",
    "compute_metrics",
    "f1_from",
    "read_report_table",
    "reciprocal_mean_tps",
    "report_table",
    "score",
    "stage_records",
    "summarize_tps",
    "tokens_per_second",
    "write_report_table",
]

CHARS_PER_TOKEN = 4
MODES = ("in_document", "matches_target")

REPORT_COLUMNS = [
    "subject", "mode", "n", "tp", "fp", "fn", "tn", "precision", "recall", "f1",
    "tps_min", "tps_q1", "tps_median", "tps_mean", "tps_q3", "tps_max",
]
STAGE_COLUMNS = ["subject", "stage", "model", "documents_in", *REPORT_COLUMNS[1:]]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TpsStats:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float


@dataclass(frozen=True)
class StageReport:
    stage_index: int
    model_name: str
    documents_in: int
    matrix: ConfusionMatrix
    metrics: Metrics
    tps: TpsStats | None


@dataclass(frozen=True)
class MetricsReport:
    subject: str
    mode: str
    matrix: ConfusionMatrix
    metrics: Metrics
    tps: TpsStats | None
    n_documents: int
    per_stage: tuple[StageReport, ...] | None = None


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def score(records, corpus: Corpus, mode: str = "in_document", candidates=None) -> ConfusionMatrix:
    """Confusion matrix of ``records`` against ``corpus``.

    An answer that is present is a TP or FP. A missing answer is a FN when a
    correct answer existed (the document has candidates / a target) and a TN
    otherwise.
    """
    _check_mode(mode)
    by_id = {r.document_id: r for r in records}
    if len(by_id) != len(records) or set(by_id) != set(corpus.ids):
        raise ValueError("records must contain exactly one entry per corpus document")

    tp = fp = fn = tn = 0
    for doc in corpus:
        rec = by_id[doc.id]
        if mode == "in_document":
            if candidates is not None:
                cands = candidates[doc.id]
            else:
                cands = extract_candidates(doc.text)
            correct = rec.answer is not None and rec.answer in cands.distinct_dates
            obtainable = bool(cands)
        else:
            correct = rec.answer is not None and doc.target is not None and rec.answer == doc.target
            obtainable = doc.target is not None
        if rec.answer is not None:
            if correct:
                tp += 1
            else:
                fp += 1
        elif obtainable:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def f1_from(precision: float, recall: float) -> float:
    """Harmonic mean of two percentages (0 when both are 0)."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def compute_metrics(m: ConfusionMatrix) -> Metrics:
    """Percent precision, recall and their harmonic mean; 0 on empty denominators."""
    precision = 100.0 * m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = 100.0 * m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    return Metrics(precision, recall, f1_from(precision, recall))


def tokens_per_second(doc: Document, elapsed_seconds: float) -> float:
    if not elapsed_seconds > 0:
        raise ValueError(f"elapsed_seconds must be positive, got {elapsed_seconds}")
    return doc.char_count / (CHARS_PER_TOKEN * elapsed_seconds)


def chain_tps(doc: Document, record: PredictionRecord) -> float:
    # latency is already summed over every stage that saw the document
    return tokens_per_second(doc, record.elapsed_seconds_total)


def summarize_tps(samples) -> TpsStats:
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarise an empty TPS sample")
    q1, median, q3 = np.percentile(arr, [25, 50, 75], method="linear")
    return TpsStats(
        min=float(arr.min()),
        q1=float(q1),
        median=float(median),
        mean=float(arr.mean()),
        q3=float(q3),
        max=float(arr.max()),
    )


def reciprocal_mean_tps(report) -> float:
    """Seconds per token implied by the mean TPS of a report (or a TpsStats)."""
    tps = report.tps if isinstance(report, MetricsReport) else report
    if tps is None or not tps.mean > 0:
        raise ValueError("mean TPS must be positive")
    return 1.0 / tps.mean


def _tps_for(records, corpus: Corpus) -> TpsStats | None:
    samples = [chain_tps(corpus.get(r.document_id), r) for r in records]
    return summarize_tps(samples) if samples else None


def stage_records(trace: StageTrace, corpus: Corpus, candidates=None) -> list[PredictionRecord]:
    """Records describing one stage on its own: the documents it saw and what it said."""
    responses = dict(trace.per_document_response)
    latency = dict(trace.per_document_latency)
    out = []
    for doc_id, answer in trace.per_document_answer:
        doc = corpus.get(doc_id)
        cands = candidates[doc_id] if candidates is not None else extract_candidates(doc.text)
        ok = answer is not None and answer in cands.distinct_dates
        out.append(PredictionRecord(
            document_id=doc_id,
            stage_index=trace.stage_index if ok else None,
            model_name=trace.model_name,
            raw_response=responses.get(doc_id),
            answer=answer,
            in_document=ok,
            matches_target=None if doc.target is None else answer == doc.target,
            elapsed_seconds_total=latency[doc_id],
        ))
    return out


def build_report(subject: str, records, corpus: Corpus, mode: str, traces=None) -> MetricsReport:
    """Score a full run. Passing ``traces`` adds one row per chain stage."""
    records = list(records)
    candidates = {doc.id: extract_candidates(doc.text) for doc in corpus}
    matrix = score(records, corpus, mode, candidates)
    per_stage = None
    if traces is not None:
        per_stage = []
        for trace in traces:
            sub = corpus.subset(trace.document_ids)
            recs = stage_records(trace, corpus, candidates)
            m = score(recs, sub, mode, candidates)
            per_stage.append(StageReport(trace.stage_index, trace.model_name, trace.documents_in,
                                         m, compute_metrics(m), _tps_for(recs, corpus)))
        per_stage = tuple(per_stage)
    return MetricsReport(subject, mode, matrix, compute_metrics(matrix), _tps_for(records, corpus),
                         len(records), per_stage)


def _row(subject: str, mode: str, n: int, matrix, metrics, tps) -> list[str]:
    row = [subject, mode, str(n), str(matrix.tp), str(matrix.fp), str(matrix.fn), str(matrix.tn),
           f"{metrics.precision:.1f}", f"{metrics.recall:.1f}", f"{metrics.f1:.1f}"]
    if tps is None:
        row += [""] * 6
    else:
        row += [f"{v:.4f}" for v in (tps.min, tps.q1, tps.median, tps.mean, tps.q3, tps.max)]
    return row


def report_table(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow(_row(r.subject, r.mode, r.n_documents, r.matrix, r.metrics, r.tps))
    return buf.getvalue()


def stage_table(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STAGE_COLUMNS)
    for r in reports:
        for s in r.per_stage or ():
            row = _row(r.subject, r.mode, s.documents_in, s.matrix, s.metrics, s.tps)
            writer.writerow([row[0], str(s.stage_index), s.model_name, str(s.documents_in), *row[1:]])
    return buf.getvalue()


def write_report_table(reports, path) -> None:
    Path(path).write_text(report_table(reports), encoding="utf-8")


def read_report_table(path) -> list[dict]:
    """Parse a report table back into dicts with numeric fields converted."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(REPORT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: report table lacks columns {sorted(missing)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            row: dict = {"subject": raw["subject"], "mode": raw["mode"]}
            try:
                for key in ("n", "tp", "fp", "fn", "tn"):
                    row[key] = int(raw[key])
                for key in REPORT_COLUMNS[7:]:
                    row[key] = float(raw[key]) if raw[key] else None
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
            if row["mode"] not in MODES:
                raise ValueError(f"{path}:{lineno}: unknown mode {row['mode']!r}")
            rows.append(row)
    return rows
