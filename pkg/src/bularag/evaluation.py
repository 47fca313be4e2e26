"""Evaluation harness: run the standardized question set with
reformulations, persist per-trial rows in the results CSV schema, and
compute the metric suite (precision, completeness, response time, cosine
consistency, Cohen's kappa with Landis-Koch interpretation).

Annotator precision/completeness columns are written empty and re-imported
after humans fill them in; the reader validates label ranges.
"""

from __future__ import annotations

import csv
import time
import warnings
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Sequence

from .embed import cosine_similarity
from .errors import (
    DegenerateMarginalsWarning,
    EmptyInput,
    LengthMismatch,
    MalformedCsv,
    OutOfRange,
    ZeroVectorWarning,
)

CSV_HEADER = [
    "DataHora",
    "Pergunta",
    "Resposta",
    "Tempo (s)",
    "Precisão A1",
    "Precisão A2",
    "Completude A1",
    "Completude A2",
    "Consistência",
    "Pergunta Reformulada",
    "Resposta Reformulada",
    "Tempo Ref (s)",
]

# Reference thresholds the summary report checks against.
PRECISION_THRESHOLD = 0.85
COMPLETENESS_THRESHOLD = 4.0
TIME_THRESHOLD_S = 5.0
CONSISTENCY_THRESHOLD_PCT = 80.0
KAPPA_THRESHOLD = 0.61

KAPPA_BANDS = (
    (0.20, "slight"),
    (0.40, "fair"),
    (0.60, "moderate"),
    (0.80, "substantial"),
    (1.00, "almost_perfect"),
)


@dataclass
class EvalRow:
    """One Q&A trial: the original question, its reformulation, timings,
    consistency, and the (initially empty) annotator labels."""

    datetime_iso: str
    question: str
    answer: str
    time_s: float
    precision_a1: int | None = None
    precision_a2: int | None = None
    completude_a1: int | None = None
    completude_a2: int | None = None
    consistency_pct: float = 0.0
    question_ref: str = ""
    answer_ref: str = ""
    time_ref_s: float | None = None


@dataclass
class MetricsSummary:
    """Corpus-level aggregates; annotator-dependent fields are None until
    labels are imported."""

    precision_a1_mean: float | None
    precision_a2_mean: float | None
    completude_a1_mean: float | None
    completude_a2_mean: float | None
    time_mean_s: float | None
    time_ref_mean_s: float | None
    consistency_mean_pct: float
    kappa_precision: float | None
    kappa_band: str | None
    threshold_report: dict = field(default_factory=dict)


def precision_mean(labels: Sequence[int]) -> float:
    """Arithmetic mean of 0/1 correctness labels."""
    if not labels:
        raise EmptyInput("no precision labels")
    return sum(labels) / len(labels)


def completeness_mean(scores: Sequence[int]) -> float:
    """Arithmetic mean of 1-5 completeness ratings."""
    if not scores:
        raise EmptyInput("no completeness scores")
    for s in scores:
        if not 1 <= s <= 5:
            raise OutOfRange(f"completeness score {s} outside 1..5")
    return sum(scores) / len(scores)


def time_mean(times: Sequence[float]) -> float:
    """Arithmetic mean of response times, in seconds."""
    if not times:
        raise EmptyInput("no times")
    return sum(times) / len(times)


def cohen_kappa(a1: Sequence, a2: Sequence) -> float:
    """Chance-corrected agreement between two raters over nominal labels.

    kappa = (p_o - p_e) / (1 - p_e), where p_o is the observed agreement
    rate and p_e the chance agreement from each rater's marginal label
    frequencies. When both raters are constant and identical (p_e == 1) the
    value is 1.0 by convention, with a warning.
    """
    if len(a1) != len(a2):
        raise LengthMismatch(f"label lists of length {len(a1)} and {len(a2)}")
    n = len(a1)
    if n == 0:
        raise EmptyInput("no labels")
    p_observed = sum(1 for x, y in zip(a1, a2) if x == y) / n
    freq1 = Counter(a1)
    freq2 = Counter(a2)
    p_expected = sum(
        (freq1[label] / n) * (freq2[label] / n) for label in freq1.keys() | freq2.keys()
    )
    if p_expected == 1.0:
        warnings.warn(
            "both raters are constant and identical; kappa = 1.0 by convention",
            DegenerateMarginalsWarning,
        )
        return 1.0
    return (p_observed - p_expected) / (1.0 - p_expected)


def interpret_kappa(k: float) -> str:
    """Landis-Koch agreement band for a kappa value."""
    if not -1.0 - 1e-9 <= k <= 1.0 + 1e-9:
        raise OutOfRange(f"kappa {k} outside [-1, 1]")
    if k < 0.0:
        return "poor"
    for upper, band in KAPPA_BANDS:
        if k <= upper + 1e-9:
            return band
    return "almost_perfect"


def consistency_score(answer: str, answer_ref: str, embedder) -> float:
    """Semantic consistency of two answers as a percentage.

    max(0, cosine(embed(answer), embed(answer_ref))) * 100, rounded to two
    decimals. Unembeddable (empty) answers score 0 with a warning.
    """
    vec_a, vec_b = embedder.embed([answer, answer_ref])
    if not vec_a.normalized or not vec_b.normalized:
        warnings.warn(
            "consistency comparison involved an unembeddable answer; scoring 0",
            ZeroVectorWarning,
        )
        return 0.0
    return round(max(0.0, cosine_similarity(vec_a, vec_b)) * 100.0, 2)


def run_eval(
    questions: Sequence[dict],
    system: Callable[[str], str],
    embedder,
    *,
    parallel: bool = False,
    max_workers: int = 4,
) -> list[EvalRow]:
    """Run every question and its reformulation through ``system``.

    ``system`` maps a question string to an answer string; each call is
    timed. A failing trial records the error string as the answer and the
    run continues. Annotator label fields stay empty for later import.

    Trials run sequentially by default so the recorded times are faithful.
    ``parallel`` runs them in a thread pool: per-trial times are still
    written but are distorted by contention, so summaries of parallel runs
    should omit time aggregates (``summarize(..., include_times=False)``).
    """
    if not parallel:
        return [_run_trial(item, system, embedder) for item in questions]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda item: _run_trial(item, system, embedder), questions))


def _run_trial(item: dict, system: Callable[[str], str], embedder) -> EvalRow:
    question = item["text"]
    answer, time_s = _timed_call(system, question)
    question_ref = item.get("reformulation") or ""
    if question_ref:
        answer_ref, time_ref_s = _timed_call(system, question_ref)
        consistency = consistency_score(answer, answer_ref, embedder)
    else:
        answer_ref, time_ref_s = "", None
        consistency = 0.0
    return EvalRow(
        datetime_iso=datetime.now().isoformat(timespec="seconds"),
        question=question,
        answer=answer,
        time_s=time_s,
        consistency_pct=consistency,
        question_ref=question_ref,
        answer_ref=answer_ref,
        time_ref_s=time_ref_s,
    )


def _timed_call(system: Callable[[str], str], question: str) -> tuple[str, float]:
    start = time.perf_counter()
    try:
        answer = system(question)
    except Exception as exc:  # a failed trial must not abort the run
        answer = str(exc) or exc.__class__.__name__
    return answer, round(time.perf_counter() - start, 2)


def _serialize(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: Sequence[EvalRow], path: str | Path) -> None:
    """Write trial rows with the exact canonical header, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.datetime_iso,
                    row.question,
                    row.answer,
                    _serialize(row.time_s),
                    _serialize(row.precision_a1),
                    _serialize(row.precision_a2),
                    _serialize(row.completude_a1),
                    _serialize(row.completude_a2),
                    _serialize(row.consistency_pct),
                    row.question_ref,
                    row.answer_ref,
                    _serialize(row.time_ref_s),
                ]
            )


def _required_float(cell: str, column: str, line: int) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise MalformedCsv(f"line {line}: bad {column!r} value {cell!r}") from exc


def _optional_int(cell: str, column: str, line: int, lo: int, hi: int) -> int | None:
    if cell == "":
        return None
    try:
        value = int(cell)
    except ValueError as exc:
        raise MalformedCsv(f"line {line}: bad {column!r} value {cell!r}") from exc
    if not lo <= value <= hi:
        raise OutOfRange(f"line {line}: {column} value {value} outside {lo}..{hi}")
    return value


def read_rows_csv(path: str | Path) -> list[EvalRow]:
    """Read trial rows back, validating header, arity, and label ranges."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv("empty file") from None
        if header != CSV_HEADER:
            raise MalformedCsv(f"unexpected header {header!r}")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(CSV_HEADER):
                raise MalformedCsv(
                    f"line {lineno}: {len(record)} columns, expected {len(CSV_HEADER)}"
                )
            rows.append(
                EvalRow(
                    datetime_iso=record[0],
                    question=record[1],
                    answer=record[2],
                    time_s=_required_float(record[3], "Tempo (s)", lineno),
                    precision_a1=_optional_int(record[4], "Precisão A1", lineno, 0, 1),
                    precision_a2=_optional_int(record[5], "Precisão A2", lineno, 0, 1),
                    completude_a1=_optional_int(record[6], "Completude A1", lineno, 1, 5),
                    completude_a2=_optional_int(record[7], "Completude A2", lineno, 1, 5),
                    consistency_pct=_required_float(record[8], "Consistência", lineno),
                    question_ref=record[9],
                    answer_ref=record[10],
                    time_ref_s=(
                        None if record[11] == "" else _required_float(record[11], "Tempo Ref (s)", lineno)
                    ),
                )
            )
    return rows


def _mean_or_none(values: list) -> float | None:
    return sum(values) / len(values) if values else None


def _check(value: float | None, threshold: float, higher_is_better: bool) -> dict:
    passed = None
    if value is not None:
        passed = value >= threshold if higher_is_better else value <= threshold
    return {"value": value, "threshold": threshold, "passed": passed}


def summarize(rows: Sequence[EvalRow], *, include_times: bool = True) -> MetricsSummary:
    """Aggregate trial rows into the metric suite plus a threshold report.

    Means are computed only over rows where the field is present; kappa is
    computed over rows where both annotators labeled precision. Pass
    ``include_times=False`` for rows produced by a parallel run, whose
    per-trial times are not meaningful in aggregate.
    """
    if not rows:
        raise EmptyInput("no rows to summarize")
    p1 = [r.precision_a1 for r in rows if r.precision_a1 is not None]
    p2 = [r.precision_a2 for r in rows if r.precision_a2 is not None]
    c1 = [r.completude_a1 for r in rows if r.completude_a1 is not None]
    c2 = [r.completude_a2 for r in rows if r.completude_a2 is not None]
    ref_times = [r.time_ref_s for r in rows if r.time_ref_s is not None]
    paired = [
        (r.precision_a1, r.precision_a2)
        for r in rows
        if r.precision_a1 is not None and r.precision_a2 is not None
    ]

    precision_a1_mean = _mean_or_none(p1)
    precision_a2_mean = _mean_or_none(p2)
    completude_a1_mean = _mean_or_none(c1)
    completude_a2_mean = _mean_or_none(c2)
    time_mean_s = time_mean([r.time_s for r in rows]) if include_times else None
    consistency_mean_pct = _mean_or_none([r.consistency_pct for r in rows])
    kappa = cohen_kappa([a for a, _ in paired], [b for _, b in paired]) if paired else None

    precision_overall = _mean_or_none(
        [m for m in (precision_a1_mean, precision_a2_mean) if m is not None]
    )
    completeness_overall = _mean_or_none(
        [m for m in (completude_a1_mean, completude_a2_mean) if m is not None]
    )
    report = {
        "precision": _check(precision_overall, PRECISION_THRESHOLD, True),
        "completeness": _check(completeness_overall, COMPLETENESS_THRESHOLD, True),
        "time": _check(time_mean_s, TIME_THRESHOLD_S, False),
        "consistency": _check(consistency_mean_pct, CONSISTENCY_THRESHOLD_PCT, True),
        "kappa": _check(kappa, KAPPA_THRESHOLD, True),
    }
    return MetricsSummary(
        precision_a1_mean=precision_a1_mean,
        precision_a2_mean=precision_a2_mean,
        completude_a1_mean=completude_a1_mean,
        completude_a2_mean=completude_a2_mean,
        time_mean_s=time_mean_s,
        time_ref_mean_s=_mean_or_none(ref_times) if include_times else None,
        consistency_mean_pct=consistency_mean_pct,
        kappa_precision=kappa,
        kappa_band=interpret_kappa(kappa) if kappa is not None else None,
        threshold_report=report,
    )


def parse_questions_text(text: str) -> list[dict]:
    """Parse the question file format: one question per line, its
    reformulation on the following indented line; '#' lines are comments."""
    questions: list[dict] = []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line[0] in (" ", "\t"):
            if not questions:
                raise ValueError("reformulation line before any question")
            questions[-1]["reformulation"] = line.strip()
        else:
            questions.append({"text": line.strip(), "reformulation": ""})
    return questions


def parse_questions(path: str | Path) -> list[dict]:
    return parse_questions_text(Path(path).read_text(encoding="utf-8"))


def format_summary(summary: MetricsSummary) -> str:
    """Human-readable aligned summary table with threshold verdicts."""

    def fmt(value, digits=2):
        return "-" if value is None else f"{value:.{digits}f}"

    lines = [
        f"{'metric':<22} {'value':>8}  target        verdict",
        f"{'precision A1':<22} {fmt(summary.precision_a1_mean):>8}",
        f"{'precision A2':<22} {fmt(summary.precision_a2_mean):>8}",
        f"{'completeness A1':<22} {fmt(summary.completude_a1_mean):>8}",
        f"{'completeness A2':<22} {fmt(summary.completude_a2_mean):>8}",
        f"{'time mean (s)':<22} {fmt(summary.time_mean_s):>8}",
        f"{'time ref mean (s)':<22} {fmt(summary.time_ref_mean_s):>8}",
        f"{'consistency (%)':<22} {fmt(summary.consistency_mean_pct):>8}",
        f"{'kappa (A1 x A2)':<22} {fmt(summary.kappa_precision):>8}  "
        f"band: {summary.kappa_band or '-'}",
    ]
    for name, check in summary.threshold_report.items():
        verdict = {True: "pass", False: "FAIL", None: "n/a"}[check["passed"]]
        lines.append(
            f"{'  ' + name:<22} {fmt(check['value']):>8}  "
            f"{check['threshold']:<12}  {verdict}"
        )
    return "\n".join(lines)


def summary_to_dict(summary: MetricsSummary) -> dict:
    return {
        "precision_a1_mean": summary.precision_a1_mean,
        "precision_a2_mean": summary.precision_a2_mean,
        "completude_a1_mean": summary.completude_a1_mean,
        "completude_a2_mean": summary.completude_a2_mean,
        "time_mean_s": summary.time_mean_s,
        "time_ref_mean_s": summary.time_ref_mean_s,
        "consistency_mean_pct": summary.consistency_mean_pct,
        "kappa_precision": summary.kappa_precision,
        "kappa_band": summary.kappa_band,
        "threshold_report": summary.threshold_report,
    }
