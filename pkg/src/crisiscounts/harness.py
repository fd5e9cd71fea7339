"""Experiment orchestration.

Ties the toolkit together: batch extraction over a corpus, calibration
fit-and-apply experiments, few-shot curves, out-of-distribution
matrices, and timeline emission.  External model runners are invoked
as subprocesses through a command template; everything else runs
in-process.  Results land under a run directory as report.json plus
CSV tables and SVG figures, deterministic apart from the timestamp.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import shlex
import subprocess
import tempfile
import warnings
from collections import defaultdict
from contextlib import ExitStack
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .calibration import (
    CLASSIFICATION,
    GENERATION,
    REGRESSION,
    PredictionSet,
    classification_confidence,
    ece,
    fit_isotonic,
    fit_temperature,
    fit_temperature_generation,
    generation_confidence,
    load_predictions,
    quantile_of_truth,
    reg_ce,
)
from .corpus import (
    FEWSHOT_FRACTIONS,
    EventRecord,
    SplitPlan,
    fewshot_subset,
    make_splits,
    ood_pairs,
    parse_record_date,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DataFormatError,
    RunnerError,
)
from .extractors import (
    EXTRACTOR_NAMES,
    Extraction,
    Lexicon,
    extract_dependency,
    extract_regex,
    extract_srl,
    resolve_lexicon,
)
from .metrics import FOUR_BIN, BinningScheme, ScoreReport, exact_match, score_counts, score_strings
from .numerals import normalize_numerals, parse_count_token

CACHE_ENV_VAR = "CRISISCOUNTS_CACHE"


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# Batch extraction


@dataclass
class ExtractionRun:
    """Extraction over a record batch: per-id results, the aggregate
    score where gold counts exist, and ids skipped for missing
    annotations."""

    extractions: dict[str, Extraction]
    report: ScoreReport | None
    skipped: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n": len(self.extractions),
            "skipped": list(self.skipped),
            "report": self.report.to_dict() if self.report else None,
        }


def run_extraction(records, method: str, victim_type: str | None = None,
                   lexicon: Lexicon | None = None, parses=None, frames=None,
                   scheme: BinningScheme = FOUR_BIN,
                   normalize: bool = True) -> ExtractionRun:
    """Run one extractor over a record batch.

    Dependency and SRL methods need annotation maps keyed by record id;
    records without one are skipped, not fatal.  Spelled-out numerals
    are normalized to digits before extraction, so annotation offsets
    must refer to the normalized text.
    """
    if method not in EXTRACTOR_NAMES:
        raise ConfigError(f"unknown method {method!r}; expected one of {EXTRACTOR_NAMES}")
    if method == "dependency" and parses is None:
        raise ConfigError("dependency method needs a parses file")
    if method == "srl" and frames is None:
        raise ConfigError("srl method needs a frames file")
    lex = resolve_lexicon(victim_type, lexicon)

    extractions: dict[str, Extraction] = {}
    skipped = []
    preds, golds = [], []
    for record in records:
        text = normalize_numerals(record.text) if normalize else record.text
        if method == "regex":
            result = extract_regex(text, lexicon=lex)
        elif method == "dependency":
            doc = parses.get(record.id)
            if doc is None:
                skipped.append(record.id)
                continue
            result = extract_dependency(doc, lexicon=lex, text=text)
        else:
            record_frames = frames.get(record.id)
            if record_frames is None:
                skipped.append(record.id)
                continue
            result = extract_srl(text, record_frames, lexicon=lex)
        extractions[record.id] = result
        gold = record.gold_counts.get(lex.victim_type)
        if gold is not None:
            preds.append(result.count)
            golds.append(gold)

    report = score_counts(preds, golds, scheme) if golds else None
    return ExtractionRun(extractions, report, tuple(skipped))


def write_extraction_tsv(path, run: ExtractionRun) -> None:
    """One line per record: id, count, rule bookkeeping, evidence span."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["id", "count", "method", "rule",
                         "evidence_start", "evidence_end"])
        for record_id, ext in run.extractions.items():
            start, end = ext.evidence if ext.evidence else ("", "")
            writer.writerow([record_id, ext.count, ext.method, ext.rule,
                             start, end])


def read_prediction_strings(path):
    """Read a prediction file as per-id answer strings.

    Two layouts are accepted: the delimited extraction format (columns
    id and count) and generation JSONL, where the top beam candidate is
    the answer.  Returns (strings by id, PredictionSet or None).
    """
    text = Path(path).read_text()
    stripped = text.lstrip()
    if not stripped:
        raise DataFormatError(f"empty prediction file: {path}")
    if stripped.startswith("{"):
        pred_set = load_predictions(path)
        if pred_set.kind != GENERATION:
            raise ConfigError(
                f"cannot score {pred_set.kind} predictions as counts; "
                "expected generation beams or a delimited id/count file")
        strings = {rid: beams[0][0]
                   for rid, beams in zip(pred_set.ids, pred_set.beams)}
        return strings, pred_set

    header = stripped.splitlines()[0]
    delimiter = "\t" if "\t" in header else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    fields = reader.fieldnames or []
    if "id" not in fields or "count" not in fields:
        raise DataFormatError(
            f"prediction file {path} needs 'id' and 'count' columns, got {fields}")
    strings: dict[str, str] = {}
    for row in reader:
        rid = (row["id"] or "").strip()
        if not rid:
            raise DataFormatError(f"empty id in prediction file {path}")
        if rid in strings:
            raise DataFormatError(f"duplicate prediction id {rid!r}")
        strings[rid] = (row["count"] or "").strip()
    return strings, None


# ---------------------------------------------------------------------------
# Calibration experiments


@dataclass
class CalibrationOutcome:
    kind: str
    error_before: float
    error_after: float
    calibrator: object
    n_dev: int
    n_test: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "error_before": self.error_before,
            "error_after": self.error_after,
            "calibrator": self.calibrator.to_dict(),
            "n_dev": self.n_dev,
            "n_test": self.n_test,
        }


def _generation_correct(texts, golds, correctness: str,
                        scheme: BinningScheme) -> np.ndarray:
    """Correctness of top candidates: exact string match, or same count
    bin when both sides parse (falling back to exact match otherwise)."""
    if correctness not in ("exact", "binned"):
        raise ValueError(f"correctness must be 'exact' or 'binned', got {correctness!r}")
    flags = []
    for text, gold in zip(texts, golds):
        if correctness == "binned":
            pv = parse_count_token(str(text).strip())
            gv = parse_count_token(str(gold).strip())
            if pv is not None and gv is not None:
                from .metrics import bin_count
                flags.append(bin_count(pv, scheme) == bin_count(gv, scheme))
                continue
        flags.append(bool(exact_match(str(text), str(gold))))
    return np.array(flags, dtype=bool)


def run_calibration_experiment(dev: PredictionSet, test: PredictionSet,
                               dev_labels, test_labels, n_bins: int = 10,
                               top_b: int | None = 5,
                               correctness: str = "exact",
                               scheme: BinningScheme = FOUR_BIN) -> CalibrationOutcome:
    """Fit a calibrator on dev, report the matched error on test.

    Classification and generation use ECE over confidence bins;
    regression uses the quantile calibration error.  Labels are class
    indices, gold answer strings, or gold counts respectively.
    """
    if dev.kind != test.kind:
        raise CalibrationError(
            f"prediction kinds differ: dev={dev.kind}, test={test.kind}")
    if len(dev_labels) != len(dev) or len(test_labels) != len(test):
        raise CalibrationError("label count does not match prediction count")

    kind = dev.kind
    if kind == CLASSIFICATION:
        picks, confidences = classification_confidence(test)
        correct = picks == np.asarray(test_labels, dtype=int)
        before = ece(confidences, correct, n_bins)
        calibrator = fit_temperature(dev.scores, dev_labels)
        _, scaled = classification_confidence(test, calibrator.temperature)
        after = ece(scaled, correct, n_bins)
    elif kind == GENERATION:
        texts, confidences = generation_confidence(test, top_b=top_b)
        correct = _generation_correct(texts, test_labels, correctness, scheme)
        before = ece(confidences, correct, n_bins)
        calibrator = fit_temperature_generation(dev, dev_labels, top_b=top_b)
        _, scaled = generation_confidence(test, calibrator.temperature, top_b=top_b)
        after = ece(scaled, correct, n_bins)
    elif kind == REGRESSION:
        test_q = quantile_of_truth(test, test_labels)
        before = reg_ce(test_q, n_bins)
        calibrator = fit_isotonic(quantile_of_truth(dev, dev_labels))
        after = reg_ce(calibrator.apply(test_q), n_bins)
    else:
        raise CalibrationError(f"unknown prediction kind {kind!r}")
    return CalibrationOutcome(kind, float(before), float(after), calibrator,
                              len(dev), len(test))


# ---------------------------------------------------------------------------
# Model runners

# Subprocess coupling keeps this suite runnable with a stub script.


class CommandRunner:
    """Shell-command runner driven by a template with {train}, {test},
    and {out} placeholders."""

    def __init__(self, template: str):
        for placeholder in ("{test}", "{out}"):
            if placeholder not in template:
                raise ConfigError(f"runner template is missing {placeholder}")
        self.template = template

    def identity(self) -> str:
        return "cmd:" + self.template

    def run(self, train_path, test_path, out_path) -> None:
        command = self.template.format(train=train_path, test=test_path,
                                       out=out_path)
        proc = subprocess.run(shlex.split(command), capture_output=True,
                              text=True)
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-3:]
            raise RunnerError(
                f"runner exited {proc.returncode}: {' | '.join(tail) or command}")


class RuleRunner:
    """In-process, training-free runner wrapping the rule extractors.

    Ignores the train manifest entirely, so few-shot curves built on it
    are flat by construction.
    """

    def __init__(self, method: str, victim_type: str | None = None,
                 lexicon: Lexicon | None = None, parses=None, frames=None):
        if method not in EXTRACTOR_NAMES:
            raise ConfigError(f"unknown method {method!r}")
        self.method = method
        self.lexicon = resolve_lexicon(victim_type, lexicon)
        self.parses = parses
        self.frames = frames

    def identity(self) -> str:
        lex_hash = hashlib.sha256(repr(self.lexicon).encode()).hexdigest()[:16]
        return f"rule:{self.method}:{self.lexicon.victim_type}:{lex_hash}"

    def run(self, train_path, test_path, out_path) -> None:
        records = []
        with open(test_path) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                records.append(EventRecord(id=str(row["id"]), text=row["text"]))
        run = run_extraction(records, self.method, lexicon=self.lexicon,
                             parses=self.parses, frames=self.frames)
        write_extraction_tsv(out_path, run)


def _resolve_cache_dir(cache_dir):
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV_VAR)
    return Path(env) if env else None


def _invoke_runner(runner, train_path: Path, test_path: Path, out_path: Path,
                   cache_dir: Path | None) -> bool:
    """Run (or replay) one runner call.  Returns True on a cache hit.

    Cache entries are keyed by a content hash of the runner identity
    and both input files, so a re-run with identical inputs never pays
    for the subprocess again.
    """
    key = None
    if cache_dir is not None:
        digest = hashlib.sha256(runner.identity().encode())
        digest.update(train_path.read_bytes())
        digest.update(b"\x00")
        digest.update(test_path.read_bytes())
        key = digest.hexdigest()
        entry = cache_dir / key
        if entry.exists():
            out_path.write_bytes(entry.read_bytes())
            return True

    runner.run(train_path, test_path, out_path)
    if not out_path.exists():
        raise RunnerError(f"runner produced no output file at {out_path}")
    if key is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cache_dir / f".{key}.tmp"
        tmp.write_bytes(out_path.read_bytes())
        tmp.replace(cache_dir / key)
    return False


# ---------------------------------------------------------------------------
# Few-shot curves and OOD matrices


@dataclass(frozen=True)
class Task:
    """One (dataset, victim type) evaluation unit."""

    name: str
    records: tuple
    victim_type: str
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for record in self.records:
            if self.victim_type not in record.gold_counts:
                raise ConfigError(
                    f"record {record.id!r} has no gold {self.victim_type!r} count")


@dataclass
class FewshotRow:
    fraction: float
    n_train: int
    report: ScoreReport | None
    calibration_error: float | None
    failure: str | None = None
    cached: bool = False

    def to_dict(self) -> dict:
        # cached is bookkeeping, not a result: a warm re-run must
        # produce the identical report
        return {
            "fraction": self.fraction,
            "n_train": self.n_train,
            "report": self.report.to_dict() if self.report else None,
            "calibration_error": self.calibration_error,
            "failure": self.failure,
        }


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in name)


def _write_train_manifest(path: Path, task: Task, fraction: float, subset) -> None:
    payload = {
        "task": task.name,
        "victim_type": task.victim_type,
        "seed": task.seed,
        "fraction": fraction,
        "train": [{"id": r.id, "text": r.text,
                   "gold": r.gold_counts[task.victim_type]} for r in subset],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_test_file(path: Path, records) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps({"id": record.id, "text": record.text},
                                sort_keys=True) + "\n")


def _score_against(test_records, victim_type, out_path,
                   scheme: BinningScheme, n_bins: int = 10):
    """Score a runner output file against a test split.

    Returns (ScoreReport, generation ECE or None).  Raises RunnerError
    when the output is missing any test id.
    """
    strings, pred_set = read_prediction_strings(out_path)
    missing = [r.id for r in test_records if r.id not in strings]
    if missing:
        raise RunnerError(
            f"runner output missing {len(missing)} test ids "
            f"(first: {missing[:3]})")
    preds = [strings[r.id] for r in test_records]
    golds = [str(r.gold_counts[victim_type]) for r in test_records]
    report = score_strings(preds, golds, scheme)

    calibration_error = None
    if pred_set is not None:
        texts_by_id, conf_by_id = {}, {}
        texts, confidences = generation_confidence(pred_set)
        for rid, text, conf in zip(pred_set.ids, texts, confidences):
            texts_by_id[rid], conf_by_id[rid] = text, conf
        correct = [bool(exact_match(texts_by_id[r.id],
                                    str(r.gold_counts[victim_type])))
                   for r in test_records]
        confs = [conf_by_id[r.id] for r in test_records]
        calibration_error = float(ece(confs, correct, n_bins))
    return report, calibration_error


def run_fewshot(task: Task, runner, fractions=FEWSHOT_FRACTIONS,
                scheme: BinningScheme = FOUR_BIN, plan: SplitPlan | None = None,
                work_dir=None, cache_dir=None) -> list[FewshotRow]:
    """Few-shot curve: invoke the runner once per training fraction.

    Runner failures become failure rows rather than exceptions, so one
    bad cell cannot sink a whole sweep.
    """
    plan = plan or SplitPlan(seed=task.seed)
    cache = _resolve_cache_dir(cache_dir)
    train, dev, test = make_splits(task.records, plan)

    rows: list[FewshotRow] = []
    with ExitStack() as stack:
        if work_dir is None:
            work_dir = Path(stack.enter_context(tempfile.TemporaryDirectory()))
        else:
            work_dir = Path(work_dir)
            work_dir.mkdir(parents=True, exist_ok=True)
        test_path = work_dir / f"{_safe_name(task.name)}-test.jsonl"
        _write_test_file(test_path, test)

        for fraction in fractions:
            subset = fewshot_subset(train, fraction, task.seed)
            tag = f"{_safe_name(task.name)}-{fraction:g}"
            train_path = work_dir / f"{tag}-train.json"
            out_path = work_dir / f"{tag}.preds"
            _write_train_manifest(train_path, task, fraction, subset)
            try:
                hit = _invoke_runner(runner, train_path, test_path, out_path,
                                     cache)
                report, calibration_error = _score_against(
                    test, task.victim_type, out_path, scheme)
            except (RunnerError, DataFormatError, ConfigError) as err:
                rows.append(FewshotRow(fraction, len(subset), None, None,
                                       failure=str(err)))
                continue
            rows.append(FewshotRow(fraction, len(subset), report,
                                   calibration_error, cached=hit))
    return rows


@dataclass
class OodCell:
    train_task: str
    test_task: str
    n: int
    exact_match: float | None
    digit_f1: float | None
    delta_exact_match: float | None
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "train_task": self.train_task,
            "test_task": self.test_task,
            "n": self.n,
            "exact_match": self.exact_match,
            "digit_f1": self.digit_f1,
            "delta_exact_match": self.delta_exact_match,
            "failure": self.failure,
        }


def run_ood(tasks, runner, scheme: BinningScheme = FOUR_BIN,
            work_dir=None, cache_dir=None) -> list[OodCell]:
    """Full cross matrix over tasks: train on one, test on another.

    Deltas are absolute differences in exact match against the test
    task's in-distribution diagonal cell, so diagonal deltas are
    exactly zero.  Failed cells are flagged, not fatal.
    """
    by_name = {task.name: task for task in tasks}
    pairs = ood_pairs([task.name for task in tasks])
    cache = _resolve_cache_dir(cache_dir)

    cells: dict[tuple[str, str], OodCell] = {}
    with ExitStack() as stack:
        if work_dir is None:
            work_dir = Path(stack.enter_context(tempfile.TemporaryDirectory()))
        else:
            work_dir = Path(work_dir)
            work_dir.mkdir(parents=True, exist_ok=True)

        side_files = {}
        for task in tasks:
            train, dev, test = make_splits(task.records, SplitPlan(seed=task.seed))
            train_path = work_dir / f"{_safe_name(task.name)}-train.json"
            test_path = work_dir / f"{_safe_name(task.name)}-test.jsonl"
            _write_train_manifest(train_path, task, 1.0, train)
            _write_test_file(test_path, test)
            side_files[task.name] = (train_path, test_path, test)

        for train_name, test_name in pairs:
            train_path = side_files[train_name][0]
            _, test_path, test_records = side_files[test_name]
            out_path = work_dir / (f"{_safe_name(train_name)}--"
                                   f"{_safe_name(test_name)}.preds")
            test_task = by_name[test_name]
            try:
                _invoke_runner(runner, train_path, test_path, out_path, cache)
                report, _ = _score_against(test_records, test_task.victim_type,
                                           out_path, scheme)
            except (RunnerError, DataFormatError, ConfigError) as err:
                cells[(train_name, test_name)] = OodCell(
                    train_name, test_name, len(test_records), None, None,
                    None, failure=str(err))
                continue
            cells[(train_name, test_name)] = OodCell(
                train_name, test_name, report.n, report.exact_match,
                report.digit_f1, None)

    for (train_name, test_name), cell in cells.items():
        diagonal = cells.get((test_name, test_name))
        if cell.exact_match is None or diagonal is None \
                or diagonal.exact_match is None:
            continue
        cell.delta_exact_match = cell.exact_match - diagonal.exact_match
    return [cells[pair] for pair in pairs]


# ---------------------------------------------------------------------------
# Timeline emission


@dataclass
class TimelineSeries:
    events: list  # (id, iso date, count, confidence or None)
    daily: list   # (iso date, total)
    skipped: tuple

    def to_dict(self) -> dict:
        return {
            "events": [list(row) for row in self.events],
            "daily": [list(row) for row in self.daily],
            "skipped": list(self.skipped),
        }


def emit_timeline(records, extractions, victim_type: str, out_dir,
                  confidences=None) -> TimelineSeries:
    """Per-event and daily-aggregated count series, as CSV plus SVG.

    Records with missing or unparseable dates are skipped with a
    warning.  Daily aggregation sums counts; the raw per-event rows are
    kept alongside for anyone who needs the disaggregated view.
    """
    out_dir = Path(out_dir)
    tables = out_dir / "tables"
    figures_dir = out_dir / "figures"
    tables.mkdir(parents=True, exist_ok=True)
    figures_dir.mkdir(parents=True, exist_ok=True)
    confidences = confidences or {}

    events = []
    skipped = []
    for record in records:
        ext = extractions.get(record.id)
        if ext is None:
            continue
        count = ext.count if isinstance(ext, Extraction) else int(ext)
        day = parse_record_date(record.date) if record.date else None
        if day is None:
            warnings.warn(f"record {record.id!r}: unparseable date {record.date!r}")
            skipped.append(record.id)
            continue
        confidence = confidences.get(record.id)
        events.append((record.id, day.isoformat(), count, confidence))
    events.sort(key=lambda row: (row[1], row[0]))

    totals = defaultdict(int)
    for _, day, count, _ in events:
        totals[day] += count
    daily = sorted(totals.items())

    with open(tables / f"timeline_events_{victim_type}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "date", "count", "confidence"])
        for rid, day, count, confidence in events:
            writer.writerow([rid, day, count,
                             "" if confidence is None else f"{confidence:.6f}"])
    with open(tables / f"timeline_daily_{victim_type}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "total"])
        for day, total in daily:
            writer.writerow([day, total])

    from .figures import timeline_figure

    timeline_figure([datetime.strptime(d, "%Y-%m-%d").date() for d, _ in daily],
                    [t for _, t in daily],
                    figures_dir / f"timeline_{victim_type}.svg",
                    victim_type=victim_type)
    return TimelineSeries(events, daily, tuple(skipped))


# ---------------------------------------------------------------------------
# Run directory assembly


def write_report(out_dir, payload: dict, tables: dict | None = None,
                 input_paths=()) -> Path:
    """Write report.json (payload + timestamp), CSV tables, and a
    manifest of input-file hashes under a run directory.

    Everything except the timestamp field is deterministic given the
    same inputs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    body = dict(payload)
    body["timestamp"] = _utc_timestamp()
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")

    if tables:
        tables_dir = out_dir / "tables"
        tables_dir.mkdir(exist_ok=True)
        for name, rows in tables.items():
            with open(tables_dir / f"{_safe_name(name)}.csv", "w",
                      newline="") as fh:
                csv.writer(fh).writerows(rows)

    hashes = {str(path): file_sha256(path) for path in input_paths}
    (out_dir / "inputs.json").write_text(
        json.dumps({"sha256": hashes}, indent=2, sort_keys=True) + "\n")
    return report_path
