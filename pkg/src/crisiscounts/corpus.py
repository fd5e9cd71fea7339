"""Dataset loading, filtering, and deterministic splitting.

Event datasets arrive as CSV, TSV, or JSONL with arbitrary column
names; a schema mapping names the id, text, date, and per-victim-type
count columns.  Records with missing requested counts are dropped on
load, zero-count-only records optionally too.  Splits are seeded and
reproducible, and few-shot subsets nest across fractions.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

from .errors import ConfigError, DataFormatError

FEWSHOT_FRACTIONS = (1.0, 0.5, 0.1, 0.05, 0.005, 0.0)


@dataclass(frozen=True)
class EventRecord:
    id: str
    text: str
    gold_counts: dict = field(default_factory=dict)
    source: str = ""
    date: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError(f"record {self.id!r}: empty text")
        for vt, count in self.gold_counts.items():
            if count is not None and count < 0:
                raise ValueError(f"record {self.id!r}: negative count for {vt}")


@dataclass(frozen=True)
class DatasetSchema:
    """Column mapping for one dataset file."""

    id_column: str
    text_column: str
    count_columns: dict        # victim type -> column name
    source: str = ""
    date_column: str | None = None

    @classmethod
    def from_dict(cls, payload: dict) -> "DatasetSchema":
        try:
            return cls(
                id_column=payload["id"],
                text_column=payload["text"],
                count_columns=dict(payload["counts"]),
                source=payload.get("source", ""),
                date_column=payload.get("date"),
            )
        except KeyError as exc:
            raise ConfigError(f"schema missing required key: {exc}")

    @classmethod
    def from_file(cls, path) -> "DatasetSchema":
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: schema is not valid JSON ({exc})")
        return cls.from_dict(payload)


_MISSING = {"", "nan", "null", "none", "na"}


def _parse_count_cell(value, line, column):
    if value is None:
        return None
    text = str(value).strip()
    if text.lower() in _MISSING:
        return None
    try:
        number = float(text)
    except ValueError:
        raise DataFormatError(f"column {column!r}: not a count: {value!r}", line)
    if math.isnan(number):
        return None
    if number < 0 or number != int(number):
        raise DataFormatError(f"column {column!r}: not a non-negative integer: {value!r}", line)
    return int(number)


def _rows_from_file(path):
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".tsv"):
        delim = "," if suffix == ".csv" else "\t"
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh, delimiter=delim)
            if reader.fieldnames is None:
                raise DataFormatError(f"{path}: empty file")
            for row in reader:
                if None in row or any(v is None for v in row.values()):
                    raise DataFormatError("ragged row", reader.line_num)
                yield reader.line_num, row
    elif suffix in (".jsonl", ".ndjson"):
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    row = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise DataFormatError(f"bad JSON ({exc})", lineno)
                if not isinstance(row, dict):
                    raise DataFormatError("expected a JSON object", lineno)
                yield lineno, row
    else:
        raise ConfigError(f"{path}: unsupported dataset extension {suffix!r}")


def load_dataset(path, schema: DatasetSchema, drop_zero: bool = False,
                 victim_types=None) -> list[EventRecord]:
    """Load event records, dropping rows with missing requested counts.

    victim_types defaults to every type in the schema; rows missing any
    requested count are dropped, and with drop_zero rows whose requested
    counts are all zero are dropped as well.  Row order is preserved.
    """
    requested = list(victim_types) if victim_types else list(schema.count_columns)
    for vt in requested:
        if vt not in schema.count_columns:
            raise ConfigError(f"victim type {vt!r} not in schema counts")

    records = []
    seen = set()
    for lineno, row in _rows_from_file(path):
        def cell(column):
            if column not in row:
                raise ConfigError(f"{path}: unknown column {column!r}")
            return row[column]

        rec_id = str(cell(schema.id_column)).strip()
        if not rec_id:
            raise DataFormatError("empty record id", lineno)
        if rec_id in seen:
            raise DataFormatError(f"duplicate record id {rec_id!r}", lineno)
        seen.add(rec_id)
        text = str(cell(schema.text_column))
        if not text.strip():
            raise DataFormatError(f"record {rec_id!r}: empty text", lineno)

        counts = {}
        for vt in requested:
            counts[vt] = _parse_count_cell(cell(schema.count_columns[vt]),
                                           lineno, schema.count_columns[vt])
        if any(counts[vt] is None for vt in requested):
            continue
        if drop_zero and all(counts[vt] == 0 for vt in requested):
            continue

        rec_date = None
        if schema.date_column is not None:
            raw = cell(schema.date_column)
            rec_date = str(raw).strip() or None

        records.append(EventRecord(
            id=rec_id, text=text, gold_counts=counts,
            source=schema.source, date=rec_date,
        ))
    return records


_DATE_FORMATS = ("%Y-%m-%d", "%d %B %Y", "%d %b %Y", "%m/%d/%Y")


def parse_record_date(raw: str) -> date | None:
    """Best-effort date parsing over the formats seen in event data."""
    text = raw.strip()
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    try:
        return datetime.fromisoformat(text).date()
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# Splits


@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    train_fraction: float = 0.8
    dev_fraction: float = 0.1
    test_fraction: float = 0.1

    def __post_init__(self):
        total = self.train_fraction + self.dev_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        if min(self.train_fraction, self.dev_fraction, self.test_fraction) <= 0:
            raise ValueError("split fractions must be strictly positive")


def _shuffled(records, seed: int):
    out = list(records)
    random.Random(seed).shuffle(out)
    return out


def make_splits(records, plan: SplitPlan = SplitPlan()):
    """Deterministic (train, dev, test) partition of the records.

    The same seed always produces the same partition; every record
    lands in exactly one side.
    """
    if len(records) < 3:
        raise ValueError(f"need at least 3 records to split, got {len(records)}")
    shuffled = _shuffled(records, plan.seed)
    n = len(shuffled)
    n_train = round(plan.train_fraction * n)
    n_dev = round(plan.dev_fraction * n)
    n_train = min(n_train, n - 2)
    n_dev = max(1, min(n_dev, n - n_train - 1))
    train = shuffled[:n_train]
    dev = shuffled[n_train:n_train + n_dev]
    test = shuffled[n_train + n_dev:]
    return train, dev, test


def fewshot_subset(train_records, fraction: float, seed: int = 0):
    """Seeded subset of the training records with round(fraction * n)
    elements.  Subsets nest: a smaller fraction is always a prefix of a
    larger one under the same seed."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    order = _shuffled(train_records, seed)
    k = round(fraction * len(order))
    return order[:k]


def ood_pairs(tasks):
    """All ordered (train_task, test_task) combinations.

    Includes the in-distribution diagonal so transfer deltas have their
    reference cells; needs at least two distinct tasks.
    """
    tasks = list(tasks)
    if len(tasks) != len(set(tasks)):
        raise ValueError("tasks must be distinct")
    if len(tasks) < 2:
        raise ValueError(f"need at least 2 tasks for transfer pairs, got {len(tasks)}")
    return [(a, b) for a in tasks for b in tasks]


# ---------------------------------------------------------------------------
# Split manifests


def write_manifest(path, train, dev, test, plan: SplitPlan,
                   fewshot: dict | None = None):
    payload = {
        "seed": plan.seed,
        "fractions": {
            "train": plan.train_fraction,
            "dev": plan.dev_fraction,
            "test": plan.test_fraction,
        },
        "train": [r.id for r in train],
        "dev": [r.id for r in dev],
        "test": [r.id for r in test],
    }
    if fewshot is not None:
        payload["fewshot"] = {str(f): [r.id for r in recs]
                              for f, recs in fewshot.items()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: manifest is not valid JSON ({exc})")
    for key in ("train", "dev", "test"):
        if key not in payload:
            raise ConfigError(f"{path}: manifest missing {key!r} ids")
    return payload


def select_records(records, ids) -> list[EventRecord]:
    """Records matching the given ids, in manifest order."""
    by_id = {r.id: r for r in records}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ConfigError(f"manifest ids not in dataset: {missing[:5]}"
                          + ("..." if len(missing) > 5 else ""))
    return [by_id[i] for i in ids]
