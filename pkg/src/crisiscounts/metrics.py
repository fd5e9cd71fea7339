"""Accuracy metrics for extracted victim counts.

Counts are compared three ways: exact match on canonical digit strings,
a bag-of-digit-characters F1 for partial credit, and coarse class
metrics after binning counts into magnitude ranges.  Regression-style
errors (mse on log counts, pinball loss) cover distributional
predictors.
"""

from __future__ import annotations

import csv
import json
import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BinningScheme:
    """Half-open magnitude bins over non-negative counts.

    cuts = [c1, c2, ...] (strictly increasing) defines classes
    [0, c1], (c1, c2], ..., (ck, inf).  With cuts starting at 0 the
    first class is the singleton {0}.
    """

    name: str
    cuts: tuple[int, ...]

    def __post_init__(self):
        if not self.cuts:
            raise ValueError("scheme needs at least one cut")
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise ValueError("cuts must be strictly increasing")

    @property
    def n_classes(self) -> int:
        return len(self.cuts) + 1

    def labels(self) -> list[str]:
        out = []
        lower = None
        for cut in self.cuts:
            if lower is None:
                out.append(f"[0,{cut}]" if cut else "{0}")
            else:
                out.append(f"({lower},{cut}]")
            lower = cut
        out.append(f"({lower},inf)")
        return out


# Zero / low / medium / high, as used for count confusion analysis.
FOUR_BIN = BinningScheme("four-bin", (0, 3, 10))
# Merges zero into the low class; used for classification heads.
THREE_CLASS = BinningScheme("three-class", (3, 10))

SCHEMES = {s.name: s for s in (FOUR_BIN, THREE_CLASS)}


def bin_count(y: int, scheme: BinningScheme) -> int:
    if y < 0:
        raise ValueError(f"negative count {y}")
    return bisect_left(scheme.cuts, y)


def canonical_count(s: str) -> str:
    """Trim whitespace; strip leading zeros from pure digit strings."""
    s = str(s).strip()
    if s.isdigit():
        return s.lstrip("0") or "0"
    return s


def exact_match(pred: str, gold: str) -> float:
    return 1.0 if canonical_count(pred) == canonical_count(gold) else 0.0


def digit_f1(pred: str, gold: str) -> float:
    """F1 over the multisets of digit characters in the two strings."""
    p = Counter(c for c in str(pred) if c.isdigit())
    g = Counter(c for c in str(gold) if c.isdigit())
    if not p and not g:
        return 1.0
    if not p or not g:
        return 0.0
    overlap = sum((p & g).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(p.values())
    recall = overlap / sum(g.values())
    return 2 * precision * recall / (precision + recall)


def _as_classes(preds, golds, scheme: BinningScheme):
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty input")
    p = [bin_count(int(x), scheme) for x in preds]
    g = [bin_count(int(x), scheme) for x in golds]
    return p, g


def confusion_matrix(preds, golds, scheme: BinningScheme) -> np.ndarray:
    """Row-normalized confusion matrix: entry (i, j) is the fraction of
    gold-class-i samples predicted as class j.  Rows with no gold
    support stay all-zero."""
    p, g = _as_classes(preds, golds, scheme)
    k = scheme.n_classes
    counts = np.zeros((k, k), dtype=float)
    for gi, pi in zip(g, p):
        counts[gi, pi] += 1.0
    row_sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(row_sums > 0, counts / row_sums, 0.0)
    return out


def macro_prf(preds, golds, scheme: BinningScheme) -> tuple[float, float, float]:
    """Unweighted class-mean precision/recall/F1 over classes that have
    gold or predicted support.  A class with no predicted support
    contributes precision 0; no gold support contributes recall 0."""
    p, g = _as_classes(preds, golds, scheme)
    present = sorted(set(p) | set(g))
    precisions, recalls, f1s = [], [], []
    for c in present:
        tp = sum(1 for gi, pi in zip(g, p) if gi == c and pi == c)
        pred_n = sum(1 for pi in p if pi == c)
        gold_n = sum(1 for gi in g if gi == c)
        prec = tp / pred_n if pred_n else 0.0
        rec = tp / gold_n if gold_n else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
    n = len(present)
    return sum(precisions) / n, sum(recalls) / n, sum(f1s) / n


def mse_log(preds, golds) -> float:
    """Mean squared error between log(1 + pred) and log(1 + gold)."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty input")
    total = 0.0
    for p, g in zip(preds, golds):
        if p < 0 or g < 0:
            raise ValueError("counts must be non-negative")
        total += (math.log1p(p) - math.log1p(g)) ** 2
    return total / len(golds)


def pinball_loss(preds, golds, q: float) -> float:
    """Mean pinball loss of point predictions against golds at quantile q."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty input")
    total = 0.0
    for p, g in zip(preds, golds):
        err = g - p
        total += max(q * err, (q - 1) * err)
    return total / len(golds)


DEFAULT_QUANTILES = (0.1, 0.9)


@dataclass
class ScoreReport:
    """Bundle of all count metrics for one prediction run."""

    n: int
    exact_match: float
    digit_f1: float
    scheme: str
    confusion: list[list[float]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mse_log: float | None = None
    pinball: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "exact_match": self.exact_match,
            "digit_f1": self.digit_f1,
            "scheme": self.scheme,
            "confusion": self.confusion,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "mse_log": self.mse_log,
            "pinball": self.pinball,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_confusion_csv(self, path, scheme: BinningScheme | None = None):
        scheme = scheme or SCHEMES[self.scheme]
        labels = scheme.labels()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gold\\pred"] + labels)
            for label, row in zip(labels, self.confusion):
                writer.writerow([label] + [f"{v:.6f}" for v in row])


def score_counts(preds, golds, scheme: BinningScheme = FOUR_BIN,
                 quantiles=DEFAULT_QUANTILES) -> ScoreReport:
    """Score integer count predictions against integer golds."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty input")
    em = sum(exact_match(str(p), str(g)) for p, g in zip(preds, golds)) / len(golds)
    f1 = sum(digit_f1(str(p), str(g)) for p, g in zip(preds, golds)) / len(golds)
    conf = confusion_matrix(preds, golds, scheme)
    mp, mr, mf = macro_prf(preds, golds, scheme)
    return ScoreReport(
        n=len(golds),
        exact_match=em,
        digit_f1=f1,
        scheme=scheme.name,
        confusion=[list(map(float, row)) for row in conf],
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=mf,
        mse_log=mse_log(preds, golds),
        pinball={str(q): pinball_loss(preds, golds, q) for q in quantiles},
    )


def score_strings(preds, golds, scheme: BinningScheme = FOUR_BIN,
                  quantiles=DEFAULT_QUANTILES) -> ScoreReport:
    """Score string predictions (generated answers) against gold strings.

    EM and digit F1 operate on the raw strings.  Class and regression
    metrics only cover pairs where both sides parse as counts;
    unparseable predictions count as class errors via a fallback of 0.
    """
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty input")
    em = sum(exact_match(p, g) for p, g in zip(preds, golds)) / len(golds)
    f1 = sum(digit_f1(p, g) for p, g in zip(preds, golds)) / len(golds)

    from .numerals import parse_count_token

    pred_counts, gold_counts = [], []
    for p, g in zip(preds, golds):
        gv = parse_count_token(str(g))
        if gv is None:
            continue
        pv = parse_count_token(str(p))
        pred_counts.append(pv if pv is not None else 0)
        gold_counts.append(gv)
    if not gold_counts:
        raise ValueError("no gold strings parse as counts")
    conf = confusion_matrix(pred_counts, gold_counts, scheme)
    mp, mr, mf = macro_prf(pred_counts, gold_counts, scheme)
    return ScoreReport(
        n=len(golds),
        exact_match=em,
        digit_f1=f1,
        scheme=scheme.name,
        confusion=[list(map(float, row)) for row in conf],
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=mf,
        mse_log=mse_log(pred_counts, gold_counts),
        pinball={str(q): pinball_loss(pred_counts, gold_counts, q)
                 for q in quantiles},
    )
