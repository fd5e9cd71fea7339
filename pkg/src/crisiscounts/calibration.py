"""Confidence calibration for count predictors.

Covers three prediction kinds: classification scores, generated answer
beams, and regression distributions.  Classification and generation are
measured with expected calibration error over equal-width confidence
bins; regression with a quantile calibration error.  Temperature
scaling and isotonic recalibration bring each kind back toward the
diagonal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError
from .metrics import exact_match

# ---------------------------------------------------------------------------
# Binned calibration error


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    mean_confidence: float
    accuracy: float
    weight: float


def _bin_index(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    # Bin m covers ((m-1)/M, m/M]; confidence 0 goes to the first bin.
    idx = np.ceil(confidences * n_bins).astype(int)
    return np.clip(idx, 1, n_bins)


def reliability_diagram(confidences, correct, n_bins: int = 10) -> list[CalibrationBin]:
    """Per-bin mean confidence, accuracy, and sample weight.

    Weights are fractions of the full sample, so they sum to 1 over the
    non-empty bins and the weighted |accuracy - confidence| gaps sum to
    the expected calibration error exactly.
    """
    conf = np.asarray(confidences, dtype=float)
    corr = np.asarray(correct, dtype=float)
    if conf.ndim != 1 or conf.shape != corr.shape:
        raise CalibrationError("confidences and correctness must be equal-length vectors")
    if conf.size == 0:
        raise CalibrationError("empty calibration input")
    if np.any(~np.isfinite(conf)) or np.any(conf < 0) or np.any(conf > 1):
        raise CalibrationError("confidences must lie in [0, 1]")
    if n_bins < 1:
        raise CalibrationError("need at least one bin")
    idx = _bin_index(conf, n_bins)
    bins = []
    n = conf.size
    for m in range(1, n_bins + 1):
        mask = idx == m
        count = int(mask.sum())
        if count == 0:
            continue
        bins.append(CalibrationBin(
            lower=(m - 1) / n_bins,
            upper=m / n_bins,
            mean_confidence=float(conf[mask].mean()),
            accuracy=float(corr[mask].mean()),
            weight=count / n,
        ))
    return bins


def ece_from_bins(bins: list[CalibrationBin]) -> float:
    return float(sum(b.weight * abs(b.accuracy - b.mean_confidence) for b in bins))


def ece(confidences, correct, n_bins: int = 10) -> float:
    """Expected calibration error: weighted mean |accuracy - confidence|."""
    return ece_from_bins(reliability_diagram(confidences, correct, n_bins))


def reg_ce(quantile_values, n_bins: int = 10) -> float:
    """Quantile calibration error for regression predictors.

    quantile_values[i] is the predicted CDF evaluated at the true count
    of sample i.  For each level m/M the empirical frequency of values
    at or below the level is compared with the level itself.
    """
    q = np.asarray(quantile_values, dtype=float)
    if q.size == 0:
        raise CalibrationError("empty calibration input")
    if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
        raise CalibrationError("quantile values must lie in [0, 1]")
    if n_bins < 1:
        raise CalibrationError("need at least one bin")
    total = 0.0
    for m in range(1, n_bins + 1):
        level = m / n_bins
        freq = float((q <= level).mean())
        total += abs(freq - level)
    return total / n_bins


# ---------------------------------------------------------------------------
# Generation confidence


def softmax(scores, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(scores, dtype=float) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def gen_confidence(beam_scores, temperature: float = 1.0, top_b: int | None = None):
    """Confidence of the best beam: softmax over the top-b raw scores.

    beam_scores must be sorted descending (best first).  Returns the
    probability mass the softmax puts on the first candidate.
    """
    scores = list(beam_scores)
    if not scores:
        raise CalibrationError("empty beam list")
    if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
        raise CalibrationError("beam scores must be sorted descending")
    if top_b is not None:
        scores = scores[:top_b]
    return float(softmax(scores, temperature)[0])


# ---------------------------------------------------------------------------
# Temperature scaling


@dataclass
class TemperatureCalibrator:
    temperature: float

    def to_dict(self) -> dict:
        return {"kind": "temperature", "T": self.temperature}


@dataclass
class IsotonicCalibrator:
    # Increasing (input quantile, output frequency) pairs; applied by
    # linear interpolation with flat extrapolation.
    breakpoints: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {"kind": "isotonic",
                "breakpoints": [[float(x), float(y)] for x, y in self.breakpoints]}

    def apply(self, values) -> np.ndarray:
        xs = np.array([x for x, _ in self.breakpoints], dtype=float)
        ys = np.array([y for _, y in self.breakpoints], dtype=float)
        out = np.interp(np.asarray(values, dtype=float), xs, ys)
        return np.clip(out, 0.0, 1.0)


def save_calibrator(calibrator, path):
    with open(path, "w") as fh:
        json.dump(calibrator.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_calibrator(path):
    with open(path) as fh:
        payload = json.load(fh)
    kind = payload.get("kind")
    if kind == "temperature":
        return TemperatureCalibrator(float(payload["T"]))
    if kind == "isotonic":
        return IsotonicCalibrator([(float(x), float(y))
                                   for x, y in payload["breakpoints"]])
    raise CalibrationError(f"unknown calibrator kind: {kind!r}")


T_BOUNDS = (0.01, 100.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _nll(logit_rows, label_idx, temperature: float) -> float:
    total = 0.0
    for row, label in zip(logit_rows, label_idx):
        z = np.asarray(row, dtype=float) / temperature
        z = z - z.max()
        total -= float(z[label] - math.log(np.exp(z).sum()))
    return total / len(logit_rows)


def fit_temperature(logit_rows, label_idx) -> TemperatureCalibrator:
    """Fit a softmax temperature by NLL minimization on held-out data.

    Golden-section search on log T over [0.01, 100] down to a T
    resolution of 1e-4.  The fit never scores worse than T = 1 and
    never changes any argmax.
    """
    rows = [np.asarray(r, dtype=float) for r in logit_rows]
    labels = list(label_idx)
    if not rows or len(rows) != len(labels):
        raise CalibrationError("need matching non-empty scores and labels")
    for row, label in zip(rows, labels):
        if not 0 <= label < len(row):
            raise CalibrationError(f"label {label} outside score row of size {len(row)}")
    if len({int(l) for l in labels}) < 2 and len(rows[0]) > 1 and len(rows) > 1:
        raise CalibrationError("degenerate labels: only one class present")

    lo, hi = math.log(T_BOUNDS[0]), math.log(T_BOUNDS[1])

    def objective(u: float) -> float:
        return _nll(rows, labels, math.exp(u))

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    # 1e-6 on log T keeps the T resolution below 1e-4 across the range.
    while b - a > 1e-6:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(d)
    t_star = math.exp((a + b) / 2.0)
    if _nll(rows, labels, t_star) > _nll(rows, labels, 1.0):
        t_star = 1.0
    return TemperatureCalibrator(t_star)


def fit_temperature_generation(prediction_set, gold_strings,
                               top_b: int | None = None) -> TemperatureCalibrator:
    """Temperature fit for beam candidates, treating beams as classes.

    Samples whose gold answer matches no candidate carry no likelihood
    signal and are skipped; an all-skipped dev set is an error.
    """
    rows, labels = [], []
    for beams, gold in zip(prediction_set.beams, gold_strings):
        cands = beams[:top_b] if top_b else beams
        hit = next((i for i, (text, _) in enumerate(cands)
                    if exact_match(text, gold)), None)
        if hit is None:
            continue
        rows.append([score for _, score in cands])
        labels.append(hit)
    if not rows:
        raise CalibrationError("no dev sample has its gold answer among the beams")
    return fit_temperature(rows, labels)


# ---------------------------------------------------------------------------
# Isotonic recalibration for regression quantiles


def pava(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: least-squares monotone (non-decreasing)
    fit to a sequence, with optional positive weights."""
    y = np.asarray(values, dtype=float)
    if y.size == 0:
        raise CalibrationError("empty input")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape or np.any(w <= 0):
        raise CalibrationError("weights must be positive and match values")

    means: list[float] = []
    sizes: list[int] = []
    wsum: list[float] = []
    for val, wt in zip(y, w):
        means.append(float(val))
        wsum.append(float(wt))
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wsum.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), wsum.pop(), sizes.pop()
            means.append((m1 * w1 + m2 * w2) / (w1 + w2))
            wsum.append(w1 + w2)
            sizes.append(s1 + s2)
    out = np.empty_like(y)
    pos = 0
    for mean, size in zip(means, sizes):
        out[pos:pos + size] = mean
        pos += size
    return out


def fit_isotonic(dev_quantiles) -> IsotonicCalibrator:
    """Fit a monotone map from predicted quantile to empirical frequency.

    For each distinct predicted quantile q the target is the fraction
    of dev samples with value <= q; PAVA smooths the targets into a
    non-decreasing map.
    """
    q = np.asarray(dev_quantiles, dtype=float)
    if q.size == 0:
        raise CalibrationError("empty calibration input")
    if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
        raise CalibrationError("quantile values must lie in [0, 1]")
    order = np.sort(q)
    n = order.size
    xs, targets, weights = [], [], []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and order[j + 1] == order[i]:
            j += 1
        xs.append(float(order[i]))
        targets.append((j + 1) / n)  # empirical CDF at this value
        weights.append(j - i + 1)
        i = j + 1
    fitted = pava(targets, weights)
    return IsotonicCalibrator(list(zip(xs, fitted.tolist())))


# ---------------------------------------------------------------------------
# Prediction sets and their file formats

CLASSIFICATION = "classification"
GENERATION = "generation"
REGRESSION = "regression"


@dataclass
class PredictionSet:
    """Uniform wrapper over the three prediction file layouts."""

    kind: str
    ids: list[str]
    scores: np.ndarray | None = None                 # classification (n, k)
    beams: list[list[tuple[str, float]]] = field(default_factory=list)
    loc: np.ndarray | None = None                    # regression
    scale: np.ndarray | None = None
    quantile_grid: list[list[tuple[float, float]]] | None = None

    def __len__(self) -> int:
        return len(self.ids)


def load_predictions(path) -> PredictionSet:
    """Load a JSONL prediction file, inferring its kind from the fields.

    Lines carry {"id", "scores"} for classification, {"id", "beams"}
    for generation, and {"id", "loc", "scale"} or {"id", "quantiles"}
    for regression.  Mixed or malformed lines are errors.
    """
    ids: list[str] = []
    kind = None
    scores, beams, locs, scales, grids = [], [], [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CalibrationError(f"{path}: line {lineno}: bad JSON ({exc})")
            if "id" not in rec:
                raise CalibrationError(f"{path}: line {lineno}: missing id")
            if "scores" in rec:
                line_kind = CLASSIFICATION
            elif "beams" in rec:
                line_kind = GENERATION
            elif "loc" in rec or "quantiles" in rec:
                line_kind = REGRESSION
            else:
                raise CalibrationError(f"{path}: line {lineno}: unrecognized prediction fields")
            if kind is None:
                kind = line_kind
            elif kind != line_kind:
                raise CalibrationError(f"{path}: line {lineno}: mixed prediction kinds")
            ids.append(str(rec["id"]))
            if line_kind == CLASSIFICATION:
                row = [float(v) for v in rec["scores"]]
                if not row or any(not math.isfinite(v) for v in row):
                    raise CalibrationError(f"{path}: line {lineno}: scores must be finite")
                scores.append(row)
            elif line_kind == GENERATION:
                cand = [(str(b["text"]), float(b["score"])) for b in rec["beams"]]
                if not cand:
                    raise CalibrationError(f"{path}: line {lineno}: empty beam list")
                if any(not math.isfinite(s) for _, s in cand):
                    raise CalibrationError(f"{path}: line {lineno}: scores must be finite")
                if any(cand[i][1] < cand[i + 1][1] for i in range(len(cand) - 1)):
                    raise CalibrationError(
                        f"{path}: line {lineno}: beams must be sorted by score descending")
                beams.append(cand)
            else:
                if "loc" in rec:
                    loc = float(rec["loc"])
                    scale = float(rec["scale"])
                    if not math.isfinite(loc) or not math.isfinite(scale) or scale <= 0:
                        raise CalibrationError(f"{path}: line {lineno}: bad loc/scale")
                    locs.append(loc)
                    scales.append(scale)
                    grids.append(None)
                else:
                    pairs = [(float(p["p"]), float(p["value"])) for p in rec["quantiles"]]
                    if not pairs or any(not 0 <= p <= 1 for p, _ in pairs):
                        raise CalibrationError(f"{path}: line {lineno}: bad quantiles")
                    pairs.sort()
                    if any(pairs[i][1] > pairs[i + 1][1] for i in range(len(pairs) - 1)):
                        raise CalibrationError(
                            f"{path}: line {lineno}: quantile values must be non-decreasing")
                    grids.append(pairs)
                    locs.append(math.nan)
                    scales.append(math.nan)
    if kind is None:
        raise CalibrationError(f"{path}: no predictions found")
    if kind == CLASSIFICATION:
        width = len(scores[0])
        if any(len(r) != width for r in scores):
            raise CalibrationError(f"{path}: ragged score rows")
        return PredictionSet(kind, ids, scores=np.array(scores, dtype=float))
    if kind == GENERATION:
        return PredictionSet(kind, ids, beams=beams)
    has_grid = [g is not None for g in grids]
    if any(has_grid) and not all(has_grid):
        raise CalibrationError(f"{path}: mixed regression layouts")
    if all(has_grid):
        return PredictionSet(kind, ids, quantile_grid=grids)
    return PredictionSet(kind, ids,
                         loc=np.array(locs, dtype=float),
                         scale=np.array(scales, dtype=float))


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def quantile_of_truth(pred_set: PredictionSet, gold_counts) -> np.ndarray:
    """Predicted CDF evaluated at the true count, per sample.

    loc/scale rows describe a normal over log(1 + count); explicit
    quantile grids are interpolated on the count scale.
    """
    if pred_set.kind != REGRESSION:
        raise CalibrationError(f"expected regression predictions, got {pred_set.kind}")
    golds = list(gold_counts)
    if len(golds) != len(pred_set):
        raise CalibrationError("gold count / prediction length mismatch")
    out = np.empty(len(golds), dtype=float)
    if pred_set.quantile_grid is not None:
        for i, (grid, y) in enumerate(zip(pred_set.quantile_grid, golds)):
            ps = np.array([p for p, _ in grid])
            vs = np.array([v for _, v in grid])
            out[i] = float(np.clip(np.interp(float(y), vs, ps), 0.0, 1.0))
        return out
    for i, y in enumerate(golds):
        if y < 0:
            raise CalibrationError("counts must be non-negative")
        z = (math.log1p(float(y)) - pred_set.loc[i]) / pred_set.scale[i]
        out[i] = _norm_cdf(z)
    return out


def classification_confidence(pred_set: PredictionSet,
                              temperature: float = 1.0):
    """(argmax class, softmax confidence) per classification row."""
    if pred_set.kind != CLASSIFICATION:
        raise CalibrationError(f"expected classification predictions, got {pred_set.kind}")
    picks, confs = [], []
    for row in pred_set.scores:
        probs = softmax(row, temperature)
        picks.append(int(np.argmax(row)))
        confs.append(float(probs[picks[-1]]))
    return np.array(picks), np.array(confs)


def generation_confidence(pred_set: PredictionSet, temperature: float = 1.0,
                          top_b: int | None = 5):
    """(top candidate text, confidence) per generation row."""
    if pred_set.kind != GENERATION:
        raise CalibrationError(f"expected generation predictions, got {pred_set.kind}")
    texts, confs = [], []
    for cand in pred_set.beams:
        texts.append(cand[0][0])
        confs.append(gen_confidence([s for _, s in cand],
                                    temperature=temperature, top_b=top_b))
    return texts, np.array(confs)


def apply_calibrator(calibrator, pred_set: PredictionSet):
    """Return calibrated confidences (or quantiles) for a prediction set.

    Temperature calibrators serve classification and generation;
    isotonic calibrators serve regression quantiles.  Anything else is
    a kind mismatch.
    """
    if isinstance(calibrator, TemperatureCalibrator):
        if pred_set.kind == CLASSIFICATION:
            return classification_confidence(pred_set, calibrator.temperature)[1]
        if pred_set.kind == GENERATION:
            return generation_confidence(pred_set, calibrator.temperature)[1]
        raise CalibrationError("temperature calibrator applied to regression predictions")
    if isinstance(calibrator, IsotonicCalibrator):
        if pred_set.kind != REGRESSION:
            raise CalibrationError("isotonic calibrator requires regression predictions")
        raise CalibrationError("apply isotonic calibrators to quantile values "
                               "via IsotonicCalibrator.apply")
    raise CalibrationError(f"unknown calibrator: {type(calibrator).__name__}")
