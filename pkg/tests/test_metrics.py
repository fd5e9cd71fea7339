from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisiscounts.metrics import (
    FOUR_BIN,
    THREE_CLASS,
    BinningScheme,
    bin_count,
    canonical_count,
    confusion_matrix,
    digit_f1,
    exact_match,
    macro_prf,
    mse_log,
    pinball_loss,
    score_counts,
    score_strings,
)

# ---------------------------------------------------------------------------
# Independent oracles, written as plainly as possible.


def oracle_em(pred: str, gold: str) -> float:
    def canon(s):
        s = s.strip()
        while len(s) > 1 and s.isdigit() and s[0] == "0":
            s = s[1:]
        return s

    return 1.0 if canon(pred) == canon(gold) else 0.0


def oracle_digit_f1(pred: str, gold: str) -> float:
    p = sorted(c for c in pred if c in "0123456789")
    g = sorted(c for c in gold if c in "0123456789")
    if not p and not g:
        return 1.0
    if not p or not g:
        return 0.0
    overlap = 0
    rest = list(g)
    for c in p:
        if c in rest:
            rest.remove(c)
            overlap += 1
    if overlap == 0:
        return 0.0
    prec = overlap / len(p)
    rec = overlap / len(g)
    return 2 * prec * rec / (prec + rec)


def oracle_four_bin(y: int) -> int:
    if y == 0:
        return 0
    if y <= 3:
        return 1
    if y <= 10:
        return 2
    return 3


def oracle_pinball(preds, golds, q):
    losses = []
    for p, g in zip(preds, golds):
        if g >= p:
            losses.append(q * (g - p))
        else:
            losses.append((1 - q) * (p - g))
    return sum(losses) / len(losses)


# ---------------------------------------------------------------------------


def test_exact_match_frozen_cases():
    assert exact_match("05", "5") == 1.0
    assert exact_match(" 23 ", "23") == 1.0
    assert exact_match("23", "13") == 0.0
    assert exact_match("0", "00") == 1.0
    assert canonical_count("000") == "0"


def test_digit_f1_frozen_cases():
    assert digit_f1("23", "13") == pytest.approx(0.5)
    assert digit_f1("", "") == 1.0
    assert digit_f1("7", "") == 0.0
    assert digit_f1("", "7") == 0.0
    assert digit_f1("123", "321") == 1.0
    assert digit_f1("one", "two") == 1.0  # no digits on either side


def test_metric_oracle_equivalence_on_random_pairs():
    rng = random.Random(7)
    for _ in range(200):
        pred = str(rng.randint(0, 5000)) if rng.random() < 0.8 else "dozens"
        gold = str(rng.randint(0, 5000))
        assert exact_match(pred, gold) == oracle_em(pred, gold)
        assert abs(digit_f1(pred, gold) - oracle_digit_f1(pred, gold)) < 1e-12


def test_four_bin_boundaries():
    assert bin_count(0, FOUR_BIN) == 0
    assert bin_count(1, FOUR_BIN) == 1
    assert bin_count(3, FOUR_BIN) == 1
    assert bin_count(4, FOUR_BIN) == 2
    assert bin_count(5, FOUR_BIN) == 2
    assert bin_count(10, FOUR_BIN) == 2
    assert bin_count(11, FOUR_BIN) == 3
    for y in range(0, 200):
        assert bin_count(y, FOUR_BIN) == oracle_four_bin(y)


def test_three_class_boundaries():
    assert bin_count(0, THREE_CLASS) == 0
    assert bin_count(3, THREE_CLASS) == 0
    assert bin_count(4, THREE_CLASS) == 1
    assert bin_count(10, THREE_CLASS) == 1
    assert bin_count(11, THREE_CLASS) == 2


def test_bin_count_rejects_negative():
    with pytest.raises(ValueError):
        bin_count(-1, FOUR_BIN)


def test_scheme_validation():
    with pytest.raises(ValueError):
        BinningScheme("bad", (3, 3))
    with pytest.raises(ValueError):
        BinningScheme("empty", ())


def test_confusion_identity_when_perfect():
    golds = [0, 2, 5, 12, 3]
    mat = confusion_matrix(golds, golds, FOUR_BIN)
    for g in golds:
        c = bin_count(g, FOUR_BIN)
        assert mat[c, c] == 1.0
    off = mat - np.diag(np.diag(mat))
    assert not off.any()


def test_confusion_row_normalization():
    # gold 0 twice; predictions 0 and 5 land in classes 0 and 2.
    mat = confusion_matrix([0, 5], [0, 0], FOUR_BIN)
    assert mat[0].tolist() == [0.5, 0.0, 0.5, 0.0]
    assert mat[1].tolist() == [0.0, 0.0, 0.0, 0.0]


def test_confusion_rows_sum_to_one_or_zero():
    rng = random.Random(3)
    preds = [rng.randint(0, 20) for _ in range(100)]
    golds = [rng.randint(0, 20) for _ in range(100)]
    mat = confusion_matrix(preds, golds, FOUR_BIN)
    for row in mat:
        assert row.sum() == pytest.approx(1.0) or row.sum() == 0.0


def test_confusion_input_validation():
    with pytest.raises(ValueError):
        confusion_matrix([], [], FOUR_BIN)
    with pytest.raises(ValueError):
        confusion_matrix([1], [1, 2], FOUR_BIN)


def test_macro_prf_all_predicted_into_one_class():
    scheme = BinningScheme("unit", (0, 1))
    p, r, f = macro_prf([0, 0, 0], [0, 1, 2], scheme)
    assert r == pytest.approx((1 + 0 + 0) / 3)
    assert p == pytest.approx((1 / 3 + 0 + 0) / 3)


def test_macro_prf_single_class_perfect():
    p, r, f = macro_prf([5, 7], [5, 7], FOUR_BIN)
    assert (p, r, f) == (1.0, 1.0, 1.0)


def test_macro_prf_against_sklearn_style_oracle():
    rng = random.Random(11)
    preds = [rng.randint(0, 15) for _ in range(60)]
    golds = [rng.randint(0, 15) for _ in range(60)]
    pc = [bin_count(x, FOUR_BIN) for x in preds]
    gc = [bin_count(x, FOUR_BIN) for x in golds]
    present = sorted(set(pc) | set(gc))
    precs, recs = [], []
    for c in present:
        tp = sum(1 for a, b in zip(gc, pc) if a == c and b == c)
        fp = sum(1 for a, b in zip(gc, pc) if a != c and b == c)
        fn = sum(1 for a, b in zip(gc, pc) if a == c and b != c)
        precs.append(tp / (tp + fp) if tp + fp else 0.0)
        recs.append(tp / (tp + fn) if tp + fn else 0.0)
    p, r, _ = macro_prf(preds, golds, FOUR_BIN)
    assert p == pytest.approx(sum(precs) / len(precs), abs=1e-12)
    assert r == pytest.approx(sum(recs) / len(recs), abs=1e-12)


def test_mse_log_frozen_case():
    assert mse_log([math.e - 1], [0]) == pytest.approx(1.0, abs=1e-12)
    assert mse_log([3, 3], [3, 3]) == 0.0
    with pytest.raises(ValueError):
        mse_log([-1], [0])


def test_pinball_frozen_cases():
    assert pinball_loss([0], [10], 0.9) == pytest.approx(9.0)
    assert pinball_loss([10], [0], 0.9) == pytest.approx(1.0)
    assert pinball_loss([0], [10], 0.1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pinball_loss([1], [1], 0.0)
    with pytest.raises(ValueError):
        pinball_loss([1], [1], 1.0)


@settings(max_examples=100)
@given(
    st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=30),
    st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=30),
    st.floats(min_value=0.05, max_value=0.95),
)
def test_pinball_matches_oracle(preds, golds, q):
    n = min(len(preds), len(golds))
    preds, golds = preds[:n], golds[:n]
    assert pinball_loss(preds, golds, q) == pytest.approx(
        oracle_pinball(preds, golds, q), abs=1e-12
    )


def test_score_counts_report_shape():
    report = score_counts([5, 0, 23], [5, 1, 23])
    assert report.n == 3
    assert report.exact_match == pytest.approx(2 / 3)
    assert report.scheme == "four-bin"
    assert len(report.confusion) == 4
    assert set(report.pinball) == {"0.1", "0.9"}
    round_trip = report.to_json()
    assert "exact_match" in round_trip


def test_score_strings_handles_unparseable_prediction():
    report = score_strings(["5", "dozens"], ["5", "3"])
    assert report.exact_match == pytest.approx(0.5)
    # "dozens" contributes a class-0 fallback against gold class 1
    assert report.confusion[1][0] > 0


def test_confusion_csv_written(tmp_path):
    report = score_counts([5, 0], [5, 0])
    out = tmp_path / "confusion.csv"
    report.write_confusion_csv(out)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 5
    assert lines[0].startswith("gold\\pred")
