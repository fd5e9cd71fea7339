"""Regression tests over the bundled 50-event hand-labeled corpus.

The corpus ships with hand-authored dependency parses and SRL frames so
the three extractors can run without any model downloads.  Aggregate
numbers here were computed once from the live pipeline and frozen; a
change to any rule shows up as a diff against them.
"""

import time
from pathlib import Path

import pytest

from crisiscounts import (
    DatasetSchema,
    load_dataset,
    read_frames,
    read_lexicon,
    read_parses,
    run_extraction,
)

FIXTURES = Path(__file__).parent / "fixtures"

SCHEMA = DatasetSchema(
    id_column="id",
    text_column="text",
    count_columns={"death": "death", "injury": "injury"},
    source="fixture",
    date_column="date",
)


@pytest.fixture(scope="module")
def corpus():
    records = load_dataset(FIXTURES / "events.csv", SCHEMA)
    parses = read_parses(FIXTURES / "parses.conll")
    frames = read_frames(FIXTURES / "frames.jsonl")
    lexicons = {
        vt: read_lexicon(FIXTURES / "lexicons" / f"{vt}.txt", vt,
                         FIXTURES / "lexicons" / f"{vt}_predicates.txt")
        for vt in ("death", "injury")
    }
    return records, parses, frames, lexicons


def run_all(corpus, method, victim_type):
    records, parses, frames, lexicons = corpus
    return run_extraction(
        records, method, lexicon=lexicons[victim_type],
        parses=parses if method == "dependency" else None,
        frames=frames if method == "srl" else None)


def test_corpus_shape(corpus):
    records, parses, frames, _ = corpus
    assert len(records) == 50
    assert {r.id for r in records} == set(parses) == set(frames)
    for doc in parses.values():
        doc.validate()


def test_no_record_skipped(corpus):
    for method in ("regex", "dependency", "srl"):
        run = run_all(corpus, method, "death")
        assert run.skipped == ()
        assert len(run.extractions) == 50


def index(run):
    return {rid: ext for rid, ext in run.extractions.items()}


def test_plural_passive_counts_extracted(corpus):
    # "5 people were injured ..." -> 5 on every extractor
    for method in ("regex", "dependency", "srl"):
        assert index(run_all(corpus, method, "injury"))["ev001"].count == 5


def test_singular_subject_yields_one(corpus):
    # "A journalist was injured ..." has no numeral; the dependency
    # fallback finds the singular subject of the injury verb
    ext = index(run_all(corpus, "dependency", "injury"))["ev002"]
    assert ext.count == 1
    assert ext.rule == "singular_argument"


def test_age_modifier_rejected(corpus):
    # "A 42-year-old man was killed ..." must not read 42 as a count
    ext = index(run_all(corpus, "dependency", "death"))["ev003"]
    assert ext.count == 1
    assert ext.rule == "singular_argument"


def test_srl_no_predicate_and_no_number(corpus):
    srl = index(run_all(corpus, "srl", "death"))
    # no frame predicate in the death lexicon -> 0
    assert srl["ev005"].count == 0
    assert srl["ev005"].rule == "no_predicate"
    # matching frame but no numeral in its arguments -> 1
    assert srl["ev007"].count == 1
    assert srl["ev007"].rule == "frame_without_number"


def test_coordinated_numerals_undercount(corpus):
    # "One child and four women lost their lives" -> 1 everywhere: the
    # rules take the first numeral and never add conjuncts (gold is 5)
    for method in ("regex", "dependency", "srl"):
        assert index(run_all(corpus, method, "death"))["ev004"].count == 1


def test_temporal_modifier_rejected(corpus):
    # "The year 2020 saw 44 flood-related deaths" -> 2020 is rejected as
    # a temporal modifier and "deaths" is not a locating verb
    assert index(run_all(corpus, "dependency", "death"))["ev050"].count == 0


def test_comma_grouped_numeral(corpus):
    # "more than 2,600" parses through the comma
    assert index(run_all(corpus, "dependency", "injury"))["ev035"].count == 2600


def test_frozen_aggregate_scores(corpus):
    # computed once on the authored corpus and frozen
    expected = {
        ("death", "regex"): (0.66, 0.6733333333333333),
        ("death", "dependency"): (0.76, 0.7733333333333333),
        ("death", "srl"): (0.66, 0.66),
        ("injury", "regex"): (0.90, 0.9133333333333333),
        ("injury", "dependency"): (0.88, 0.8933333333333333),
        ("injury", "srl"): (0.88, 0.8933333333333333),
    }
    for (victim_type, method), (em, f1) in expected.items():
        report = run_all(corpus, method, victim_type).report
        assert report.exact_match == pytest.approx(em, abs=1e-12), \
            (victim_type, method)
        assert report.digit_f1 == pytest.approx(f1, abs=1e-12), \
            (victim_type, method)


def test_full_corpus_runtime(corpus):
    start = time.perf_counter()
    for victim_type in ("death", "injury"):
        for method in ("regex", "dependency", "srl"):
            run_all(corpus, method, victim_type)
    assert time.perf_counter() - start < 1.0
