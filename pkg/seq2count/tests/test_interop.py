"""End-to-end checks against the evaluation toolkit.

Everything here consumes the toolkit through its public interfaces:
prediction files on disk, the command-line front end, and the harness
runner contract.
"""

import csv
import json
import subprocess
import sys

import pytest

from crisiscounts import (
    CommandRunner,
    EventRecord,
    Task,
    gen_confidence,
    load_predictions,
    quantile_of_truth,
    run_fewshot,
)

from seq2count import (
    TrainExample,
    build_model,
    generate_counts,
    prompt_for,
    three_class_bin,
    train_generation,
    write_classification_predictions,
    write_generation_predictions,
    write_regression_predictions,
)

TEMPLATES = [
    ("{n} people were killed when the bridge failed.", True),
    ("Officials confirmed {n} deaths after the flood.", True),
    ("The clinic treated survivors; {n} did not make it.", True),
    ("Calm returned and markets reopened.", False),
    ("A curfew was announced for the northern district.", False),
]


def synth_rows(n_rows, seed=29, prefix="s"):
    import random
    rng = random.Random(seed)
    rows = []
    for i in range(n_rows):
        template, counted = TEMPLATES[i % len(TEMPLATES)]
        count = rng.randint(1, 9) if counted else 0
        rows.append({"id": f"{prefix}{i:03d}",
                     "text": template.format(n=count),
                     "gold": count})
    return rows


@pytest.fixture(scope="module")
def corpus():
    return synth_rows(40)


@pytest.fixture(scope="module")
def model():
    return build_model(seed=19)


@pytest.fixture(scope="module")
def gen_model(corpus):
    # fine-tuned on rows disjoint from the corpus fixture, so the
    # calibration split sees fresh text
    trained = build_model(seed=19)
    train = [TrainExample(r["id"], r["text"], r["gold"])
             for r in synth_rows(20, seed=37, prefix="t")]
    train_generation(trained, train, "death", epochs=3)
    return trained


def write_labels(path, rows, value_of):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for row in rows:
            writer.writerow([row["id"], value_of(row)])


def calibrate_cli(kind, dev, test, dev_labels, test_labels, save):
    proc = subprocess.run(
        [sys.executable, "-m", "crisiscounts", "calibrate",
         "--kind", kind, "--dev", str(dev), "--test", str(test),
         "--dev-labels", str(dev_labels), "--test-labels", str(test_labels),
         "--save", str(save)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


def test_generation_file_round_trip(tmp_path, corpus, gen_model):
    dev, test = corpus[:20], corpus[20:]
    paths = {}
    for name, rows in (("dev", dev), ("test", test)):
        prompts = [prompt_for("death", r["text"]) for r in rows]
        results, failures = generate_counts(
            gen_model, prompts, ids=[r["id"] for r in rows], beam_width=5)
        assert not failures
        paths[name] = tmp_path / f"gen_{name}.jsonl"
        write_generation_predictions(paths[name], results)

    pred_set = load_predictions(paths["test"])
    assert pred_set.kind == "generation"
    assert len(pred_set) == 20
    for beams in pred_set.beams:
        conf = gen_confidence([score for _, score in beams])
        assert 0.0 < conf <= 1.0

    dev_labels = tmp_path / "dev_labels.csv"
    test_labels = tmp_path / "test_labels.csv"
    write_labels(dev_labels, dev, lambda r: str(r["gold"]))
    write_labels(test_labels, test, lambda r: str(r["gold"]))
    payload = calibrate_cli("gen", paths["dev"], paths["test"],
                            dev_labels, test_labels, tmp_path / "cal.json")
    assert payload["kind"] == "generation"
    assert (tmp_path / "cal.json").exists()


def test_generation_file_feeds_evaluate(tmp_path, corpus, gen_model):
    rows = corpus[:15]
    prompts = [prompt_for("death", r["text"]) for r in rows]
    results, _ = generate_counts(gen_model, prompts,
                                 ids=[r["id"] for r in rows], beam_width=3)
    preds = tmp_path / "preds.jsonl"
    write_generation_predictions(preds, results)

    gold = tmp_path / "gold.csv"
    with open(gold, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "text", "death", "injury", "date"])
        for i, row in enumerate(rows):
            writer.writerow([row["id"], row["text"], row["gold"], 0,
                             f"2021-03-{i + 1:02d}"])

    proc = subprocess.run(
        [sys.executable, "-m", "crisiscounts", "evaluate",
         "--preds", str(preds), "--gold", str(gold), "--gold-type", "death"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["n"] == 15


def test_regression_file_round_trip(tmp_path, corpus, model):
    dev, test = corpus[:20], corpus[20:]
    paths = {}
    for name, rows in (("dev", dev), ("test", test)):
        locs = model.predict_log_counts(
            [prompt_for("death", r["text"]) for r in rows])
        paths[name] = tmp_path / f"reg_{name}.jsonl"
        write_regression_predictions(paths[name], [r["id"] for r in rows],
                                     locs, scale=1.0)

    pred_set = load_predictions(paths["test"])
    assert pred_set.kind == "regression"
    quantiles = quantile_of_truth(pred_set, [r["gold"] for r in test])
    assert all(0.0 <= q <= 1.0 for q in quantiles)

    dev_labels = tmp_path / "dev_labels.csv"
    test_labels = tmp_path / "test_labels.csv"
    write_labels(dev_labels, dev, lambda r: r["gold"])
    write_labels(test_labels, test, lambda r: r["gold"])
    payload = calibrate_cli("reg", paths["dev"], paths["test"],
                            dev_labels, test_labels, tmp_path / "cal.json")
    assert payload["kind"] == "regression"


def test_classification_file_round_trip(tmp_path, corpus, model):
    dev, test = corpus[:20], corpus[20:]
    paths = {}
    for name, rows in (("dev", dev), ("test", test)):
        scores = model.class_scores(
            [prompt_for("death", r["text"]) for r in rows])
        paths[name] = tmp_path / f"clf_{name}.jsonl"
        write_classification_predictions(paths[name],
                                         [r["id"] for r in rows], scores)

    pred_set = load_predictions(paths["test"])
    assert pred_set.kind == "classification"
    assert pred_set.scores.shape == (20, 3)

    dev_labels = tmp_path / "dev_labels.csv"
    test_labels = tmp_path / "test_labels.csv"
    write_labels(dev_labels, dev, lambda r: three_class_bin(r["gold"]))
    write_labels(test_labels, test, lambda r: three_class_bin(r["gold"]))
    payload = calibrate_cli("clf", paths["dev"], paths["test"],
                            dev_labels, test_labels, tmp_path / "cal.json")
    assert payload["kind"] == "classification"
    saved = json.loads((tmp_path / "cal.json").read_text())
    assert saved["kind"] == "temperature"


def test_harness_drives_runner_template(tmp_path, corpus):
    records = tuple(EventRecord(id=r["id"], text=r["text"],
                                gold_counts={"death": r["gold"]})
                    for r in corpus[:30])
    task = Task(name="synthetic", records=records, victim_type="death",
                seed=1)
    template = (f"{sys.executable} -m seq2count.runner --mode gen "
                "--seed 4 --epochs 1 {train} {test} {out}")
    rows = run_fewshot(task, CommandRunner(template), fractions=(1.0, 0.0),
                       work_dir=tmp_path / "work")
    assert [row.fraction for row in rows] == [1.0, 0.0]
    for row in rows:
        assert row.failure is None, row.failure
        assert row.report is not None and row.report.n == 3
    assert rows[0].n_train > 0 and rows[1].n_train == 0
