"""Prediction-file writers.

One JSONL row per sample, sorted keys, newline-terminated.  These are
the exchange formats the evaluation toolkit reads back: generation rows
carry score-descending beam lists, regression rows a normal location
and scale over log(1 + count), classification rows a 3-score vector.
"""

import json


def _dump(fh, obj) -> None:
    fh.write(json.dumps(obj, sort_keys=True) + "\n")


def write_generation_predictions(path, results) -> None:
    with open(path, "w") as fh:
        for res in results:
            beams = sorted(res.beams, key=lambda c: -c.score)
            _dump(fh, {"id": res.id,
                       "beams": [{"text": c.text, "score": c.score}
                                 for c in beams]})


def write_regression_predictions(path, ids, locs, scale: float) -> None:
    with open(path, "w") as fh:
        for rid, loc in zip(ids, locs):
            _dump(fh, {"id": rid, "loc": loc, "scale": scale})


def write_classification_predictions(path, ids, score_rows) -> None:
    with open(path, "w") as fh:
        for rid, scores in zip(ids, score_rows):
            _dump(fh, {"id": rid, "scores": list(scores)})
