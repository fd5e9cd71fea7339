"""Command-line runner honoring the harness contract.

Invoked as `seq2count-runner [flags] TRAIN TEST OUT` (or via
`python3 -m seq2count.runner`), typically through a command template
whose {train}, {test}, and {out} placeholders the harness fills in.

TRAIN is a JSON manifest; an empty example list means zero-shot
inference from the seeded base weights.  TEST is JSONL with id and text
per line.  OUT receives mode-specific predictions: digit beam lists
(gen), loc/scale rows (reg), or 3-class score rows (clf).  Any failure
exits nonzero so the harness records it.
"""

import argparse
import json
import sys

import torch

from .decoding import generate_counts
from .emit import (
    write_classification_predictions,
    write_generation_predictions,
    write_regression_predictions,
)
from .errors import AdapterError
from .model import build_model
from .prompts import prompt_for
from .training import (
    examples_from_manifest,
    train_classification_head,
    train_generation,
    train_regression_head,
)


def _read_manifest(path):
    with open(path) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise AdapterError(f"{path}: manifest must be a JSON object")
    return examples_from_manifest(payload)


def _read_test(path):
    ids, texts = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "id" not in row or "text" not in row:
                raise AdapterError(f"{path}: line {lineno}: need id and text")
            ids.append(str(row["id"]))
            texts.append(row["text"])
    return ids, texts


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seq2count-runner",
        description="train on a manifest and predict counts for a test file")
    parser.add_argument("--mode", choices=("gen", "reg", "clf"),
                        default="gen")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--beam", type=int, default=5,
                        help="beam width for gen mode")
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--max-digits", type=int, default=9)
    parser.add_argument("train", help="training manifest JSON")
    parser.add_argument("test", help="test JSONL with id and text")
    parser.add_argument("out", help="prediction file to write")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except Exception as exc:      # noqa: BLE001 - contract: nonzero on failure
        print(f"seq2count-runner: {exc}", file=sys.stderr)
        return 1
    return 0


def run(args) -> None:
    torch.manual_seed(args.seed)
    victim_type, examples = _read_manifest(args.train)
    test_ids, test_texts = _read_test(args.test)
    model = build_model(seed=args.seed)
    prompts = [prompt_for(victim_type, text) for text in test_texts]

    if args.mode == "gen":
        if examples:
            train_generation(model, examples, victim_type,
                             epochs=args.epochs)
        results, failures = generate_counts(
            model, prompts, ids=test_ids, beam_width=args.beam,
            max_digits=args.max_digits)
        if failures:
            details = "; ".join(f"{f.id}: {f.error}" for f in failures[:3])
            raise AdapterError(
                f"decoding failed for {len(failures)} samples ({details})")
        write_generation_predictions(args.out, results)
    elif args.mode == "reg":
        scale = 1.0      # zero-shot default: unit predictive spread
        if examples:
            scale = train_regression_head(model, examples, victim_type,
                                          epochs=args.epochs).scale
        locs = model.predict_log_counts(prompts)
        write_regression_predictions(args.out, test_ids, locs, scale)
    else:
        if examples:
            train_classification_head(model, examples, victim_type,
                                      epochs=args.epochs)
        write_classification_predictions(args.out, test_ids,
                                         model.class_scores(prompts))


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
