"""Command-line entry point.

Subcommands: extract, evaluate, calibrate, fewshot, ood, timeline,
normalize.  Results go to stdout as JSON so they pipe cleanly; --pretty
adds a human-readable table on stderr; --out-dir writes a full run
directory (report.json, tables/*.csv, figures/*.svg, input hashes).

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annotations import read_frames, read_parses
from .calibration import (
    CLASSIFICATION,
    GENERATION,
    REGRESSION,
    load_predictions,
    reliability_diagram,
    save_calibrator,
)
from .corpus import (
    FEWSHOT_FRACTIONS,
    DatasetSchema,
    SplitPlan,
    load_dataset,
)
from .errors import ConfigError, ToolkitError
from .extractors import read_lexicon
from .harness import (
    CommandRunner,
    RuleRunner,
    Task,
    emit_timeline,
    read_prediction_strings,
    run_calibration_experiment,
    run_extraction,
    run_fewshot,
    run_ood,
    write_extraction_tsv,
    write_report,
)
from .metrics import SCHEMES, score_strings
from .numerals import normalize_numerals, parse_count_token

DEFAULT_SCHEMA = DatasetSchema(
    id_column="id", text_column="text",
    count_columns={"death": "death", "injury": "injury"},
    date_column="date",
)

_METHODS = {"regex": "regex", "dep": "dependency", "srl": "srl"}
_KINDS = {"clf": CLASSIFICATION, "gen": GENERATION, "reg": REGRESSION}


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors, not I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(args, payload: dict, pretty_lines=None) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.pretty and pretty_lines:
        print("\n".join(pretty_lines), file=sys.stderr)


def _schema(args) -> DatasetSchema:
    if getattr(args, "schema", None):
        return DatasetSchema.from_file(args.schema)
    return DEFAULT_SCHEMA


def _lexicon(args, victim_type):
    if getattr(args, "lexicon", None):
        return read_lexicon(args.lexicon, victim_type,
                            predicates_path=getattr(args, "predicates", None))
    return None


def _annotations(args, method):
    parses = frames = None
    if method == "dependency":
        if not getattr(args, "parses", None):
            raise ConfigError("--method dep requires --parses")
        parses = read_parses(args.parses)
    if method == "srl":
        if not getattr(args, "frames", None):
            raise ConfigError("--method srl requires --frames")
        frames = read_frames(args.frames)
    return parses, frames


def _rule_runner(args, victim_type) -> RuleRunner:
    method = _METHODS[args.method]
    parses, frames = _annotations(args, method)
    return RuleRunner(method, victim_type, lexicon=_lexicon(args, victim_type),
                      parses=parses, frames=frames)


def _runner(args, victim_type):
    if getattr(args, "runner", None):
        return CommandRunner(args.runner)
    if getattr(args, "method", None):
        return _rule_runner(args, victim_type)
    raise ConfigError("need either --runner TEMPLATE or --method")


def _read_labels(path, kind: str) -> dict:
    """Gold labels keyed by id: class index (clf), answer string (gen),
    or count (reg).  Delimited file with id and label/count/gold columns."""
    import csv
    import io

    text = Path(path).read_text()
    if not text.strip():
        raise ConfigError(f"empty labels file {path}")
    header = text.lstrip().splitlines()[0]
    delimiter = "\t" if "\t" in header else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    fields = reader.fieldnames or []
    value_col = next((c for c in ("label", "gold", "count") if c in fields), None)
    if "id" not in fields or value_col is None:
        raise ConfigError(f"labels file {path} needs 'id' and one of "
                          f"'label'/'gold'/'count' columns, got {fields}")
    labels = {}
    for row in reader:
        raw = (row[value_col] or "").strip()
        labels[(row["id"] or "").strip()] = \
            raw if kind == GENERATION else int(raw)
    return labels


def _ordered_labels(pred_set, labels: dict, side: str):
    missing = [rid for rid in pred_set.ids if rid not in labels]
    if missing:
        raise ConfigError(f"{side} labels missing {len(missing)} ids "
                          f"(first: {missing[:5]})")
    return [labels[rid] for rid in pred_set.ids]


def _figures_dir(out_dir: Path) -> Path:
    path = Path(out_dir) / "figures"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _tables_dir(out_dir: Path) -> Path:
    path = Path(out_dir) / "tables"
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Subcommand handlers


def cmd_extract(args) -> None:
    method = _METHODS[args.method]
    schema = _schema(args)
    records = load_dataset(args.data, schema, drop_zero=args.drop_zero,
                           victim_types=[args.type])
    parses, frames = _annotations(args, method)
    run = run_extraction(records, method, victim_type=args.type,
                         lexicon=_lexicon(args, args.type), parses=parses,
                         frames=frames, scheme=SCHEMES[args.scheme],
                         normalize=not args.no_normalize)
    write_extraction_tsv(args.out, run)

    payload = {"method": method, "victim_type": args.type,
               "predictions": str(args.out), **run.to_dict()}
    if args.out_dir:
        inputs = [p for p in (args.data, args.parses, args.frames,
                              args.lexicon) if p]
        write_report(args.out_dir, payload, input_paths=inputs)
        if run.report:
            scheme = SCHEMES[args.scheme]
            run.report.write_confusion_csv(_tables_dir(args.out_dir) / "confusion.csv")
            from .figures import confusion_figure
            confusion_figure(run.report.confusion, scheme.labels(),
                             _figures_dir(args.out_dir) / "confusion.svg",
                             title=f"{method} / {args.type}")
    lines = [f"{method} on {len(run.extractions)} records "
             f"({len(run.skipped)} skipped)"]
    if run.report:
        lines.append(f"exact match {run.report.exact_match:.3f}  "
                     f"digit F1 {run.report.digit_f1:.3f}")
    _emit(args, payload, lines)


def cmd_evaluate(args) -> None:
    preds, _ = read_prediction_strings(args.preds)
    if args.gold_type:
        schema = _schema(args)
        records = load_dataset(args.gold, schema, victim_types=[args.gold_type])
        golds = {r.id: str(r.gold_counts[args.gold_type]) for r in records}
    else:
        golds, _ = read_prediction_strings(args.gold)
    missing = [rid for rid in golds if rid not in preds]
    if missing:
        raise ConfigError(f"predictions missing {len(missing)} gold ids "
                          f"(first: {missing[:10]})")
    ids = list(golds)
    report = score_strings([preds[rid] for rid in ids],
                           [golds[rid] for rid in ids], SCHEMES[args.scheme])

    payload = report.to_dict()
    if args.out_dir:
        write_report(args.out_dir, payload,
                     input_paths=[args.preds, args.gold])
        report.write_confusion_csv(_tables_dir(args.out_dir) / "confusion.csv")
        from .figures import confusion_figure
        confusion_figure(report.confusion, SCHEMES[args.scheme].labels(),
                         _figures_dir(args.out_dir) / "confusion.svg")
    _emit(args, payload, [
        f"n {report.n}  exact match {report.exact_match:.3f}  "
        f"digit F1 {report.digit_f1:.3f}  macro F1 {report.macro_f1:.3f}"])


def cmd_calibrate(args) -> None:
    kind = _KINDS[args.kind]
    dev = load_predictions(args.dev)
    test = load_predictions(args.test)
    for name, pred_set in (("dev", dev), ("test", test)):
        if pred_set.kind != kind:
            raise ConfigError(f"--kind {args.kind} but {name} file holds "
                              f"{pred_set.kind} predictions")
    dev_labels = _ordered_labels(dev, _read_labels(args.dev_labels, kind), "dev")
    test_labels = _ordered_labels(test, _read_labels(args.test_labels, kind),
                                  "test")
    outcome = run_calibration_experiment(
        dev, test, dev_labels, test_labels, n_bins=args.bins, top_b=args.beam,
        correctness=args.correctness, scheme=SCHEMES[args.scheme])
    if args.save:
        save_calibrator(outcome.calibrator, args.save)

    payload = outcome.to_dict()
    if args.out_dir:
        write_report(args.out_dir, payload,
                     input_paths=[args.dev, args.test, args.dev_labels,
                                  args.test_labels])
        if kind in (CLASSIFICATION, GENERATION):
            _write_reliability(args, kind, test, test_labels,
                               outcome.calibrator.temperature)
    _emit(args, payload, [
        f"{kind}: {outcome.error_before:.4f} before -> "
        f"{outcome.error_after:.4f} after"])


def _write_reliability(args, kind, test, test_labels, temperature) -> None:
    """Reliability CSV + SVG for the test set, before and after scaling."""
    import numpy as np

    from .calibration import classification_confidence, generation_confidence
    from .figures import reliability_figure
    from .harness import _generation_correct

    for label, temp in (("before", 1.0), ("after", temperature)):
        if kind == CLASSIFICATION:
            picks, confidences = classification_confidence(test, temp)
            correct = picks == np.asarray(test_labels, dtype=int)
        else:
            texts, confidences = generation_confidence(test, temp,
                                                       top_b=args.beam)
            correct = _generation_correct(texts, test_labels,
                                          args.correctness,
                                          SCHEMES[args.scheme])
        bins = reliability_diagram(confidences, correct, args.bins)
        rows = [["bin_lower", "bin_upper", "mean_confidence", "accuracy",
                 "weight"]]
        rows += [[f"{b.lower:.4f}", f"{b.upper:.4f}",
                  f"{b.mean_confidence:.6f}", f"{b.accuracy:.6f}",
                  f"{b.weight:.6f}"] for b in bins]
        import csv as _csv
        with open(_tables_dir(args.out_dir) / f"reliability_{label}.csv",
                  "w", newline="") as fh:
            _csv.writer(fh).writerows(rows)
        reliability_figure(bins,
                           _figures_dir(args.out_dir) / f"reliability_{label}.svg",
                           title=f"{kind} ({label})")


def cmd_fewshot(args) -> None:
    schema = _schema(args)
    records = load_dataset(args.data, schema, victim_types=[args.type])
    name = args.name or f"{Path(args.data).stem}:{args.type}"
    task = Task(name, records, args.type, seed=args.seed)
    fractions = tuple(float(f) for f in args.fractions.split(",")) \
        if args.fractions else FEWSHOT_FRACTIONS
    rows = run_fewshot(task, _runner(args, args.type), fractions=fractions,
                       scheme=SCHEMES[args.scheme],
                       plan=SplitPlan(seed=args.seed),
                       work_dir=args.work_dir, cache_dir=args.cache_dir)

    payload = {"task": name, "victim_type": args.type, "seed": args.seed,
               "scheme": args.scheme, "rows": [r.to_dict() for r in rows]}
    if args.out_dir:
        table = [["fraction", "n_train", "exact_match", "digit_f1",
                  "calibration_error", "failure"]]
        for r in rows:
            table.append([
                r.fraction, r.n_train,
                "" if r.report is None else f"{r.report.exact_match:.6f}",
                "" if r.report is None else f"{r.report.digit_f1:.6f}",
                "" if r.calibration_error is None
                else f"{r.calibration_error:.6f}",
                r.failure or ""])
        write_report(args.out_dir, payload, tables={"fewshot": table},
                     input_paths=[args.data])
        from .figures import fewshot_figure
        values = [r.report.exact_match if r.report else float("nan")
                  for r in rows]
        fewshot_figure([r.fraction for r in rows], values,
                       _figures_dir(args.out_dir) / "fewshot.svg")
    lines = [f"{r.fraction:>6g}  n={r.n_train:<5d} "
             + (f"em={r.report.exact_match:.3f}" if r.report
                else f"FAILED: {r.failure}") for r in rows]
    _emit(args, payload, lines)


def cmd_ood(args) -> None:
    schema = _schema(args)
    tasks = []
    for spec_str in args.task:
        try:
            name, rest = spec_str.split("=", 1)
            path, victim_type = rest.rsplit(":", 1)
        except ValueError:
            raise ConfigError(
                f"--task must look like name=path:victim_type, got {spec_str!r}")
        records = load_dataset(path, schema, victim_types=[victim_type])
        tasks.append(Task(name, records, victim_type, seed=args.seed))
    victim_type = tasks[0].victim_type if tasks else None
    cells = run_ood(tasks, _runner(args, victim_type),
                    scheme=SCHEMES[args.scheme], work_dir=args.work_dir,
                    cache_dir=args.cache_dir)

    payload = {"seed": args.seed, "scheme": args.scheme,
               "cells": [c.to_dict() for c in cells]}
    if args.out_dir:
        table = [["train_task", "test_task", "n", "exact_match",
                  "delta_exact_match", "failure"]]
        for c in cells:
            table.append([
                c.train_task, c.test_task, c.n,
                "" if c.exact_match is None else f"{c.exact_match:.6f}",
                "" if c.delta_exact_match is None
                else f"{c.delta_exact_match:.6f}",
                c.failure or ""])
        write_report(args.out_dir, payload, tables={"ood": table})
    lines = [f"{c.train_task} -> {c.test_task}: "
             + (f"em={c.exact_match:.3f} delta={c.delta_exact_match:+.3f}"
                if c.exact_match is not None else f"FAILED: {c.failure}")
             for c in cells]
    _emit(args, payload, lines)


def cmd_timeline(args) -> None:
    schema = _schema(args)
    records = load_dataset(args.data, schema, victim_types=[args.type])
    confidences = None
    if args.preds:
        strings, pred_set = read_prediction_strings(args.preds)
        counts = {}
        for rid, value in strings.items():
            parsed = parse_count_token(value.strip())
            counts[rid] = parsed if parsed is not None else 0
        if pred_set is not None:
            from .calibration import generation_confidence
            _, confs = generation_confidence(pred_set)
            confidences = dict(zip(pred_set.ids, (float(c) for c in confs)))
    else:
        method = _METHODS[args.method]
        parses, frames = _annotations(args, method)
        run = run_extraction(records, method, victim_type=args.type,
                             lexicon=_lexicon(args, args.type),
                             parses=parses, frames=frames)
        counts = {rid: ext.count for rid, ext in run.extractions.items()}

    series = emit_timeline(records, counts, args.type, args.out_dir,
                           confidences=confidences)
    payload = {"victim_type": args.type, "days": len(series.daily),
               "events": len(series.events), "skipped": list(series.skipped),
               "total": sum(t for _, t in series.daily)}
    write_report(args.out_dir, payload, input_paths=[args.data])
    _emit(args, payload, [f"{payload['events']} events over "
                          f"{payload['days']} days, total {payload['total']}"])


def cmd_normalize(args) -> None:
    text = Path(args.infile).read_text()
    normalized = normalize_numerals(text)
    _emit(args, {"normalized": normalized}, [normalized])


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for anything randomized")
    common.add_argument("--pretty", action="store_true",
                        help="also print a human-readable table to stderr")
    common.add_argument("--config", default=None,
                        help="JSON file of flag defaults (flags win)")

    parser = _Parser(prog="crisiscounts",
                     description="Victim-count extraction toolkit")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    def sub(name, handler, **kwargs):
        p = subparsers.add_parser(
            name, parents=[common],
            formatter_class=argparse.ArgumentDefaultsHelpFormatter, **kwargs)
        p.set_defaults(func=handler)
        subs[name] = p
        return p

    p = sub("extract", cmd_extract, help="run a rule extractor over a dataset")
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--type", required=True, help="victim type to extract")
    p.add_argument("--data", required=True, help="dataset CSV/TSV/JSONL")
    p.add_argument("--schema", default=None, help="dataset schema JSON")
    p.add_argument("--parses", default=None, help="dependency parses file")
    p.add_argument("--frames", default=None, help="SRL frames file")
    p.add_argument("--lexicon", default=None, help="lexicon terms file")
    p.add_argument("--predicates", default=None, help="predicate lemmas file")
    p.add_argument("--out", required=True, help="prediction TSV to write")
    p.add_argument("--out-dir", default=None, help="run directory for reports")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="four-bin")
    p.add_argument("--drop-zero", action="store_true",
                   help="drop records whose requested counts are all zero")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip numeral normalization")

    p = sub("evaluate", cmd_evaluate, help="score a prediction file")
    p.add_argument("--preds", required=True, help="prediction file")
    p.add_argument("--gold", required=True, help="gold file")
    p.add_argument("--gold-type", default=None,
                   help="read gold as a dataset and use this victim type")
    p.add_argument("--schema", default=None, help="schema for --gold-type")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="four-bin")
    p.add_argument("--out-dir", default=None, help="run directory for reports")

    p = sub("calibrate", cmd_calibrate, help="fit and evaluate a calibrator")
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--dev", required=True, help="dev prediction JSONL")
    p.add_argument("--test", required=True, help="test prediction JSONL")
    p.add_argument("--dev-labels", required=True, help="dev gold labels")
    p.add_argument("--test-labels", required=True, help="test gold labels")
    p.add_argument("--bins", type=int, default=10, help="confidence bins")
    p.add_argument("--beam", type=int, default=5, help="beams per answer")
    p.add_argument("--correctness", choices=("exact", "binned"),
                   default="exact", help="generation correctness criterion")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="four-bin")
    p.add_argument("--save", default=None, help="write the calibrator JSON")
    p.add_argument("--out-dir", default=None, help="run directory for reports")

    p = sub("fewshot", cmd_fewshot, help="few-shot curve over train fractions")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--type", required=True)
    p.add_argument("--name", default=None, help="task name for reports")
    p.add_argument("--runner", default=None,
                   help="command template with {train} {test} {out}")
    p.add_argument("--method", choices=sorted(_METHODS), default=None,
                   help="built-in rule runner instead of --runner")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--predicates", default=None)
    p.add_argument("--parses", default=None)
    p.add_argument("--frames", default=None)
    p.add_argument("--fractions", default=None,
                   help="comma list, default 1.0,0.5,0.1,0.05,0.005,0.0")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="four-bin")
    p.add_argument("--work-dir", default=None)
    p.add_argument("--cache-dir", default=None,
                   help="results cache (or set CRISISCOUNTS_CACHE)")
    p.add_argument("--out-dir", default=None)

    p = sub("ood", cmd_ood, help="out-of-distribution transfer matrix")
    p.add_argument("--task", action="append", required=True,
                   help="name=path:victim_type (repeatable)")
    p.add_argument("--schema", default=None)
    p.add_argument("--runner", default=None,
                   help="command template with {train} {test} {out}")
    p.add_argument("--method", choices=sorted(_METHODS), default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--predicates", default=None)
    p.add_argument("--parses", default=None)
    p.add_argument("--frames", default=None)
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="four-bin")
    p.add_argument("--work-dir", default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--out-dir", default=None)

    p = sub("timeline", cmd_timeline, help="daily victim-count time series")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--type", required=True)
    p.add_argument("--method", choices=sorted(_METHODS), default="regex")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--predicates", default=None)
    p.add_argument("--parses", default=None)
    p.add_argument("--frames", default=None)
    p.add_argument("--preds", default=None,
                   help="use a prediction file instead of extracting")
    p.add_argument("--out-dir", required=True)

    p = sub("normalize", cmd_normalize, help="normalize spelled-out numerals")
    p.add_argument("--in", dest="infile", required=True, help="text file")

    return parser, subs


def _load_config(argv):
    if "--config" not in argv:
        return {}
    index = argv.index("--config")
    if index + 1 >= len(argv):
        return {}
    path = argv[index + 1]
    try:
        config = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path}: {err}")
    if not isinstance(config, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        parser, subs = build_parser()
        config = _load_config(argv)
        if config:
            for sub_parser in subs.values():
                known = {action.dest for action in sub_parser._actions}
                sub_parser.set_defaults(
                    **{k: v for k, v in config.items() if k in known})
        try:
            args = parser.parse_args(argv)
        except SystemExit as exit_:
            return int(exit_.code or 0)
        if not getattr(args, "command", None):
            parser.print_help(file=sys.stderr)
            return 1
        args.func(args)
        return 0
    except (ToolkitError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
