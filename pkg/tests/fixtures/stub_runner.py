#!/usr/bin/env python3
"""Stand-in model runner for harness tests.

Predicts the first integer found in each test text and ignores the
train manifest entirely, so it is deterministic and training-free.
Failure modes are selectable for exercising the harness error paths.
"""

import argparse
import csv
import json
import math
import re
import sys


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("train")
    parser.add_argument("test")
    parser.add_argument("out")
    parser.add_argument("--mode", default="tsv",
                        choices=["tsv", "beams", "fail", "noout", "partial"])
    parser.add_argument("--log")
    args = parser.parse_args()

    if args.log:
        with open(args.log, "a") as fh:
            fh.write("run\n")
    if args.mode == "fail":
        print("synthetic failure", file=sys.stderr)
        sys.exit(3)
    if args.mode == "noout":
        sys.exit(0)

    rows = []
    with open(args.test) as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            match = re.search(r"\d+", record["text"])
            rows.append((record["id"], match.group() if match else "0"))
    if args.mode == "partial":
        rows = rows[:-1]

    if args.mode == "beams":
        with open(args.out, "w") as fh:
            for record_id, answer in rows:
                second = "0" if answer != "0" else "1"
                fh.write(json.dumps({
                    "id": record_id,
                    "beams": [{"text": answer, "score": 0.0},
                              {"text": second, "score": -math.log(3.0)}],
                }) + "\n")
        return

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["id", "count"])
        writer.writerows(rows)


if __name__ == "__main__":
    main()
