#!/usr/bin/env python3
"""Ten-run split experiment on the bundled synthetic treebank.

    python scripts/run_desk_experiment.py                      # print the table
    python scripts/run_desk_experiment.py --write-golden       # refresh tests/golden/

The golden configuration keeps the 88-sentence test sets and trains on
the remaining 112 trees.  Systems: DOP (Maximum Constituents), the
right-branching baseline, and a copy-of-gold oracle.
"""
import argparse
import sys
import time
from importlib import resources
from pathlib import Path

from dopcfg.evalx import (SplitConfig, dop_system, format_structured, format_table, gold_system,
                          prepare_corpus, right_branching_system, run_experiment)
from dopcfg.treebank import read_penn

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
GOLDEN_CONFIG = dict(train=112, test=88, max_length=30, runs=10, seed=0)


def golden_report():
    text = resources.files("dopcfg").joinpath("data/synthetic200.mrg").read_text(encoding="utf-8")
    corpus = prepare_corpus(read_penn(text))
    systems = {"DOP": dop_system(), "RB": right_branching_system(), "GOLD": gold_system()}
    return run_experiment(corpus, SplitConfig(**GOLDEN_CONFIG), systems)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--write-golden", action="store_true")
    args = ap.parse_args(argv)
    start = time.perf_counter()
    report = golden_report()
    table, structured = format_table(report), format_structured(report)
    if args.write_golden:
        GOLDEN.mkdir(parents=True, exist_ok=True)
        (GOLDEN / "synthetic200_table.tsv").write_text(table)
        (GOLDEN / "synthetic200_report.json").write_text(structured)
    sys.stdout.write(table)
    print(f"# elapsed: {time.perf_counter() - start:.2f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
