#!/usr/bin/env python3
"""Generate the bundled synthetic treebank (POS-tag leaves, ATIS-like shapes).

    python scripts/make_synthetic_treebank.py --n 200 --seed 7 > src/dopcfg/data/synthetic200.mrg

Some trees carry -NONE- subjects and unary FRAG/S chains so that the
cleaning steps have something to do.
"""
import argparse
import random
import sys

from dopcfg.treebank import read_penn, yield_of

# label -> [(weight, children)]; lowercase-free strings that are not keys are POS terminals
GRAMMAR = {
    "ROOT": [(5, ["S"]), (2, ["SBARQ"]), (2, ["SIMP"]), (1, ["FRAG"])],
    "S": [(6, ["NP", "VP", "."]), (2, ["NP", "VP"]), (1, ["NP-SBJ-NONE", "VP", "."])],
    "SIMP": [(1, ["VP", "."])],
    "SBARQ": [(3, ["WHNP", "SQ", "."]), (1, ["WHADVP", "SQ", "."])],
    "SQ": [(3, ["MD", "NP", "VP"]), (2, ["VBZ", "NP", "NP"]), (1, ["VBP", "NP", "VP"])],
    "FRAG": [(3, ["NP"]), (1, ["PP"])],
    "WHNP": [(3, ["WDT", "NNS"]), (2, ["WP"]), (1, ["WDT", "NN"])],
    "WHADVP": [(1, ["WRB"])],
    "NP": [(5, ["DT", "NNS"]), (3, ["DT", "JJ", "NNS"]), (4, ["PRP"]), (4, ["NNP"]),
           (3, ["NP", "PP"]), (2, ["DT", "NN"]), (2, ["CD", "NNS"]), (1, ["NNP", "NNP"]),
           (1, ["DT", "JJ", "NN", "NNS"]), (1, ["NP", "SBAR"])],
    "NP-SBJ-NONE": [(1, ["-NONE-"])],
    "VP": [(4, ["VB", "NP"]), (3, ["VB", "NP", "PP"]), (2, ["VB", "PRP", "NP"]),
           (2, ["VBZ", "NP"]), (2, ["MD", "VP"]), (2, ["TO", "VB", "NP"]),
           (1, ["VB", "NP", "PP", "PP"]), (2, ["VBP", "TO", "VP"])],
    "PP": [(5, ["IN", "NP"]), (2, ["TO", "NNP"]), (1, ["IN", "NNP"])],
    "SBAR": [(1, ["WHNP", "S"]), (1, ["IN", "S"])],
}

MAX_DEPTH = 7


def expand(label, rng, depth):
    name = "NP" if label == "NP-SBJ-NONE" else label
    if label not in GRAMMAR:
        return label
    options = GRAMMAR[label]
    if depth >= MAX_DEPTH:
        # prefer options without recursive phrase children
        flat = [o for o in options if all(c not in GRAMMAR or c == "NP-SBJ-NONE" for c in o[1])]
        options = flat or options
    total = sum(w for w, _ in options)
    x = rng.uniform(0, total)
    for w, children in options:
        x -= w
        if x <= 0:
            break
    kids = [expand(c, rng, depth + 1) for c in children]
    return "(" + name + " " + " ".join(kids) + ")"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-len", type=int, default=22)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    made = 0
    while made < args.n:
        root = expand("ROOT", rng, 0)
        tree = root[len("(ROOT "):-1]
        (parsed,) = read_penn(tree)
        if len(yield_of(parsed)) > args.max_len:
            continue
        # about one tree in ten keeps the Penn-style empty outer bracket
        if rng.random() < 0.1:
            tree = "( " + tree + " )"
        sys.stdout.write(tree + "\n")
        made += 1


if __name__ == "__main__":
    main()
