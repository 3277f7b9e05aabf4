"""Command line: reduce, parse, sample, experiment, coverage.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data error.
"""
import argparse
import os
import sys
from importlib import resources

from . import __version__
from .chart import inside, monte_carlo_parse, sample_derivations, viterbi_derivation
from .errors import DopError, EmptyCorpus, NoParse
from .evalx import (ScoringPolicy, SplitConfig, coverage_analysis, dop_system, external_system,
                    format_structured, format_table, gold_system, prepare_corpus, random_split,
                    right_branching_system, run_experiment)
from .maxcons import fallback_parse, parse_sentence
from .reduction import Pcfg, build_pcfg, erase_interior, grammar_stats
from .treebank import BinarizationScheme, read_penn, write_penn, write_treebank

EXIT_IO, EXIT_DATA = 3, 4
BUNDLED = "synthetic"


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _punct(text):
    return frozenset(p for p in text.split(",") if p)


def _read_treebank(path, strip_words=False, trim_tags=False, scheme="correct", retain_unary=False,
                   prepare=True):
    if path == BUNDLED:
        text = resources.files("dopcfg").joinpath("data/synthetic200.mrg").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        trees = read_penn(text)
    except DopError as exc:
        raise DopError(f"{path}: line {text.count(chr(10), 0, exc.position or 0) + 1}: {exc}") from None
    if not trees:
        raise EmptyCorpus(f"{path}: no trees")
    if not prepare:
        return trees
    return prepare_corpus(trees, scheme, retain_unary, strip_words=strip_words, trim_tags=trim_tags)


def _echo(args, stream):
    for k, v in sorted(vars(args).items()):
        if k in ("func", "parser"):
            continue
        if isinstance(v, frozenset):
            v = ",".join(sorted(v))
        elif isinstance(v, BinarizationScheme):
            v = v.value
        stream.write(f"# {k}: {v}\n")


def cmd_reduce(args):
    trees = _read_treebank(args.treebank, args.strip_words, args.trim_tags, args.scheme)
    grammar = build_pcfg(trees, keep_root_interior=args.keep_root_interior)
    text = grammar.to_text()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    out = sys.stderr if args.out == "-" else sys.stdout
    _echo(args, out)
    for k, v in grammar_stats(grammar).items():
        out.write(f"{k}\t{v}\n")
    return 0


def _load_grammar(path):
    with open(path, encoding="utf-8") as fh:
        return Pcfg.from_text(fh)


def _sentences(path):
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    return [line.split() for line in lines]


def cmd_parse(args):
    if args.method == "montecarlo" and (args.samples is None or args.seed is None):
        args.parser.error("--method montecarlo requires --samples and --seed")
    grammar = _load_grammar(args.grammar)
    _echo(args, sys.stderr)
    for lineno, words in enumerate(_sentences(args.sentences), 1):
        if not words:
            print("# error: empty line")
            continue
        try:
            tree, fallback = _parse_one(grammar, words, args)
        except DopError as exc:
            print(f"# error: line {lineno}: {exc}")
            continue
        print(write_penn(tree) + ("\t# fallback" if fallback else ""))
    return 0


def _parse_one(grammar, words, args):
    if args.method == "maxcons":
        outcome = parse_sentence(grammar, words, args.fallback_punct)
        return outcome.tree, outcome.method == "fallback"
    try:
        if not all(w in grammar.terminals for w in words):
            raise NoParse("unknown terminal")
        if args.method == "viterbi":
            tree, _ = viterbi_derivation(grammar, words)
            return erase_interior(tree), False
        chart = inside(grammar, words)
        samples = sample_derivations(grammar, words, chart, args.samples, args.seed)
        return monte_carlo_parse(samples), False
    except NoParse:
        return fallback_parse(words, args.fallback_punct), True


def cmd_sample(args):
    grammar = _load_grammar(args.grammar)
    words = args.sentence.split()
    chart = inside(grammar, words)
    samples = sample_derivations(grammar, words, chart, args.samples, args.seed)
    _echo(args, sys.stdout)
    for tree, count in sorted(samples.items(), key=lambda kv: (-kv[1], write_penn(kv[0]))):
        print(f"{count}\t{write_penn(tree)}")
    return 0


def _split_config(args):
    if args.preset == "bod":
        config = SplitConfig.bod(runs=args.runs, seed=args.seed)
    else:
        config = SplitConfig(runs=args.runs, seed=args.seed)
    if args.train is not None:
        config.train = None if args.train == 0 else args.train
    if args.test is not None:
        config.test = args.test
    if args.max_len is not None:
        config.max_length = None if args.max_len == 0 else args.max_len
    return config


def cmd_experiment(args):
    corpus = _read_treebank(args.treebank, args.strip_words, args.trim_tags, args.scheme, args.retain_unary)
    config = _split_config(args)
    if args.dump_splits:
        _dump_splits(corpus, config, args.dump_splits)
    systems = {}
    for name in args.systems.split(","):
        name = name.strip().lower()
        if name == "dop":
            systems["DOP"] = dop_system(args.fallback_punct)
        elif name in ("rb", "rightbranch"):
            systems["RB"] = right_branching_system(args.fallback_punct)
        elif name == "gold":
            systems["GOLD"] = gold_system()
        elif name:
            args.parser.error(f"unknown system {name!r}")
    for spec in args.external or ():
        name, _, pattern = spec.partition("=")
        if not pattern or "{run}" not in pattern:
            args.parser.error("--external takes NAME=PATH with a {run} placeholder")
        per_run = []
        for r in range(config.runs):
            with open(pattern.format(run=r), encoding="utf-8") as fh:
                per_run.append(read_penn(fh, allow_reserved=True))
        systems[name] = external_system(per_run)
    if not systems:
        args.parser.error("no systems selected")
    policy = ScoringPolicy(loose_match=args.loose_match)
    report = run_experiment(corpus, config, systems, args.scheme, policy, args.fallback_punct)
    text = format_structured(report) if args.report == "structured" else format_table(report)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def _dump_splits(corpus, config, directory):
    os.makedirs(directory, exist_ok=True)
    for r in range(config.runs):
        train, test = random_split(corpus, config, r)
        for name, trees in (("train", train), ("test", test)):
            with open(os.path.join(directory, f"{name}_{r}.mrg"), "w", encoding="utf-8") as fh:
                fh.write(write_treebank(trees))


def cmd_coverage(args):
    trees = _read_treebank(args.treebank, args.strip_words, args.trim_tags, prepare=False)
    result = coverage_analysis(trees, args.scheme, args.retain_unary, args.test_size, exact=args.exact)
    _echo(args, sys.stdout)
    print(f"sentences\t{result.sentences}")
    print(f"unique_production_sentences\t{result.unique_sentences}")
    print(f"p\t{result.p:.6f}")
    print(f"prob_one\t{result.prob_one:.7f}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="dopcfg", description="Data-Oriented Parsing through a reduced PCFG.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def corpus_flags(p):
        p.add_argument("treebank", help=f"bracketed treebank file, or '{BUNDLED}' for the bundled corpus")
        p.add_argument("--scheme", type=BinarizationScheme.parse, default=BinarizationScheme.CORRECT,
                       help="binarization: correct, continued or simple")
        p.add_argument("--strip-words", action="store_true", help="leaves are words under POS tags")
        p.add_argument("--trim-tags", action="store_true", help="drop functional tags such as -SBJ")

    p = sub.add_parser("reduce", help="build the reduced grammar from a treebank")
    corpus_flags(p)
    p.add_argument("--out", "-o", default="-")
    p.add_argument("--keep-root-interior", action="store_true")
    p.set_defaults(func=cmd_reduce, parser=p)

    p = sub.add_parser("parse", help="parse POS-tag sentences, one per line")
    p.add_argument("grammar")
    p.add_argument("sentences", nargs="?", default="-")
    p.add_argument("--method", choices=["maxcons", "viterbi", "montecarlo"], default="maxcons")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--fallback-punct", type=_punct, default=frozenset(["."]))
    p.set_defaults(func=cmd_parse, parser=p)

    p = sub.add_parser("sample", help="sample derivations of one sentence")
    p.add_argument("grammar")
    p.add_argument("sentence")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.set_defaults(func=cmd_sample, parser=p)

    p = sub.add_parser("experiment", help="repeated random-split evaluation")
    corpus_flags(p)
    p.add_argument("--preset", choices=["standard", "bod"], default="standard",
                   help="standard: 700/88 split, length <= 30; bod: 75-sentence tests, no length limit")
    p.add_argument("--train", type=int, help="training sentences (0: all not used for test)")
    p.add_argument("--test", type=int)
    p.add_argument("--max-len", type=int, help="drop longer sentences (0: no limit)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--systems", default="dop")
    p.add_argument("--external", action="append", metavar="NAME=PATH",
                   help="candidate trees per run; PATH contains {run}")
    p.add_argument("--report", choices=["table", "structured"], default="table")
    p.add_argument("--out", "-o", default="-")
    p.add_argument("--loose-match", action="store_true")
    p.add_argument("--retain-unary", action="store_true")
    p.add_argument("--fallback-punct", type=_punct, default=frozenset(["."]))
    p.add_argument("--dump-splits", metavar="DIR")
    p.set_defaults(func=cmd_experiment, parser=p)

    p = sub.add_parser("coverage", help="unique-production analysis")
    corpus_flags(p)
    p.add_argument("--retain-unary", action="store_true")
    p.add_argument("--test-size", type=int, default=75)
    p.add_argument("--exact", action="store_true", help="sample without replacement")
    p.set_defaults(func=cmd_coverage, parser=p)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        sys.stderr.write(f"dopcfg: {exc}\n")
        return EXIT_IO
    except DopError as exc:
        sys.stderr.write(f"dopcfg: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
