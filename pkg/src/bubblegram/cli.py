"""Command-line entry point: learn, sample, eval, parse."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .earley import membership
from .evaluation import BENCHMARKS, evaluate, generate_test_set, load_benchmark
from .grammar import Grammar, GrammarError, dump, load, sample
from .learner import LearnerConfig, StartupError, learn
from .merging import AuditLog, SamplingConfig
from .oracle import CommandOracle, GrammarOracle, Oracle
from .scoring import ScoringConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_NOT_MEMBER = 3


class UsageError(Exception):
    pass


def escape_line(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


def unescape_line(s: str) -> str:
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            out.append({"n": "\n", "r": "\r", "\\": "\\"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def read_input(path: Path, keep_newline: bool) -> str:
    text = path.read_bytes().decode("utf-8")
    if not keep_newline and text.endswith("\n"):
        text = text[:-1]
    return text


def read_examples(directory: str, keep_newline: bool) -> list[str]:
    root = Path(directory)
    if not root.is_dir():
        raise UsageError(f"examples directory not found: {directory}")
    files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise UsageError(f"no example files in {directory}")
    return [read_input(p, keep_newline) for p in files]


def load_golden(spec: str) -> Grammar:
    if os.path.exists(spec):
        return load(spec)
    if spec in BENCHMARKS:
        return load_benchmark(spec)
    raise UsageError(f"golden grammar not found: {spec}")


def load_grammar(path: str) -> Grammar:
    if not os.path.exists(path):
        raise UsageError(f"grammar file not found: {path}")
    return load(path)


def parse_duration(text: str) -> float:
    t = text.strip().lower()
    scale = 1.0
    if t.endswith("ms"):
        t, scale = t[:-2], 0.001
    elif t.endswith("s"):
        t = t[:-1]
    try:
        value = float(t) * scale
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def make_oracle(args, budget: int | None = None) -> Oracle:
    if bool(args.oracle) == bool(args.golden):
        raise UsageError("give exactly one of --oracle or --golden")
    if args.oracle:
        return CommandOracle(args.oracle, args.oracle_timeout, budget)
    return GrammarOracle(load_golden(args.golden), budget)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bubblegram", description="Learn context-free grammars from examples and an oracle.")
    sub = p.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("learn", help="learn a grammar from example files")
    lp.add_argument("--examples", required=True, help="directory with one example per file")
    lp.add_argument("--oracle", help="command run as `CMD <file>`; exit 0 means valid")
    lp.add_argument("--golden", help="golden grammar file (or bundled name) used as the oracle")
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--top-n", type=int, default=100)
    lp.add_argument("--sample-p", type=int, default=50)
    lp.add_argument("--context-k", type=int, default=4)
    lp.add_argument("--max-len-start", type=int, default=None)
    lp.add_argument("--max-len-end", type=int, default=None)
    lp.add_argument("--preset", choices=["default", "large"], default="default")
    lp.add_argument("--char-level", action="store_true", help="skip pre-tokenization")
    lp.add_argument("--strict-holes", action="store_true", help="also fill holes independently")
    lp.add_argument("--token-expand-samples", type=int, default=10)
    lp.add_argument("--oracle-timeout", type=parse_duration, default=10.0)
    lp.add_argument("--query-budget", type=int, default=None)
    lp.add_argument("--audit-log")
    lp.add_argument("--dump-bubbles", help="write the ranked bubbles of every iteration here")
    lp.add_argument("--keep-trailing-newline", action="store_true")
    lp.add_argument("-o", "--out", required=True)
    lp.add_argument("--report", help="write a JSON run report here")

    sp = sub.add_parser("sample", help="print random strings from a grammar")
    sp.add_argument("grammar")
    sp.add_argument("-n", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)

    ep = sub.add_parser("eval", help="recall/precision/F1 of a grammar")
    ep.add_argument("grammar")
    ep.add_argument("--golden", help="golden grammar file or bundled name")
    ep.add_argument("--oracle", help="oracle command used for precision")
    ep.add_argument("--test", help="test strings: a directory of files or a file with one escaped string per line")
    ep.add_argument("--test-n", type=int, default=1000, help="test strings sampled from --golden")
    ep.add_argument("--samples", type=int, default=1000, help="samples drawn for precision")
    ep.add_argument("--seed", type=int, default=0)
    ep.add_argument("--oracle-timeout", type=parse_duration, default=10.0)
    ep.add_argument("--keep-trailing-newline", action="store_true")

    pp = sub.add_parser("parse", help="exit 0 iff the input is in the grammar's language")
    pp.add_argument("grammar")
    pp.add_argument("input")
    pp.add_argument("--keep-trailing-newline", action="store_true")
    return p


def cmd_learn(args) -> int:
    examples = read_examples(args.examples, args.keep_trailing_newline)
    lo, hi = (6, 20) if args.preset == "large" else (3, 10)
    if args.max_len_start is not None:
        lo = args.max_len_start
    if args.max_len_end is not None:
        hi = args.max_len_end
    try:
        cfg = LearnerConfig(
            scoring=ScoringConfig(args.context_k, args.top_n, lo, hi, args.seed),
            sampling=SamplingConfig(args.sample_p, args.seed, True, args.strict_holes),
            pretokenize=not args.char_level,
            token_expand_samples=args.token_expand_samples,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    oracle = make_oracle(args, args.query_budget)
    audit = AuditLog() if args.audit_log else None
    dump_fh = open(args.dump_bubbles, "w", encoding="utf-8") if args.dump_bubbles else None

    def on_rank(it, max_len, bubbles):
        for rank, b in enumerate(bubbles):
            seq2 = " ".join(b.seq2) if b.seq2 is not None else "-"
            dump_fh.write(f"{it}\t{max_len}\t{rank}\t{b.similarity}\t{b.frequency}\t"
                          f"{' '.join(b.seq1)}\t{seq2}\n")

    try:
        report = learn(examples, oracle, cfg, audit, on_rank if dump_fh else None)
    except StartupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if dump_fh:
            dump_fh.close()
    dump(report.grammar, args.out)
    if audit is not None:
        audit.write(args.audit_log)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")
    if report.aborted:
        print(f"warning: {report.aborted}; wrote partial grammar to {args.out}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_sample(args) -> int:
    g = load_grammar(args.grammar)
    if args.n < 0:
        raise UsageError("-n must be >= 0")
    for i in range(args.n):
        print(escape_line(sample(g, args.seed + i)))
    return EXIT_OK


def cmd_eval(args) -> int:
    mined = load_grammar(args.grammar)
    if args.test:
        path = Path(args.test)
        if path.is_dir():
            test = read_examples(args.test, args.keep_trailing_newline)
        elif path.is_file():
            test = [unescape_line(line) for line in path.read_text("utf-8").splitlines() if line]
        else:
            raise UsageError(f"test path not found: {args.test}")
    else:
        if not args.golden:
            raise UsageError("--test-n needs --golden to sample test strings")
        test = generate_test_set(load_golden(args.golden), args.test_n, args.seed)
    if not test:
        raise UsageError("empty test set")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    oracle = make_oracle(args)
    report = evaluate(mined, oracle, test, args.samples, args.seed)
    print(json.dumps(report.as_dict()))
    print(report.table())
    return EXIT_OK


def cmd_parse(args) -> int:
    g = load_grammar(args.grammar)
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"input file not found: {args.input}")
    return EXIT_OK if membership(g, read_input(path, args.keep_trailing_newline)) else EXIT_NOT_MEMBER


COMMANDS = {"learn": cmd_learn, "sample": cmd_sample, "eval": cmd_eval, "parse": cmd_parse}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GrammarError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
