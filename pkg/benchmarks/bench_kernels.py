"""Time the pure-Python and compiled kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import random
import timeit

from bubblegram import kernels
from bubblegram.earley import CompiledGrammar
from bubblegram.evaluation import load_benchmark
from bubblegram.grammar import sample


def earley_case(impl, name, strings):
    cg = CompiledGrammar(load_benchmark(name), impl)
    return lambda: [cg.accepts(s) for s in strings]


def similarity_case(impl, k, rows, offsets):
    ctx = impl.pack_contexts(rows, k)
    off = impl.pack_ints(offsets)
    half = (len(offsets) - 1) // 2
    q = impl.pack_ints(list(range(half)))
    pool = impl.pack_ints(list(range(half, 2 * half)))
    return lambda: impl.best_sims(ctx, off, q, pool, k)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        compiled = kernels.backend("compiled")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run pip install -e . first")
    pure = kernels.backend("pure")

    rng = random.Random(0)
    cases = []
    for name in ("arith", "while", "json"):
        g = load_benchmark(name)
        strings = [sample(g, s) for s in range(100)]
        strings += [s[: rng.randrange(len(s) + 1)] for s in strings]
        cases.append((f"earley {name} ({len(strings)} strings)",
                      lambda impl, n=name, ss=strings: earley_case(impl, n, ss)))
    for k in (2, 4):
        rows, offsets = [], [0]
        for _ in range(200):
            for _ in range(rng.randint(1, 8)):
                rows.append([rng.randint(-2, 30) for _ in range(2 * k)])
            offsets.append(len(rows))
        cases.append((f"best_sims k={k} (100x100 sets)",
                      lambda impl, k=k, r=rows, o=offsets: similarity_case(impl, k, r, o)))

    print(f"{'case':<36}{'pure ms':>10}{'compiled ms':>13}{'speedup':>9}")
    for label, make in cases:
        fp, fc = make(pure), make(compiled)
        assert list(fp()) == list(fc()), label
        tp = min(timeit.repeat(fp, number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(fc, number=1, repeat=args.repeat)) * 1e3
        print(f"{label:<36}{tp:>10.2f}{tc:>13.2f}{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
