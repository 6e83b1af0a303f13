"""Compare the numba and pure-numpy kernel backends on realistic shapes.

Times k-hop lifting and the wavelet transform on lifted grid hypergraphs,
checks that both backends agree bit-for-bit, and reports the measured
multiply-add throughput against the analytic operation count.

    python benchmarks/bench_backends.py --side 200 --hops 3 --signals 16
"""

import argparse
import time

import numpy as np

import hyperwave as hw
from hyperwave import backends


def grid_graph(rows: int, cols: int) -> hw.Hypergraph:
    idx = np.arange(rows * cols).reshape(rows, cols)
    right = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    down = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    return hw.build_hypergraph(rows * cols, np.concatenate([right, down]))


def best_of(fn, reps: int) -> float:
    best = np.inf
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--side", type=int, default=200, help="grid side length")
    parser.add_argument("--hops", type=int, default=3, help="lifting radius")
    parser.add_argument("--signals", type=int, default=16, help="signal columns")
    parser.add_argument("--levels", type=int, default=4, help="dyadic wavelet levels")
    parser.add_argument("--reps", type=int, default=3, help="timing repetitions")
    args = parser.parse_args()

    available = ["numpy"] + (["numba"] if backends.HAS_NUMBA else [])
    if backends.HAS_NUMBA:
        backends.warmup("numba")

    contact = grid_graph(args.side, args.side)
    scales = hw.dyadic_scales(args.levels)
    rng = np.random.default_rng(0)

    print(f"grid {args.side}x{args.side}: n={contact.n}, contact edges={contact.m}")
    print(f"scales {scales.scales}, {args.signals} signal columns")
    print()

    lifted = {}
    print(f"{'k-hop lift':<24s}" + "".join(f"{b:>12s}" for b in available))
    times = {b: best_of(lambda b=b: lifted.setdefault(b, hw.khop_lift(contact, args.hops, backend=b)),
                        args.reps) for b in available}
    print(f"{'  seconds':<24s}" + "".join(f"{times[b]:12.3f}" for b in available))
    base = lifted[available[0]]
    for b in available[1:]:
        same = (np.array_equal(base.v2e.indptr, lifted[b].v2e.indptr)
                and np.array_equal(base.v2e.indices, lifted[b].v2e.indices))
        print(f"  membership identical ({available[0]} vs {b}): {same}")
    print()

    op = {b: hw.DiffusionOperator(base, backend=b) for b in available}
    x = rng.normal(size=(base.n, args.signals))
    results = {}
    print(f"{'wavelet transform':<24s}" + "".join(f"{b:>12s}" for b in available))
    times = {b: best_of(lambda b=b: results.setdefault(b, hw.wavelet_transform(op[b], x, scales)),
                        args.reps) for b in available}
    print(f"{'  seconds':<24s}" + "".join(f"{times[b]:12.3f}" for b in available))
    count = hw.transform_count(scales, args.signals, base.v2e.nnz, base.n)
    for b in available:
        rate = count.multiply_adds / times[b] / 1e9
        print(f"  {b}: {rate:.2f} G multiply-adds/s "
              f"(predicted {count.multiply_adds:,} multiply-adds)")
    for b in available[1:]:
        identical = np.array_equal(results[available[0]].flat, results[b].flat)
        print(f"  coefficients identical ({available[0]} vs {b}): {identical}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
