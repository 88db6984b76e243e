"""Compiled kernels against the numpy/pure-Python fallback.

    python benchmarks/bench_kernels.py [--trials 65536]
"""

import argparse
import time

import numpy as np

from mpec import kernels
from mpec.circuit import build_level2_cnot_exrec
from mpec.engine import compile_circuit, run_batch
from mpec.harness import batch_rng, sample_fixed_batch


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_match(rng, n=20_000):
    counts = rng.integers(0, 12, size=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    inc = rng.integers(0, 8, size=offsets[-1]).astype(np.int64)
    masks = rng.integers(0, 512, size=offsets[-1]).astype(np.int64)
    syn = rng.integers(1, 8, size=n).astype(np.int64)
    return lambda: kernels.match_batch(syn, offsets, inc, masks, 3)


def bench_cnot(rng, W=1024, n=20_000):
    x = rng.integers(0, 2**63, size=(2 * n, W), dtype=np.uint64)
    z = x.copy()
    ctrl = np.arange(0, 2 * n, 2, dtype=np.int64)
    tgt = ctrl + 1
    return lambda: kernels.cnot_layer(x, z, ctrl, tgt)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=65_536)
    ap.add_argument("--weight", type=int, default=8)
    args = ap.parse_args()
    prog = compile_circuit(build_level2_cnot_exrec())
    faults = sample_fixed_batch(prog.is_cnot, args.weight, args.trials, batch_rng(1, "fixed", args.weight, 0))
    rng = np.random.default_rng(0)
    rows = []
    results = {}
    for backend in kernels.available():
        kernels.use(backend)
        rows.append((backend, "match_batch (20k trials)", timeit(bench_match(rng))))
        rows.append((backend, "cnot_layer (20k x 1024 words)", timeit(bench_cnot(rng))))
        for dec in ("standard", "mpec"):
            t = timeit(lambda: results.setdefault((backend, dec), run_batch(prog, faults, args.trials, dec)), 2)
            rows.append((backend, f"run_batch {dec} ({args.trials} trials, i={args.weight})", t))
    for dec in ("standard", "mpec"):
        same = len({results[(b, dec)].failed.tobytes() for b in kernels.available()}) == 1
        print(f"{dec}: backends agree = {same}")
    print(f"{'backend':8} {'kernel':48} {'seconds':>10}")
    for b, name, t in rows:
        print(f"{b:8} {name:48} {t:10.4f}")


if __name__ == "__main__":
    main()
