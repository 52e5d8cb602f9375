#!/usr/bin/env python3
"""Time the blocked retrieval kernel against the full-sort oracle.

Usage:
    python scripts/bench_retrieval.py [--dims 64,256,1024] [--counts 1000,10000,50000]
"""
import argparse
import time

import numpy as np

from imgany import EmbeddingBank, retrieve_top_k, retrieve_top_k_oracle


def make_bank(rng, count, dim):
    rows = rng.standard_normal((count, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return EmbeddingBank(kind="noun", words=tuple(f"w{i:06d}" for i in range(count)),
                         keep=np.ones(count, dtype=bool), matrix=rows.astype(np.float32))


def timed(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", default="64,256,1024")
    parser.add_argument("--counts", default="1000,10000,50000")
    parser.add_argument("--k", type=int, default=8)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'count':>8} {'dim':>6} {'kernel ms':>10} {'oracle ms':>10} {'speedup':>8}")
    for count in (int(c) for c in args.counts.split(",")):
        for dim in (int(d) for d in args.dims.split(",")):
            bank = make_bank(rng, count, dim)
            query = rng.standard_normal(dim)
            kernel = timed(retrieve_top_k, bank, query, args.k)
            oracle = timed(retrieve_top_k_oracle, bank, query, args.k, repeat=2)
            print(f"{count:>8} {dim:>6} {kernel * 1e3:>10.2f} {oracle * 1e3:>10.2f} "
                  f"{oracle / kernel:>7.1f}x")


if __name__ == "__main__":
    main()
