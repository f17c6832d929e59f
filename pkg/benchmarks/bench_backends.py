#!/usr/bin/env python3
"""Compare the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_backends.py [--repeats N] [--batch-size B]
"""

import argparse

from tanklab.bench import run_benchmark

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=256)
    args = parser.parse_args()
    run_benchmark(repeats=args.repeats, batch_size=args.batch_size)
