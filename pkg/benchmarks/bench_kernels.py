"""Compare the numba and numpy kernel paths.

    python benchmarks/bench_kernels.py [--dim 896] [--repeats 10]
"""

import argparse
import json

from fastvid.bench import run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=32)
    ap.add_argument("--tokens", type=int, default=196)
    ap.add_argument("--dim", type=int, default=896)
    ap.add_argument("--repeats", type=int, default=10)
    a = ap.parse_args()
    report = run_benchmark(a.frames, a.tokens, a.dim, a.repeats)
    print(json.dumps(report, indent=2))
    ms = report["ms"]
    if "numba" in ms and "numpy" in ms:
        for case in ms["numba"]:
            print(f"{case:>14}: numba {ms['numba'][case]:8.3f} ms   numpy {ms['numpy'][case]:8.3f} ms")
