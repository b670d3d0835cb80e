"""Compare the numba and numpy kernel backends.

Kernel timings call both implementations in-process. The end-to-end row
runs a small benchmark corpus in a subprocess per backend, since the
backend is fixed at import time by REGIONSEARCH_PURE_NUMPY.

    python3 benchmarks/bench_kernels.py [--sizes 20 1000 100000] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from regionsearch._kernels import IMPLEMENTATIONS

E2E = """
import time
from regionsearch import BACKEND
from regionsearch.harness import GeneratorSpec, ScriptedGrounder, generate_synthetic, run_benchmark
from regionsearch.perceptor import MockEmbeddingProvider
samples = generate_synthetic(GeneratorSpec(n_scenes={n}), 0)
g, m = ScriptedGrounder(samples), MockEmbeddingProvider()
run_benchmark(samples[:2], m, g)  # warm-up (JIT compile or cache load)
t = time.perf_counter()
rep = run_benchmark(samples, m, g)
print(BACKEND, time.perf_counter() - t, rep.accuracy)
"""


def inputs(n, rng):
    xy = rng.uniform(0, 1800, size=(n, 2))
    wh = rng.uniform(10, 200, size=(n, 2))
    boxes = np.hstack([xy, xy + wh])
    return {
        "centers_inside": (boxes[:, :2] + wh / 2, 200.0, 100.0, 1200.0, 900.0),
        "clipped_area_sum": (boxes, 200.0, 100.0, 1200.0, 900.0),
        "weighted_relevance": (rng.random(n), rng.random(n) < 0.6, 0.5, 1e-8),
        "softmax_entropy": (rng.random(n), 0.1),
    }


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'n':>8}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for n in sizes:
        args = inputs(n, rng)
        for name, a in args.items():
            times = {}
            for backend in ("numpy", "numba"):
                fn = IMPLEMENTATIONS[backend][name]
                fn(*a)  # compile / warm
                number = max(1, 20000 // max(n, 1))
                best = min(timeit.repeat(lambda: fn(*a), number=number, repeat=repeat))
                times[backend] = best / number * 1e6
            print(f"{name:<20}{n:>8}{times['numpy']:>12.2f}{times['numba']:>12.2f}"
                  f"{times['numpy'] / times['numba']:>8.1f}x")


def bench_end_to_end(n_scenes):
    print(f"\nend-to-end search over {n_scenes} synthetic samples")
    for flag in ("0", "1"):
        env = dict(os.environ, REGIONSEARCH_PURE_NUMPY=flag)
        out = subprocess.run([sys.executable, "-c", E2E.format(n=n_scenes)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<6} {float(out[1]):.3f}s  accuracy {out[2]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 1000, 100000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scenes", type=int, default=200)
    args = ap.parse_args()
    if "numba" not in IMPLEMENTATIONS:
        sys.exit("numba is not installed; nothing to compare")
    bench_kernels(args.sizes, args.repeat)
    bench_end_to_end(args.scenes)


if __name__ == "__main__":
    main()
