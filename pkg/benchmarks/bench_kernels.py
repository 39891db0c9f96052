"""Time the compiled graph kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 100,500,2000]

Prints one row per (kernel, graph size) with the best-of-N wall time of each
backend and the speedup. Outputs of the two backends are compared first.
"""
import argparse
import timeit

import numpy as np

from metaview.graphcore import synth_graph
from metaview.kernels import _pykernels

try:
    from metaview.kernels import _ckernels
except ImportError:
    _ckernels = None

KERNELS = {
    "neighbor_sum": lambda mod, g, h: mod.neighbor_sum(g.indptr, g.indices, h),
    "components": lambda mod, g, h: mod.connected_components(g.indptr, g.indices),
    "harmonic": lambda mod, g, h: mod.harmonic_centrality(g.indptr, g.indices),
}


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--sizes", default="100,500,2000")
    p.add_argument("--width", type=int, default=64, help="feature width for neighbor_sum")
    args = p.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled kernels not built; run pip install --no-build-isolation -e .")

    print(f"{'kernel':<13} {'nodes':>6} {'edges':>7} {'python ms':>10} {'ext ms':>9} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        g = synth_graph("barabasi_albert", {"n": n, "m": 3}, 0, require_keep=False)
        h = np.random.default_rng(0).normal(size=(n, args.width))
        for name, call in KERNELS.items():
            if name == "harmonic" and n > 2000:
                continue
            if not np.array_equal(call(_pykernels, g, h), call(_ckernels, g, h)):
                raise SystemExit(f"{name}: backends disagree on n={n}")
            t_py = best_time(lambda: call(_pykernels, g, h), args.repeat)
            t_c = best_time(lambda: call(_ckernels, g, h), args.repeat)
            print(f"{name:<13} {n:>6} {g.n_edges:>7} {1e3 * t_py:>10.3f} {1e3 * t_c:>9.3f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
