"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --level 10 --repeat 5

Each kernel is timed on the same inputs for every available backend; the
best of ``--repeat`` runs is reported along with the speedup over numpy.
"""

import argparse
import time

import numpy as np

from gasketlab import kernels
from gasketlab.dimension import cube_indices
from gasketlab.expr import figure_b, figure_f
from gasketlab.fractal import FractalSystem, ScalingFamily, construct
from gasketlab.gasket import SGFunction, build_level_graph, sample, subcell_vertex_map


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    L = args.level
    g = build_level_graph(L)
    system = FractalSystem(figure_f(), ScalingFamily.constant(0.7), L, figure_b())
    fa = construct(system).values
    rough = SGFunction(g, np.sin(40 * g.coords[:, 0]) * np.cos(30 * g.coords[:, 1]))
    i, j, k = cube_indices(rough, L - 3)
    cells = subcell_vertex_map(L, L - 3)
    sample(figure_f(), g)  # warm caches

    tasks = {
        "cascade (construct)": lambda impl: construct(system, impl=impl),
        "count_boxes": lambda impl: kernels.count_boxes(i, j, k, impl=impl),
        "cell_ranges": lambda impl: kernels.cell_ranges(fa.values, cells, impl=impl),
    }
    backends = kernels.backends()
    print(f"level {L}: {g.n_vertices} vertices, default backend {kernels.BACKEND}")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, task in tasks.items():
        t = {name: best_of(lambda: task(mod), args.repeat) for name, mod in backends.items()}
        row = f"{label:<22}" + "".join(f"{t[name] * 1e3:>10.2f}ms" for name in backends)
        if "compiled" in t:
            row += f"{t['python'] / t['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
