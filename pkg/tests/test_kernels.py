import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasketlab import _kernels_py, kernels
from gasketlab.expr import figure_b, figure_f
from gasketlab.fractal import FractalSystem, ScalingFamily, construct
from gasketlab.gasket import build_level_graph, sample, subcell_vertex_map

BACKENDS = sorted(kernels.backends())


def test_fallback_always_available():
    assert "python" in kernels.backends()
    assert kernels.BACKEND in kernels.backends()


def test_environment_forces_fallback():
    env = dict(os.environ, GASKETLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from gasketlab import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", BACKENDS)
@given(st.integers(0, 2**31), st.integers(1, 2000))
def test_count_boxes(name, seed, n):
    rng = np.random.default_rng(seed)
    i, j, k = (rng.integers(0, 6, n) for _ in range(3))
    expect = len(set(zip(i.tolist(), j.tolist(), k.tolist())))
    assert kernels.count_boxes(i, j, k, impl=kernels.backends()[name]) == expect


@pytest.mark.parametrize("name", BACKENDS)
def test_count_boxes_empty_and_large_keys(name):
    impl = kernels.backends()[name]
    e = np.zeros(0, dtype=np.int64)
    assert kernels.count_boxes(e, e, e, impl=impl) == 0
    big = np.array([2**20, 2**20, 0], dtype=np.int64)
    assert kernels.count_boxes(big, big[::-1].copy(), np.array([0, 1, 2**21 - 1]), impl=impl) == 3


@pytest.mark.parametrize("name", BACKENDS)
@given(st.integers(0, 2**31))
def test_cell_ranges(name, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=200)
    idx = rng.integers(0, 200, (30, 7))
    lo, hi = kernels.cell_ranges(vals, idx, impl=kernels.backends()[name])
    assert np.array_equal(lo, vals[idx].min(axis=1))
    assert np.array_equal(hi, vals[idx].max(axis=1))


@pytest.mark.parametrize("name", BACKENDS)
def test_cascade_stage_matches(name):
    level = 4
    g = build_level_graph(level)
    fv = sample(figure_f(), g).values
    bv = sample(figure_b(), g).values
    targets = subcell_vertex_map(level, 1)
    alpha = np.full((3, targets.shape[1]), 0.6)
    outs = []
    for impl in (_kernels_py, kernels.backends()[name]):
        out = np.zeros(g.n_vertices)
        out[: targets.shape[1]] = fv[: targets.shape[1]]
        filled = np.zeros(g.n_vertices, dtype=np.uint8)
        filled[: targets.shape[1]] = 1
        disc = kernels.cascade_stage(out, filled, targets, fv, alpha, bv, impl=impl)
        outs.append((out, filled, disc))
    assert np.array_equal(outs[0][0], outs[1][0])
    assert np.array_equal(outs[0][1], outs[1][1])
    assert outs[0][2] == outs[1][2]


@pytest.mark.parametrize("seed", range(5))
def test_construct_bitwise_equal_across_backends(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 3))
    a = ScalingFamily(N, table=tuple(rng.uniform(-0.9, 0.9, 3**N)))
    ref = None
    for impl in kernels.backends().values():
        v = construct(FractalSystem(figure_f(), a, 4 * N, figure_b()), impl=impl).values.values
        if ref is None:
            ref = v
        assert np.array_equal(v, ref)
