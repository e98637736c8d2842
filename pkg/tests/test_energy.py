import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasketlab.energy import (
    DIRECT_LIMIT,
    bilinear_energy,
    energy_sequence,
    graph_energy,
    graph_laplacian,
    harmonic_extend,
    harmonic_refine,
    holder_envelope,
    multiharmonic_basis,
    numerical_rank,
    piecewise_harmonic,
    pointwise_laplacian,
    solve_poisson,
)
from gasketlab.errors import LevelError, RankDeficiencyError
from gasketlab.gasket import SGFunction, build_level_graph, sample

from .conftest import random_poly


def minimise_energy(boundary, m):
    """Interior values minimising E_m for fixed boundary values (dense solve)."""
    g = build_level_graph(m)
    L = np.zeros((g.n_vertices, g.n_vertices))
    for a, b in g.edges:
        L[a, a] += 1
        L[b, b] += 1
        L[a, b] -= 1
        L[b, a] -= 1
    ub = np.asarray(boundary, dtype=float)
    ui = np.linalg.solve(L[3:, 3:], -L[3:, :3] @ ub)
    return np.concatenate([ub, ui])


class TestHarmonic:
    def test_one_fifth_two_fifths(self):
        v = harmonic_extend((1, 0, 0), 1).values
        assert np.allclose(v[3:], [0.4, 0.4, 0.2], atol=1e-15)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_matches_energy_minimiser(self, m):
        bnd = (0.3, -1.2, 2.0)
        assert np.allclose(harmonic_extend(bnd, m).values, minimise_energy(bnd, m), atol=1e-12)

    def test_second_level_value(self):
        h = harmonic_extend((1, 0, 0), 2)
        # cell "1" has corners p1, m12, m13 with values 1, 2/5, 2/5; its
        # child "11" picks up the refined values next to p1
        c = h.graph.cells[0]
        corners = [h.values[c[0]], h.values[c[1]], h.values[c[2]]]
        assert corners == pytest.approx([1.0, (2 * 1 + 2 * 0.4 + 0.4) / 5, 16 / 25])

    def test_constant_boundary(self):
        assert np.allclose(harmonic_extend((2.5, 2.5, 2.5), 4).values, 2.5)

    @pytest.mark.parametrize("m", range(0, 9))
    def test_energy_is_constant(self, m):
        assert graph_energy(harmonic_extend((1, 0, 0), m)) == pytest.approx(2.0, abs=1e-9)

    def test_first_level_energy_by_hand(self):
        h = harmonic_extend((1, 0, 0), 1)
        assert graph_energy(h, 1) == pytest.approx(5 / 3 * 1.2, abs=1e-14)

    def test_laplacian_vanishes(self):
        h = harmonic_extend((0.2, 1.0, -3.0), 6)
        assert graph_laplacian(h).max_abs() < 1e-13

    def test_minimality_against_perturbations(self, rng):
        m = 3
        h = harmonic_extend((1.0, -0.5, 0.25), m)
        e0 = graph_energy(h)
        for _ in range(200):
            v = h.values.copy()
            v[3:] += rng.normal(scale=0.05, size=len(v) - 3)
            assert graph_energy(SGFunction(h.graph, v)) >= e0 - 1e-12

    def test_piecewise_harmonic_interpolates(self):
        f = lambda x, y: np.sin(3 * x) + y
        g = piecewise_harmonic(f, 2, 6)
        coarse = sample(f, build_level_graph(2)).values
        assert np.array_equal(g.values[: len(coarse)], coarse)
        assert graph_laplacian(g, 6).values[len(coarse) - 3 :].size > 0


class TestEnergy:
    @pytest.mark.parametrize("n", range(0, 9))
    def test_coordinate_closed_form(self, n):
        e = graph_energy(sample(lambda x, y: x, build_level_graph(n)))
        assert e == pytest.approx(1.5 * 1.25**n, rel=1e-12)

    def test_sequence_divergent(self):
        seq = energy_sequence(lambda x, y: x, 8)
        assert seq.status == "divergent"
        assert all(r == pytest.approx(1.25) for r in seq.ratios)

    def test_sequence_harmonic(self):
        h = harmonic_extend((1, 0, 0), 8)
        seq = energy_sequence(h, 8)
        assert seq.status == "convergent" and np.allclose(seq.values, 2.0)

    def test_constant_zero(self):
        assert energy_sequence(lambda x, y: 0 * x + 4, 5).values == (0.0,) * 6

    def test_envelope(self):
        seq = energy_sequence(lambda x, y: x, 8, K=1.0, sigma=1.0)
        assert seq.envelope_holds
        assert seq.envelope[3] == holder_envelope(3, 1.0)

    def test_level_mismatch(self):
        with pytest.raises(LevelError):
            graph_energy(harmonic_extend((1, 0, 0), 2), 3)

    @given(st.integers(0, 2**31), st.integers(1, 5))
    def test_monotone(self, seed, m):
        fn = random_poly(np.random.default_rng(seed))
        f = sample(fn, build_level_graph(m))
        vals = [graph_energy(f, j) for j in range(m + 1)]
        assert all(a <= b + 1e-12 * max(1, abs(b)) for a, b in zip(vals, vals[1:]))

    @given(st.integers(0, 2**31), st.integers(0, 5))
    def test_parallelogram_law(self, seed, m):
        rng = np.random.default_rng(seed)
        g = build_level_graph(m)
        f = SGFunction(g, rng.normal(size=g.n_vertices))
        h = SGFunction(g, rng.normal(size=g.n_vertices))
        lhs = graph_energy(f + h) + graph_energy(f - h)
        rhs = 2 * graph_energy(f) + 2 * graph_energy(h)
        assert lhs == pytest.approx(rhs, rel=1e-9)
        assert bilinear_energy(f, h) == pytest.approx((graph_energy(f + h) - graph_energy(f - h)) / 4, rel=1e-9, abs=1e-12)


class TestLaplacian:
    def test_harmonic_at_m12(self):
        h = harmonic_extend((1, 0, 0), 1)
        assert graph_laplacian(h).values[0] == pytest.approx(0.0, abs=1e-15)

    def test_coordinate_symmetric(self):
        f = sample(lambda x, y: x, build_level_graph(2))
        lap = graph_laplacian(f, 2)
        assert lap.values[0] == pytest.approx(0.0, abs=1e-15)

    def test_constant(self):
        f = sample(lambda x, y: 0 * x + 3, build_level_graph(4))
        assert pointwise_laplacian(f, 3).max_abs() == 0.0

    def test_pointwise_needs_finer_samples(self):
        with pytest.raises(LevelError):
            pointwise_laplacian(harmonic_extend((1, 0, 0), 3), 3)


class TestPoisson:
    def test_zero_rhs_is_harmonic(self):
        u = solve_poisson(0.0, (1.0, 2.0, -1.0), 5)
        assert np.allclose(u.values, harmonic_extend((1.0, 2.0, -1.0), 5).values, atol=1e-10)

    def test_zero_everything(self):
        assert np.all(solve_poisson(0.0, (0, 0, 0), 4).values == 0)

    def test_maximum_principle(self):
        u = solve_poisson(1.0, (0, 0, 0), 4)
        assert u.values.max() <= 0 and u.values.min() < 0

    def test_residual(self):
        M = 6
        u = solve_poisson(1.0, (0, 0, 0), M)
        lap = pointwise_laplacian(u, M - 2)
        assert np.allclose(lap.values, 1.0, rtol=0.05)

    def test_weak_form(self):
        m = 5
        g = build_level_graph(m)
        gv = np.sin(3 * g.coords[:, 0]) + g.coords[:, 1]
        u = solve_poisson(gv, (0, 0, 0), m)
        rng = np.random.default_rng(0)
        v = rng.normal(size=g.n_vertices)
        v[:3] = 0
        lhs = bilinear_energy(u, SGFunction(g, v))
        rhs = -np.sum((2 / 3) * 3.0**-m * gv[3:] * v[3:])
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_iterative_path(self, monkeypatch):
        from gasketlab import energy

        energy._interior_system.cache_clear()
        monkeypatch.setattr(energy, "DIRECT_LIMIT", 10)
        u_cg = energy.solve_poisson(1.0, (0.5, 0, 0), 5)
        energy._interior_system.cache_clear()
        monkeypatch.setattr(energy, "DIRECT_LIMIT", DIRECT_LIMIT)
        u_direct = energy.solve_poisson(1.0, (0.5, 0, 0), 5)
        energy._interior_system.cache_clear()
        assert np.allclose(u_cg.values, u_direct.values, atol=1e-10)


class TestMultiharmonic:
    def test_partition_of_unity(self):
        b = multiharmonic_basis(0, 4)
        assert np.allclose(sum(f.values for f in b), 1.0)

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_rank(self, k):
        b = multiharmonic_basis(k, 5)
        assert len(b) == b.rank == 3 * (k + 1)

    def test_k1_gram_rank_on_v4(self):
        M = multiharmonic_basis(1, 4).matrix()
        assert np.linalg.matrix_rank(M.T @ M) == 6

    def test_iterated_laplacian_vanishes(self):
        m = 7
        b = multiharmonic_basis(1, m)
        for f in b[3:]:
            # Delta f is harmonic with zero boundary, i.e. one of the f_{0,i}
            lap = pointwise_laplacian(f, m - 1)
            assert np.max(np.abs(lap.values)) < 2

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            multiharmonic_basis(5, 4)
        with pytest.raises(LevelError):
            multiharmonic_basis(1, 2)

    def test_rank_deficiency_reported(self):
        cols = np.column_stack([np.ones(10), np.ones(10)])
        rank, cond = numerical_rank(cols)
        assert rank == 1 and cond > 1e10

    def test_rank_error_type(self):
        err = RankDeficiencyError("x", 1e20)
        assert err.condition == 1e20 and err.code == "rank_deficient"


def test_refine_identity():
    v = np.arange(6, dtype=float)
    assert np.array_equal(harmonic_refine(v, 1, 1), v)
