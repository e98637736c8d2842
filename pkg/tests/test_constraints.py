import numpy as np
import pytest

from gasketlab.constraints import (
    MARGIN,
    admissible_interval,
    admissible_intervals,
    above_perturbation,
    check_domination,
    choose_alpha,
    compute_extrema,
    positive_perturbation,
)
from gasketlab.energy import harmonic_extend, harmonic_refine
from gasketlab.errors import InfeasibleError, LevelError
from gasketlab.expr import bump, figure_f
from gasketlab.fractal import FractalSystem, ScalingFamily, construct
from gasketlab.gasket import SGFunction, build_level_graph, sample

from .conftest import random_poly


def nonneg_poly(rng, level):
    g = build_level_graph(level)
    v = sample(random_poly(rng), g).values
    return SGFunction(g, v - v.min() + rng.uniform(0, 0.5))


class TestExtrema:
    def test_harmonic_cell_maxima(self):
        h = harmonic_extend((1, 0, 0), 1)
        r = compute_extrema(h, h, 1, 1)
        assert r.M_w.tolist() == pytest.approx([1.0, 0.4, 0.4])
        assert r.m_w.tolist() == pytest.approx([0.4, 0.0, 0.0])

    def test_zero_base(self):
        r = compute_extrema(lambda x, y: x, lambda x, y: 0 * x, 1, 3)
        assert r.m_star == r.M_star == 0.0

    def test_constant(self):
        r = compute_extrema(lambda x, y: 0 * x + 2.5, lambda x, y: 0 * x + 2.5, 2, 4)
        assert np.all(r.m_w == 2.5) and np.all(r.M_w == 2.5)
        assert r.word(4) == "22"

    def test_level_check(self):
        with pytest.raises(LevelError):
            compute_extrema(lambda x, y: x, lambda x, y: x, 3, 2)


class TestInterval:
    def test_alpha_zero_feasible(self, rng):
        for _ in range(10):
            f = nonneg_poly(rng, 5)
            r = compute_extrema(f, f, 1, 5)
            for iv in admissible_intervals(r, float(f.values.max())):
                assert iv.feasible and iv.lo <= 0 <= iv.hi

    def test_zero_M_star_drops_terms(self):
        # b = 0 everywhere: only the M_tilde - m_* terms remain
        r = compute_extrema(lambda x, y: x * (1 - x) + 0 * y, lambda x, y: 0 * x, 1, 4)
        iv = admissible_interval(r, "2", 1.0)
        k = 1
        assert iv.hi == pytest.approx(min(1 - MARGIN, 1.0 - r.M_w[k]))
        assert iv.lo == pytest.approx(max(-1 + MARGIN, -r.m_w[k]))

    def test_inside_open_unit_interval(self, rng):
        for _ in range(20):
            f = nonneg_poly(rng, 4)
            b = harmonic_refine(f.values[:3], 0, 4)
            r = compute_extrema(f, b, 1, 4)
            for iv in admissible_intervals(r, float(f.values.max()) * 1.5):
                if iv.feasible:
                    assert -1 < iv.lo <= iv.hi < 1

    def test_hypothesis_flag(self):
        r = compute_extrema(lambda x, y: x, lambda x, y: x - 0.5 + 0 * y, 1, 3)
        assert not admissible_interval(r, "1", 1.0).within_hypotheses
        r = compute_extrema(lambda x, y: x, lambda x, y: x, 1, 3)
        assert admissible_interval(r, "1", 1.0).within_hypotheses

    def test_sampling_oracle_harmonic(self):
        h = harmonic_extend((1, 0, 0), 6)
        r = compute_extrema(h, h, 1, 6)
        iv = admissible_interval(r, "2", 1.0)
        for a in np.linspace(iv.lo, iv.hi, 20):
            table = {"1": 0.0, "2": a, "3": 0.0}
            res = construct(FractalSystem(h, ScalingFamily.from_table(table, 1), 6, h))
            assert res.values.values.min() >= 0 and res.values.values.max() <= 1

    def test_soundness_sweep(self, rng):
        level = 8
        done = 0
        while done < 50:
            N = int(rng.integers(1, 3))
            f = nonneg_poly(rng, level)
            b = harmonic_refine(f.values[:3], 0, level)
            Mt = float(f.values.max()) * rng.uniform(1.0, 2.0)
            ivs = admissible_intervals(compute_extrema(f, b, N, level), Mt)
            if not all(iv.feasible and iv.within_hypotheses for iv in ivs):
                continue
            table = {iv.word: rng.uniform(iv.lo, iv.hi) for iv in ivs}
            res = construct(FractalSystem(f, ScalingFamily.from_table(table, N), level, b))
            v = res.values.values
            assert v.min() >= -1e-10 and v.max() <= Mt + 1e-10
            done += 1

    def test_mirror(self, rng):
        level = 6
        for _ in range(10):
            f = nonneg_poly(rng, level)
            b = harmonic_refine(f.values[:3], 0, level)
            Mt = float(f.values.max()) * 1.2
            alpha = choose_alpha(admissible_intervals(compute_extrema(f, b, 1, level), Mt), "hi")
            neg = construct(FractalSystem(-f, alpha, level, SGFunction(f.graph, -b)))
            assert neg.values.values.max() <= 1e-10 and neg.values.values.min() >= -Mt - 1e-10

    def test_choose_alpha(self):
        r = compute_extrema(lambda x, y: x + 0.1, lambda x, y: x + 0.1, 1, 3)
        ivs = admissible_intervals(r, 1.1)
        a = choose_alpha(ivs, "midpoint")
        assert a.table == pytest.approx(tuple(iv.midpoint for iv in ivs))
        capped = choose_alpha(ivs, "hi", cap=0.01)
        assert max(capped.table) <= 0.01

    def test_choose_alpha_infeasible(self):
        r = compute_extrema(lambda x, y: x, lambda x, y: x, 1, 3)
        iv = admissible_interval(r, "1", 1.0)
        bad = type(iv)("1", 0.5, 0.2, False)
        with pytest.raises(InfeasibleError):
            choose_alpha([bad, iv, iv])


class TestDomination:
    def test_b_equals_f(self):
        f = lambda x, y: x * y + 0.2
        rep = check_domination(construct(FractalSystem(f, ScalingFamily.constant(0.5), 4, f)))
        assert rep.hypothesis and rep.conclusion and rep.max_excess == 0.0

    def test_bump_above(self):
        h = harmonic_extend((1, 0, 0), 6)
        b = h.values + 0.1 * sample(bump, h.graph).values
        res = construct(FractalSystem(h, ScalingFamily.constant(0.4), 6, SGFunction(h.graph, b)))
        rep = check_domination(res, "below")
        assert rep.hypothesis and rep.conclusion and rep.max_excess <= 0

    def test_negative_alpha_not_covered(self):
        h = harmonic_extend((1, 0, 0), 6)
        b = h.values + 0.1 * sample(bump, h.graph).values
        res = construct(FractalSystem(h, ScalingFamily.constant(-0.4), 6, SGFunction(h.graph, b)))
        rep = check_domination(res, "below")
        assert not rep.hypothesis
        assert not rep.conclusion  # observed: f^alpha rises above f

    def test_above(self):
        h = harmonic_extend((1, 0, 0), 5)
        b = h.values - 0.1 * sample(bump, h.graph).values
        res = construct(FractalSystem(h, ScalingFamily.constant(0.3), 5, SGFunction(h.graph, b)))
        rep = check_domination(res, "above")
        assert rep.hypothesis and rep.conclusion

    def test_direction_validated(self):
        res = construct(FractalSystem(lambda x, y: x, ScalingFamily.constant(0.3), 2, lambda x, y: x))
        with pytest.raises(ValueError):
            check_domination(res, "sideways")


class TestPerturbation:
    def test_harmonic(self):
        h = harmonic_extend((0.5, 0.0, 1.0), 6)
        p = positive_perturbation(h, 0.1, 6)
        assert p.coarse_level == 0
        assert np.allclose(p.h.values, h.values + 0.025)
        assert p.h_alpha.values.min() >= 0 and p.error < 0.1

    def test_coordinate_coarse_level(self):
        p = positive_perturbation(lambda x, y: x, 0.1, 8)
        assert p.coarse_level <= 4 and p.interpolation_error < 0.025
        assert p.h_alpha.values.min() >= 0 and p.error < 0.1

    def test_piecewise_harmonic_error_decays(self):
        g = build_level_graph(8)
        x = g.coords[:, 0]
        errs = [np.max(np.abs(x - harmonic_refine(x, mc, 8))) for mc in range(1, 5)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[3] < 0.025

    def test_zero(self):
        p = positive_perturbation(lambda x, y: 0 * x, 0.2, 5)
        assert np.allclose(p.h.values, 0.05)
        assert p.h_alpha.values.min() >= 0 and p.error < 0.2

    def test_figure_f_positive(self):
        p = positive_perturbation(figure_f(), 0.05, 8)
        assert p.h_alpha.values.min() >= 0 and p.error < 0.05
        assert max(abs(a) for a in p.result.alpha.table) <= p.alpha_bound

    def test_rough_function(self):
        f = lambda x, y: np.abs(np.sin(9 * x) * np.cos(7 * y))
        p = positive_perturbation(f, 0.1, 8, N=2)
        assert p.h_alpha.values.min() >= 0 and p.error < 0.1

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            positive_perturbation(lambda x, y: x - 0.5, 0.1, 4)
        with pytest.raises(ValueError):
            positive_perturbation(lambda x, y: x, 0.0, 4)

    def test_above_composite(self):
        f = figure_f()
        p = above_perturbation(f, 0.05, 8)
        fv = sample(f, build_level_graph(8)).values
        assert np.all(p.h_alpha.values >= fv - 1e-10)
        assert p.error < 0.05
        assert p.alpha_bound > 0

    def test_above_rough(self):
        f = lambda x, y: np.sin(6 * x) * y
        p = above_perturbation(f, 0.1, 8)
        fv = sample(f, build_level_graph(8)).values
        assert np.all(p.h_alpha.values >= fv - 1e-10) and p.error < 0.1
