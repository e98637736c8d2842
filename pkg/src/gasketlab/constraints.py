"""Scaling selection that keeps alpha-fractal functions inside given bounds.

Extrema are taken over sampled vertices, not true suprema.  Because the
cascade only ever reads values at those same vertices, an interval computed
on ``V_M`` is sufficient for the sampled ``f^alpha`` on ``V_M``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .energy import harmonic_refine
from .errors import InfeasibleError, LevelError
from .expr import bump
from .fractal import FractalResult, FractalSystem, ScalingFamily, construct
from .gasket import (
    SGFunction,
    as_values,
    build_level_graph,
    check_word,
    index_to_word,
    sample,
    subcell_vertex_map,
    word_to_index,
)

MARGIN = 1e-6


@dataclass(frozen=True)
class ExtremaReport:
    N: int
    level: int
    m_star: float  # min b
    M_star: float  # max b
    m_w: np.ndarray  # min f over each level-N cell
    M_w: np.ndarray  # max f over each level-N cell

    def word(self, k: int) -> str:
        return index_to_word(k, self.N)


def compute_extrema(f, b, N: int, m: int) -> ExtremaReport:
    """Sampled ``min/max b`` over ``V_m`` and ``min/max f`` per level-``N`` cell."""
    if m < N:
        raise LevelError(f"sampling level {m} must be at least N={N}")
    g = build_level_graph(m)
    fv = as_values(f, g)
    bv = as_values(b, g)
    lo, hi = kernels.cell_ranges(fv, subcell_vertex_map(m, N))
    return ExtremaReport(N, m, float(bv.min()), float(bv.max()), lo, hi)


@dataclass(frozen=True)
class AdmissibleInterval:
    word: str
    lo: float
    hi: float
    feasible: bool
    within_hypotheses: bool = True

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def admissible_interval(report: ExtremaReport, word, M_tilde: float, margin: float = MARGIN) -> AdmissibleInterval:
    """Range of constant ``alpha_w`` keeping ``0 <= f^alpha <= M_tilde``.

    Bounds with a zero denominator are dropped.  The result is intersected
    with ``(-1 + margin, 1 - margin)``.  ``within_hypotheses`` is false when
    ``b`` is not non-negative or ``f`` leaves ``[0, M_tilde]`` on the samples.
    """
    w = check_word(word)
    k = word_to_index(w)
    mw, Mw = float(report.m_w[k]), float(report.M_w[k])
    m_s, M_s = report.m_star, report.M_star
    lows = [-1.0 + margin]
    highs = [1.0 - margin]
    ok = m_s >= 0 and mw >= 0 and Mw <= M_tilde
    den = M_tilde - m_s
    if den > 0:
        lows.append(-mw / den)
        highs.append((M_tilde - Mw) / den)
    else:
        ok = False
    if M_s > 0:
        lows.append((Mw - M_tilde) / M_s)
        highs.append(mw / M_s)
    elif M_s < 0:
        ok = False
    lo, hi = max(lows), min(highs)
    return AdmissibleInterval(w, lo, hi, lo <= hi, ok)


def admissible_intervals(report: ExtremaReport, M_tilde: float, margin: float = MARGIN) -> list[AdmissibleInterval]:
    return [admissible_interval(report, report.word(k), M_tilde, margin) for k in range(3**report.N)]


def choose_alpha(intervals, pick: str = "midpoint", cap: float | None = None) -> ScalingFamily:
    """Constant-per-word family chosen inside each interval.

    ``pick`` is ``"midpoint"``, ``"lo"`` or ``"hi"``; ``cap`` further
    restricts every ``|alpha_w|``.
    """
    N = len(intervals[0].word)
    table = {}
    for iv in intervals:
        lo, hi = iv.lo, iv.hi
        if cap is not None:
            lo, hi = max(lo, -cap), min(hi, cap)
        if lo > hi:
            raise InfeasibleError(f"no admissible alpha for word {iv.word!r}")
        table[iv.word] = {"midpoint": 0.5 * (lo + hi), "lo": lo, "hi": hi}[pick]
    return ScalingFamily.from_table(table, N)


@dataclass(frozen=True)
class DominationReport:
    direction: str
    hypothesis: bool
    conclusion: bool
    max_excess: float


def check_domination(result: FractalResult, direction: str = "below", tol: float = 1e-12) -> DominationReport:
    """Check the one-sided comparison of ``f^alpha`` with ``f``.

    ``"below"``: hypothesis ``alpha >= 0`` and ``b >= f``, conclusion
    ``f^alpha <= f``.  ``"above"``: ``alpha >= 0`` and ``b <= f`` give
    ``f^alpha >= f``.  Both flags are evaluated on the samples regardless of
    each other.
    """
    if direction not in ("below", "above"):
        raise ValueError("direction must be 'below' or 'above'")
    a_min = float(np.min(result.alpha.values_at(result.level - result.N)))
    f = result.f.values
    b = result.b.values
    F = result.values.values
    sign = 1.0 if direction == "below" else -1.0
    hyp = a_min >= 0 and bool(np.all(sign * (b - f) >= -tol))
    excess = float(np.max(sign * (F - f)))
    return DominationReport(direction, hyp, excess <= tol, excess)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Piecewise-harmonic approximant ``h`` and its fractal perturbation."""

    h: SGFunction
    coarse_level: int
    interpolation_error: float
    alpha_bound: float
    result: FractalResult
    error: float  # ||f - h^alpha|| on the samples
    eps: float

    @property
    def h_alpha(self) -> SGFunction:
        return self.result.values


def _coarse_interpolant(fv: np.ndarray, m: int, target: float):
    for mc in range(m + 1):
        g = harmonic_refine(fv, mc, m)
        err = float(np.max(np.abs(fv - g)))
        if err < target:
            return mc, g, err
    return m, fv.copy(), 0.0


def positive_perturbation(f, eps: float, m: int, N: int = 1, pick: str = "midpoint") -> Perturbation:
    """Non-negative fractal approximant within ``eps`` of a non-negative ``f``.

    ``g`` is the coarsest piecewise-harmonic interpolant with
    ``||f - g|| < eps/4``; ``h = g + eps/4``; ``b`` is the harmonic function
    with ``h``'s corner values; each ``alpha_w`` lies in the range-preserving
    interval for ``[0, max h]`` and below ``eps / (eps + 2 ||h - b||)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m % N:
        raise LevelError(f"level {m} must be a multiple of N={N}")
    graph = build_level_graph(m)
    fv = as_values(f, graph)
    if fv.min() < -1e-12:
        raise ValueError("f must be non-negative on the samples")
    mc, g, err = _coarse_interpolant(fv, m, eps / 4.0)
    h = g + eps / 4.0
    b = harmonic_refine(h[:3], 0, m)
    hb = float(np.max(np.abs(h - b)))
    a_bound = eps / (eps + 2.0 * hb) if hb > 0 else 1.0
    report = compute_extrema(h, b, N, m)
    intervals = admissible_intervals(report, float(h.max()))
    alpha = choose_alpha(intervals, pick, cap=a_bound)
    res = construct(FractalSystem(SGFunction(graph, h), alpha, m, SGFunction(graph, b)))
    error = float(np.max(np.abs(fv - res.values.values)))
    return Perturbation(SGFunction(graph, h), mc, err, a_bound, res, error, eps)


def above_perturbation(f, eps: float, m: int, N: int = 1) -> Perturbation:
    """Fractal approximant lying above ``f`` and within ``eps`` of it.

    ``h = g + eps/4`` as in :func:`positive_perturbation`; the base is
    ``b = h - (eps/4) * bump`` (so ``b <= h`` and ``b = h`` on ``V_0``) and
    ``alpha = eps / (eps + 2 ||h - b||)`` is constant and non-negative.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m % N:
        raise LevelError(f"level {m} must be a multiple of N={N}")
    graph = build_level_graph(m)
    fv = as_values(f, graph)
    mc, g, err = _coarse_interpolant(fv, m, eps / 4.0)
    h = g + eps / 4.0
    b = h - (eps / 4.0) * sample(bump, graph).values
    hb = float(np.max(np.abs(h - b)))
    a = eps / (eps + 2.0 * hb) if hb > 0 else 0.0
    res = construct(
        FractalSystem(SGFunction(graph, h), ScalingFamily.constant(a, N), m, SGFunction(graph, b))
    )
    error = float(np.max(np.abs(fv - res.values.values)))
    return Perturbation(SGFunction(graph, h), mc, err, a, res, error, eps)
