"""Oscillations, box counting and dimension bounds for graphs over the gasket."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateFitError, LevelError, RefinementError
from .fractal import FractalResult
from .gasket import SQRT3, SGFunction, as_values, build_level_graph, max_level, subcell_vertex_map

LOG2_3 = math.log(3) / math.log(2)
HARMONIC_EXPONENT = math.log(5 / 3) / math.log(2)
DEFAULT_Q = 3
AXIS_LIMIT = 1 << 21


def _cell_osc(values: np.ndarray, level: int, depth: int) -> np.ndarray:
    lo, hi = kernels.cell_ranges(values, subcell_vertex_map(level, depth))
    return hi - lo


@dataclass(frozen=True, eq=False)
class OscillationTable:
    depth: int
    q: int
    osc: np.ndarray  # one entry per level-`depth` cell, lexicographic

    @property
    def total(self) -> float:
        return float(self.osc.sum())

    def child_bounded(self, finer: "OscillationTable") -> bool:
        """True if every child cell in ``finer`` oscillates no more than its parent."""
        if finer.depth != self.depth + 1:
            raise ValueError("tables must be one level apart")
        parent = np.repeat(self.osc, 3)
        return bool(np.all(finer.osc <= parent + 1e-15))


def oscillation_table(f: SGFunction, n: int) -> OscillationTable:
    """Sampled ``max - min`` of ``f`` on every level-``n`` cell.

    ``f`` must be sampled at least two levels below the cells.
    """
    q = f.level - n
    if n < 0 or q < 2:
        raise RefinementError(f"oscillations at depth {n} need samples at level >= {n + 2}, got {f.level}")
    return OscillationTable(n, q, _cell_osc(f.values, f.level, n))


def cube_indices(f: SGFunction, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer cube coordinates of the sampled graph points for mesh ``2**-n``.

    Cubes are half-open and anchored at ``(0, 0, min f)``.  The ``x`` index is
    exact integer arithmetic on the lattice coordinates.
    """
    L = f.level
    g = f.graph
    a = g.lattice[:, 0].astype(np.int64)
    b = g.lattice[:, 1].astype(np.int64)
    i = ((2 * a + b) << n) >> (L + 1)
    j = np.floor(b * SQRT3 * 2.0 ** (n - L - 1)).astype(np.int64)
    z = f.values - f.values.min()
    k = np.floor(z * 2.0**n).astype(np.int64)
    return i, j, k


def box_count(f: SGFunction, n: int) -> int:
    """Number of ``2**-n`` cubes met by the sampled graph of ``f``."""
    if f.level < n + 2:
        raise RefinementError(f"box counting at depth {n} needs samples at level >= {n + 2}")
    i, j, k = cube_indices(f, n)
    if k.max(initial=0) >= AXIS_LIMIT:
        raise ValueError(f"vertical range too large for depth {n}")
    return kernels.count_boxes(i, j, k)


@dataclass(frozen=True, eq=False)
class DimensionReport:
    depths: tuple
    counts: tuple
    lower_env: tuple  # 2^n sum OSC
    upper_env: tuple  # 2 * 3^n + 2^n sum OSC
    slope: float
    intercept: float
    residuals: tuple
    q: int
    level: int
    lower_bound: float = LOG2_3
    upper_bound: float | None = None

    @property
    def sandwich_holds(self) -> bool:
        return all(lo <= c <= hi for lo, c, hi in zip(self.lower_env, self.counts, self.upper_env))

    def rows(self):
        return list(zip(self.depths, self.counts, self.lower_env, self.upper_env))

    def to_dict(self) -> dict:
        return {
            "depths": list(self.depths),
            "counts": list(self.counts),
            "lower_env": list(self.lower_env),
            "upper_env": list(self.upper_env),
            "slope": self.slope,
            "intercept": self.intercept,
            "residuals": list(self.residuals),
            "q": self.q,
            "level": self.level,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "sandwich_holds": self.sandwich_holds,
        }


def estimate_dimension(f, n_range=(3, 8), q: int = DEFAULT_Q, upper_bound: float | None = None) -> DimensionReport:
    """Fit the slope of ``log2 N_delta`` against ``n`` over ``n_range`` (inclusive).

    ``f`` is sampled once at level ``max(n_range) + q``; an SGFunction at a
    finer level is restricted to that level.
    """
    n_lo, n_hi = n_range
    if n_hi - n_lo + 1 < 3:
        raise DegenerateFitError("need at least three depths for a slope fit")
    if n_lo < 2 or q < 2:
        raise RefinementError("depths start at 2 and need q >= 2")
    level = n_hi + q
    if level > max_level():
        raise LevelError(f"sampling level {level} exceeds maximum {max_level()}")
    graph = build_level_graph(level)
    sf = SGFunction(graph, as_values(f, graph))
    depths = tuple(range(n_lo, n_hi + 1))
    counts, lows, highs = [], [], []
    for n in depths:
        counts.append(box_count(sf, n))
        s = 2.0**n * oscillation_table(sf, n).total
        lows.append(s)
        highs.append(2.0 * 3**n + s)
    x = np.array(depths, dtype=float)
    y = np.log2(np.array(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DimensionReport(
        depths, tuple(counts), tuple(lows), tuple(highs), float(slope), float(intercept),
        tuple(float(r) for r in resid), q, level, LOG2_3, upper_bound,
    )


# --- theoretical bounds ------------------------------------------------------


@dataclass(frozen=True)
class HolderData:
    K_f: float
    sigma_f: float
    K_b: float
    sigma_b: float
    K_alpha: float
    sigma_alpha: float
    alpha_norms: tuple = field(default=())  # ||alpha_w|| per word of length N

    def __post_init__(self):
        for s in (self.sigma_f, self.sigma_b, self.sigma_alpha):
            if not 0 < s <= 1:
                raise ValueError(f"Hoelder exponent {s} is not in (0, 1]")
        if min(self.K_f, self.K_b, self.K_alpha) < 0:
            raise ValueError("Hoelder constants must be non-negative")
        if self.alpha_norms and self.alpha_max >= 1:
            raise ValueError("alpha_max must be below 1")

    @property
    def sigma(self) -> float:
        return min(self.sigma_f, self.sigma_b, self.sigma_alpha)

    @property
    def alpha_min(self) -> float:
        return float(min(self.alpha_norms))

    @property
    def alpha_max(self) -> float:
        return float(max(self.alpha_norms))


@dataclass(frozen=True)
class DimensionBounds:
    lower: float
    upper: float | None
    regime: str  # "1", "2" or "not applicable"

    @property
    def consistent(self) -> bool:
        return self.upper is None or self.upper >= self.lower


def dimension_bounds(holder: HolderData, N: int, regime: str = "auto") -> DimensionBounds:
    """Lower bound ``log2 3`` and the regime-dependent upper bound.

    Regime 1 needs ``alpha_min > 2**(-N sigma)`` and gives
    ``1 + log(sum ||alpha_w||) / (N log 2)``; regime 2 needs
    ``2**(-N sigma) < alpha_max < 1`` and gives
    ``1 + log(3 alpha_max) / (N log 2)``.  With ``regime="auto"`` the smaller
    applicable upper bound is returned.
    """
    if regime not in ("auto", "1", "2"):
        raise ValueError("regime must be 'auto', '1' or '2'")
    thr = 2.0 ** (-N * holder.sigma)
    options = {}
    if holder.alpha_min > thr:
        gamma = float(sum(holder.alpha_norms))
        options["1"] = 1.0 + math.log(gamma) / (N * math.log(2))
    if thr < holder.alpha_max < 1:
        options["2"] = 1.0 + math.log(3 * holder.alpha_max) / (N * math.log(2))
    if regime != "auto":
        options = {k: v for k, v in options.items() if k == regime}
    if not options:
        return DimensionBounds(LOG2_3, None, "not applicable")
    key = min(options, key=lambda k: (options[k], k))
    return DimensionBounds(LOG2_3, options[key], key)


def holder_constant(f: SGFunction, sigma: float, depths=None) -> float:
    """Smallest ``K`` with ``OSC(cell) <= K 2**(-j sigma)`` on sampled cells.

    ``depths`` defaults to every cell depth ``0 .. f.level``.
    """
    depths = range(f.level + 1) if depths is None else depths
    return max(float(_cell_osc(f.values, f.level, j).max()) * 2.0 ** (j * sigma) for j in depths)


def holder_data(result: FractalResult, sigma: float = HARMONIC_EXPONENT) -> HolderData:
    """Sampled Hoelder data for a constructed system at a common exponent."""
    K_f = holder_constant(result.f, sigma)
    K_b = holder_constant(result.b, sigma)
    alpha = result.alpha
    if alpha.is_constant:
        K_a = 0.0
    else:
        row = alpha.values_at(result.level)[0]
        K_a = holder_constant(SGFunction(result.values.graph, row), sigma)
    norms = tuple(float(v) for v in alpha.word_norms(result.level - result.N))
    return HolderData(K_f, sigma, K_b, sigma, K_a, sigma, norms)


@dataclass(frozen=True)
class OscRecursionReport:
    rows: tuple  # (m, max lhs, max violation, number of violations)
    slack: float

    @property
    def max_violation(self) -> float:
        return max(r[2] for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(r[3] for r in self.rows)


def verify_osc_recursion(result: FractalResult, holder: HolderData, m_range, slack: float = 1e-9) -> OscRecursionReport:
    """Compare each depth-``mN`` cell oscillation of ``f^alpha`` with its bound.

    For the cell ``L_{w1} L_{w2..wm}(SG)`` the bound is
    ``||alpha_w1|| OSC(L_{w2..wm}(SG)) + (K_b ||alpha_w1|| + K_alpha (||b|| + ||f^alpha||)) / 2**(N sigma (m-1)) + K_f / 2**(N sigma)``,
    with each constant paired with its own exponent.
    """
    N, L = result.N, result.level
    F = result.values.values
    norms = np.asarray(result.alpha.word_norms(L - N))
    b_sup = result.b.sup_norm()
    F_sup = result.values.sup_norm()
    rows = []
    for m in m_range:
        d = m * N
        if m < 1 or d > L:
            raise LevelError(f"m={m} needs cells of depth {d} within level {L}")
        lhs = _cell_osc(F, L, d)
        tail = _cell_osc(F, L, d - N)
        k = np.arange(3**d)
        head = k // 3 ** (d - N)
        a = norms[head]
        rhs = (
            a * tail[k % 3 ** (d - N)]
            + holder.K_b * a / 2.0 ** (N * holder.sigma_b * (m - 1))
            + holder.K_alpha * (b_sup + F_sup) / 2.0 ** (N * holder.sigma_alpha * (m - 1))
            + holder.K_f / 2.0 ** (N * holder.sigma_f)
        )
        gap = lhs - rhs
        rows.append((m, float(lhs.max()), float(gap.max()), int(np.sum(gap > slack))))
    return OscRecursionReport(tuple(rows), slack)
