"""Alpha-fractal functions on the gasket.

``f^alpha`` solves ``f^a(L_w s) = f(L_w s) + alpha_w(s) * (f^a(s) - b(s))`` for
every word ``w`` of length ``N``.  Because the right-hand side only needs
``f^a`` on ``V_{(k-1)N}`` to produce ``f^a`` on ``V_{kN}``, the function is
computed exactly on ``V_M`` by a finite cascade; no fixed-point iteration is
involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .energy import harmonic_refine
from .errors import JoinUpError, JunctionError, LevelError, ScalingBoundError
from .gasket import (
    SGFunction,
    as_values,
    build_level_graph,
    check_word,
    n_vertices,
    subcell_vertex_map,
    word_to_index,
    words,
)

TAU_JUNCTION = 1e-9
TAU_JOIN = 1e-10


@dataclass(frozen=True)
class ScalingFamily:
    """Vertical scaling factors ``alpha_w`` for words of length ``N``.

    Either a constant per word (``table``) or one function ``alpha(x, y)``
    shared by all words (``function``).
    """

    N: int
    table: tuple | None = None
    function: Callable | None = field(default=None, compare=False)
    holder: tuple | None = None  # (K_alpha, sigma_alpha)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("word length N must be at least 1")
        if (self.table is None) == (self.function is None):
            raise ValueError("give exactly one of table or function")
        if self.table is not None and len(self.table) != 3**self.N:
            raise ValueError(f"table needs {3**self.N} entries, got {len(self.table)}")

    @classmethod
    def constant(cls, value: float, N: int = 1) -> "ScalingFamily":
        return cls(N, table=(float(value),) * 3**N, holder=(0.0, 1.0))

    @classmethod
    def from_table(cls, table: Mapping[str, float], N: int) -> "ScalingFamily":
        vals = [None] * 3**N
        for word, v in table.items():
            w = check_word(word)
            if len(w) != N:
                raise ValueError(f"word {w!r} does not have length {N}")
            vals[word_to_index(w)] = float(v)
        missing = [w for w, v in zip(words(N), vals) if v is None]
        if missing:
            raise ValueError(f"alpha table is missing words {missing[:5]}")
        return cls(N, table=tuple(vals), holder=(0.0, 1.0))

    @classmethod
    def from_function(cls, fn: Callable, N: int = 1, holder=None) -> "ScalingFamily":
        return cls(N, function=fn, holder=holder)

    @property
    def is_constant(self) -> bool:
        return self.table is not None

    def values_at(self, src_level: int) -> np.ndarray:
        """``alpha_w(s)`` for every word ``w`` and every ``s`` in ``V_src_level``."""
        n_src = n_vertices(src_level)
        if self.table is not None:
            return np.repeat(np.asarray(self.table, dtype=float)[:, None], n_src, axis=1)
        g = build_level_graph(src_level)
        row = as_values(self.function, g)
        return np.repeat(row[None, :], 3**self.N, axis=0)

    def word_norms(self, src_level: int = 0) -> np.ndarray:
        """Sampled ``||alpha_w||_inf`` per word (exact for constant tables)."""
        if self.table is not None:
            return np.abs(np.asarray(self.table, dtype=float))
        return np.max(np.abs(self.values_at(src_level)), axis=1)

    def sup_norm(self, src_level: int = 0) -> float:
        return float(np.max(self.word_norms(src_level)))

    def scaled(self, c: float) -> "ScalingFamily":
        if self.table is not None:
            return ScalingFamily(self.N, table=tuple(c * a for a in self.table), holder=self.holder)
        fn = self.function
        return ScalingFamily(self.N, function=lambda x, y: c * np.asarray(fn(x, y)), holder=None)


def parse_alpha_table(text: str, N: int) -> ScalingFamily:
    """Read ``word value`` lines (``#`` comments allowed)."""
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"alpha table line {lineno}: expected 'word value'")
        table[parts[0]] = float(parts[1])
    return ScalingFamily.from_table(table, N)


@dataclass(frozen=True)
class FractalSystem:
    """Data defining ``f^alpha``.

    ``b`` may be a callable, an SGFunction or ``"harmonic"`` (the harmonic
    function with the same boundary values as ``f``).
    """

    f: object
    alpha: ScalingFamily
    level: int
    b: object = "harmonic"

    @property
    def N(self) -> int:
        return self.alpha.N


@dataclass(frozen=True, eq=False)
class FractalResult:
    values: SGFunction
    f: SGFunction
    b: SGFunction
    alpha: ScalingFamily
    junction_discrepancy: float
    sup_distance: float

    @property
    def level(self) -> int:
        return self.values.level

    @property
    def N(self) -> int:
        return self.alpha.N


def _resolve_base(b, f_vals: np.ndarray, level: int) -> np.ndarray:
    if isinstance(b, str):
        if b != "harmonic":
            raise ValueError(f"unknown base operator {b!r}")
        return harmonic_refine(f_vals[:3], 0, level)
    return as_values(b, build_level_graph(level))


def construct(system: FractalSystem, impl=None) -> FractalResult:
    """Sample ``f^alpha`` on ``V_M`` by the exact level cascade.

    Raises
    ------
    JoinUpError
        ``b`` and ``f`` disagree at a corner.
    ScalingBoundError
        Some sampled ``|alpha_w| >= 1``.
    JunctionError
        Candidates at a shared vertex disagree by more than ``TAU_JUNCTION``.
    """
    N, M = system.N, system.level
    if M < N or M % N:
        raise LevelError(f"level {M} must be a positive multiple of N={N}")
    graph = build_level_graph(M)
    f_vals = as_values(system.f, graph)
    b_vals = _resolve_base(system.b, f_vals, M)
    gap = np.max(np.abs(b_vals[:3] - f_vals[:3]))
    if gap > TAU_JOIN:
        raise JoinUpError(f"b differs from f at a corner by {gap:.3e}")
    a_norm = system.alpha.sup_norm(M - N)
    if a_norm >= 1.0:
        raise ScalingBoundError(f"sup |alpha| = {a_norm} is not below 1")

    out = np.zeros(graph.n_vertices)
    filled = np.zeros(graph.n_vertices, dtype=np.uint8)
    nN = n_vertices(N)
    out[:nN] = f_vals[:nN]
    filled[:nN] = 1
    worst = 0.0
    for k in range(2, M // N + 1):
        src = (k - 1) * N
        targets = subcell_vertex_map(k * N, N)
        alpha = system.alpha.values_at(src)
        disc = kernels.cascade_stage(out, filled, targets, f_vals, alpha, b_vals, impl=impl)
        worst = max(worst, disc)
        if disc > TAU_JUNCTION:
            raise JunctionError(f"junction candidates disagree by {disc:.3e} at stage {k}", disc)
    if not filled.all():
        raise RuntimeError("cascade left vertices unset")
    return FractalResult(
        values=SGFunction(graph, out),
        f=SGFunction(graph, f_vals),
        b=SGFunction(graph, b_vals),
        alpha=system.alpha,
        junction_discrepancy=worst,
        sup_distance=float(np.max(np.abs(out - f_vals))),
    )


def fractal_operator(f, alpha: ScalingFamily, level: int, base="harmonic", impl=None) -> FractalResult:
    """``F^alpha(f)`` with ``b = L f``; ``base="harmonic"`` is linear with norm one."""
    return construct(FractalSystem(f, alpha, level, base), impl=impl)


def invert_operator(g: SGFunction, alpha: ScalingFamily, base="harmonic") -> SGFunction:
    """Recover ``f`` from ``g = F^alpha(f)`` on ``V_M``.

    Solves the self-referential equation for ``f``:
    ``f(L_w s) = g(L_w s) - alpha_w(s) (g(s) - b(s))`` with ``b = L f``;
    for the harmonic base ``L f = L g`` since both agree on ``V_0``.
    """
    M, N = g.level, alpha.N
    if M < N:
        raise LevelError(f"level {M} is below N={N}")
    a_norm = alpha.sup_norm(M - N)
    if a_norm >= 1.0:
        raise ScalingBoundError(f"sup |alpha| = {a_norm} is not below 1")
    gv = g.values
    b_vals = _resolve_base(base, gv, M)
    targets = subcell_vertex_map(M, N)
    n_src = targets.shape[1]
    a = alpha.values_at(M - N)
    cand = gv[targets] - a * (gv[:n_src] - b_vals[:n_src])[None, :]
    out = np.empty_like(gv)
    out[targets.ravel()] = cand.ravel()
    return SGFunction(g.graph, out)


@dataclass(frozen=True)
class ErrorBound:
    lhs: float
    rhs: float
    holds: bool


def error_bound(result: FractalResult) -> ErrorBound:
    """Check ``||f^a - f|| <= ||a|| / (1 - ||a||) * ||f - b||`` on ``V_M``."""
    a = result.alpha.sup_norm(result.level - result.N)
    lhs = result.sup_distance
    rhs = a / (1.0 - a) * float(np.max(np.abs(result.f.values - result.b.values)))
    return ErrorBound(lhs, rhs, lhs <= rhs + 1e-12)


def operator_sandwich(result: FractalResult, base_norm: float = 1.0) -> tuple[float, float]:
    """``(||f - F f||, ||a|| ||L|| ||f|| + ||a|| ||F f||)`` on ``V_M``."""
    a = result.alpha.sup_norm(result.level - result.N)
    lhs = float(np.max(np.abs(result.f.values - result.values.values)))
    rhs = a * base_norm * result.f.sup_norm() + a * result.values.sup_norm()
    return lhs, rhs


def round_up_level(level: int, N: int) -> int:
    """Smallest multiple of ``N`` that is at least ``level`` (and at least ``N``)."""
    return max(N, -(-level // N) * N)
