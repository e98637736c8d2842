"""Graph energy, graph Laplacian, harmonic and multiharmonic functions.

Sign convention: ``Delta_m f(x) = sum_{y ~ x} (f(y) - f(x))`` and the
renormalised Laplacian is ``(3/2) 5**m Delta_m``.  With lumped weights
``(2/3) 3**-m`` at interior vertices this is the same as the weak form
``E_m(u, v) = -Q_m(g v)`` for ``v`` vanishing on ``V_0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import LevelError, RankDeficiencyError, SolverError
from .gasket import (
    SGFunction,
    as_values,
    build_level_graph,
    max_level,
    n_vertices,
)

TAU_LIN = 1e-10
DIRECT_LIMIT = 10_000
MAX_ORDER = 4


def _level_of(f: SGFunction, m: int | None) -> int:
    if m is None:
        return f.level
    if m < 0 or m > f.level:
        raise LevelError(f"level {m} is not available for a level-{f.level} function")
    return m


def graph_energy(f: SGFunction, m: int | None = None) -> float:
    """``E_m(f) = (5/3)**m * sum over edges of Gamma_m of (f(t) - f(z))**2``."""
    m = _level_of(f, m)
    g = build_level_graph(m)
    v = f.values[: g.n_vertices]
    d = v[g.edges[:, 0]] - v[g.edges[:, 1]]
    return float((5.0 / 3.0) ** m * np.sum(d * d))


def bilinear_energy(f: SGFunction, h: SGFunction, m: int | None = None) -> float:
    m = _level_of(f, m)
    g = build_level_graph(m)
    a = f.values[: g.n_vertices]
    b = h.values[: g.n_vertices]
    e = g.edges
    return float((5.0 / 3.0) ** m * np.sum((a[e[:, 0]] - a[e[:, 1]]) * (b[e[:, 0]] - b[e[:, 1]])))


def holder_envelope(n: int, K: float) -> float:
    """Lower envelope ``3 K 5**n / 2**(2n+1)`` for lower Hoelder functions."""
    return 3.0 * K * 5.0**n / 2.0 ** (2 * n + 1)


@dataclass(frozen=True)
class EnergySequence:
    values: tuple
    envelope: tuple | None = None
    K: float | None = None
    sigma: float | None = None

    @property
    def levels(self) -> range:
        return range(len(self.values))

    @property
    def ratios(self) -> tuple:
        v = self.values
        return tuple(v[i + 1] / v[i] if v[i] > 0 else float("nan") for i in range(len(v) - 1))

    @property
    def nondecreasing(self) -> bool:
        v = self.values
        return all(v[i] <= v[i + 1] + 1e-12 * max(1.0, abs(v[i + 1])) for i in range(len(v) - 1))

    @property
    def envelope_holds(self) -> bool | None:
        if self.envelope is None:
            return None
        return all(e <= v * (1 + 1e-12) + 1e-15 for e, v in zip(self.envelope, self.values))

    @property
    def status(self) -> str:
        """``"divergent"`` when the increments ``E_m - E_{m-1}`` stop shrinking."""
        v = self.values
        if len(v) < 3:
            return "undetermined"
        d1 = v[-1] - v[-2]
        d0 = v[-2] - v[-3]
        scale = max(abs(v[-1]), 1e-300)
        if d1 <= 1e-12 * scale:
            return "convergent"
        if d0 > 0 and d1 / d0 >= 1.0 - 1e-9:
            return "divergent"
        return "convergent"

    def rows(self):
        for m, e in enumerate(self.values):
            env = None if self.envelope is None else self.envelope[m]
            yield m, e, env


def energy_sequence(f, max_m: int, K: float | None = None, sigma: float | None = None) -> EnergySequence:
    """Energies ``E_0 .. E_max_m`` of ``f`` (callable or SGFunction).

    When a lower-Hoelder constant ``K`` is supplied the envelope
    ``3 K 5**n / 2**(2n+1)`` is attached for comparison.
    """
    if max_m > max_level():
        raise LevelError(f"level {max_m} exceeds maximum {max_level()}")
    g = build_level_graph(max_m)
    sf = f if isinstance(f, SGFunction) and f.level == max_m else SGFunction(g, as_values(f, g))
    vals = tuple(graph_energy(sf, m) for m in range(max_m + 1))
    env = None
    if K is not None:
        env = tuple(holder_envelope(n, K) for n in range(max_m + 1))
    return EnergySequence(vals, env, K, sigma)


# --- harmonic extension ----------------------------------------------------


def harmonic_refine(coarse: np.ndarray, from_level: int, to_level: int) -> np.ndarray:
    """Extend values on ``V_from_level`` to ``V_to_level`` cell by cell.

    Each new midpoint between corners with values ``a_i, a_j`` (opposite
    ``a_k``) receives ``(2 a_i + 2 a_j + a_k) / 5``.
    """
    if to_level < from_level:
        raise LevelError("target level below source level")
    out = np.empty(n_vertices(to_level))
    out[: n_vertices(from_level)] = coarse[: n_vertices(from_level)]
    for j in range(from_level + 1, to_level + 1):
        c = build_level_graph(j - 1).cells
        a1, a2, a3 = out[c[:, 0]], out[c[:, 1]], out[c[:, 2]]
        new = np.column_stack(
            [
                (2 * a1 + 2 * a2 + a3) / 5.0,
                (2 * a1 + a2 + 2 * a3) / 5.0,
                (a1 + 2 * a2 + 2 * a3) / 5.0,
            ]
        )
        out[n_vertices(j - 1) : n_vertices(j)] = new.ravel()
    return out


def harmonic_extend(boundary, m: int) -> SGFunction:
    """Harmonic function with values ``boundary`` at ``p1, p2, p3``, sampled on ``V_m``."""
    g = build_level_graph(m)
    b = np.asarray(boundary, dtype=float)
    if b.shape != (3,):
        raise ValueError("boundary must have three values")
    return SGFunction(g, harmonic_refine(b, 0, m))


def piecewise_harmonic(f, coarse_level: int, m: int) -> SGFunction:
    """Interpolant that is harmonic on every level-``coarse_level`` cell.

    Agrees with ``f`` on ``V_coarse_level``; sampled on ``V_m``.
    """
    gc = build_level_graph(coarse_level)
    build_level_graph(m)
    vals = as_values(f, gc)
    return SGFunction(build_level_graph(m), harmonic_refine(vals, coarse_level, m))


# --- Laplacians ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InteriorFunction:
    """Values on ``V_m \\ V_0`` (ids ``3 .. n-1``)."""

    level: int
    values: np.ndarray

    @property
    def ids(self) -> np.ndarray:
        return build_level_graph(self.level).interior

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def graph_laplacian(f: SGFunction, m: int | None = None) -> InteriorFunction:
    """``Delta_m f(x) = sum_{y ~_m x} (f(y) - f(x))`` on interior vertices."""
    m = _level_of(f, m)
    g = build_level_graph(m)
    v = f.values[: g.n_vertices]
    lap = g.adjacency @ v - 4.0 * v
    return InteriorFunction(m, lap[3:])


def pointwise_laplacian(f: SGFunction, m: int) -> InteriorFunction:
    """Renormalised graph Laplacian ``(3/2) 5**m Delta_m f`` on ``V_m \\ V_0``."""
    if m >= f.level:
        raise LevelError(f"pointwise Laplacian needs m < {f.level}, got {m}")
    lap = graph_laplacian(f, m)
    return InteriorFunction(m, 1.5 * 5.0**m * lap.values)


@lru_cache(maxsize=16)
def _interior_system(m: int):
    g = build_level_graph(m)
    A = g.adjacency - 4.0 * sparse.identity(g.n_vertices, format="csr")
    A = A.tocsr()
    A_ii = (-A[3:, 3:]).tocsc()
    A_ib = A[3:, :3].toarray()
    solve = splinalg.factorized(A_ii) if A_ii.shape[0] <= DIRECT_LIMIT else None
    return A_ii, A_ib, solve


def solve_poisson(g_fn, boundary, m: int) -> SGFunction:
    """Solve ``(3/2) 5**m Delta_m u = g`` on ``V_m \\ V_0`` with ``u = boundary`` on ``V_0``.

    Parameters
    ----------
    g_fn : SGFunction, callable or array
        Right-hand side; only interior values are used.
    boundary : three floats
    m : int
        Level; at least 1.

    Raises
    ------
    SolverError
        If the normwise backward error exceeds ``TAU_LIN``.
    """
    if m < 1:
        raise LevelError("Poisson problem needs m >= 1")
    graph = build_level_graph(m)
    gv = as_values(g_fn, graph)
    ub = np.asarray(boundary, dtype=float)
    A_ii, A_ib, solve = _interior_system(m)
    # -A_ii u_I = -(2/3) 5^-m g_I + A_ib u_B
    rhs = -(2.0 / 3.0) * 5.0 ** (-m) * gv[3:] + A_ib @ ub
    if solve is not None:
        u_i = solve(rhs)
    else:
        u_i, info = splinalg.cg(A_ii, rhs, rtol=1e-13, atol=0.0, maxiter=20 * A_ii.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradients did not converge (info={info})")
    resid = A_ii @ u_i - rhs
    denom = 8.0 * np.max(np.abs(u_i), initial=0.0) + np.max(np.abs(rhs), initial=0.0)
    backward = float(np.max(np.abs(resid), initial=0.0) / denom) if denom > 0 else 0.0
    if backward > TAU_LIN:
        raise SolverError(f"Poisson residual {backward:.3e} exceeds {TAU_LIN}")
    return SGFunction(graph, np.concatenate([ub, u_i]))


# --- multiharmonic spaces ----------------------------------------------------


@dataclass(frozen=True)
class MultiharmonicBasis:
    """Basis ``f_{j,i}`` of ``H_k`` sampled on ``V_m``, ordered ``j``-major."""

    order: int
    level: int
    functions: tuple = field(repr=False)
    rank: int = 0
    condition: float = 1.0

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, idx):
        return self.functions[idx]

    def matrix(self) -> np.ndarray:
        return np.column_stack([f.values for f in self.functions])


def numerical_rank(columns: np.ndarray, rtol: float = 1e-10) -> tuple[int, float]:
    """Rank and condition number of the column-normalised sample matrix."""
    norms = np.max(np.abs(columns), axis=0)
    norms[norms == 0] = 1.0
    s = np.linalg.svd(columns / norms, compute_uv=False)
    rank = int(np.sum(s > rtol * s[0])) if len(s) and s[0] > 0 else 0
    cond = float(s[0] / s[-1]) if len(s) and s[-1] > 0 else float("inf")
    return rank, cond


def multiharmonic_basis(k: int, m: int) -> MultiharmonicBasis:
    """Jet-style basis of ``H_k``: harmonic ``e_i`` then repeated Poisson solves.

    ``f_{0,i}`` is harmonic with boundary ``e_i``; ``f_{j,i}`` solves the
    Poisson problem with right-hand side ``f_{j-1,i}`` and zero boundary.
    """
    if not 0 <= k <= MAX_ORDER:
        raise ValueError(f"order k must be in 0..{MAX_ORDER}")
    if m < 3:
        raise LevelError("multiharmonic basis needs m >= 3")
    funcs = [harmonic_extend(np.eye(3)[i], m) for i in range(3)]
    for j in range(1, k + 1):
        prev = funcs[3 * (j - 1) : 3 * j]
        funcs.extend(solve_poisson(p, (0.0, 0.0, 0.0), m) for p in prev)
    rank, cond = numerical_rank(np.column_stack([f.values for f in funcs]))
    if rank < len(funcs):
        raise RankDeficiencyError(f"basis of H_{k} has rank {rank} < {len(funcs)}", cond)
    return MultiharmonicBasis(k, m, tuple(funcs), rank, cond)
