"""Best uniform and one-sided approximation from a finite basis.

Both problems are discretised on the vertices ``V_m`` and solved as linear
programs.  The LPs handed to the simplex solver are the duals of the natural
formulations (fewer rows, feasible origin); the coefficients are read off the
dual multipliers and the error is then recomputed from the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import numerical_rank
from .errors import DegenerateFitError, InfeasibleError, RankDeficiencyError, SolverError
from .fractal import ScalingFamily, fractal_operator
from .gasket import SGFunction, as_values, build_level_graph, quadrature_weights
from .lp import LinearProgram, solve_lp

TAU_ACTIVE = 1e-9


@dataclass(frozen=True, eq=False)
class ApproxResult:
    kind: str  # "chebyshev" or "below"
    level: int
    coefficients: np.ndarray
    approximant: SGFunction
    error: float
    active: int  # samples where the constraint is tight
    objective: float


def _columns(basis, graph) -> np.ndarray:
    cols = [as_values(phi, graph) for phi in basis]
    if not cols:
        raise DegenerateFitError("empty basis")
    return np.column_stack(cols)


def _scaled(Phi: np.ndarray):
    s = np.max(np.abs(Phi), axis=0)
    if np.any(s == 0):
        raise DegenerateFitError("basis contains a function that vanishes on the samples")
    rank, cond = numerical_rank(Phi)
    if rank < Phi.shape[1]:
        raise RankDeficiencyError(f"basis has rank {rank} < {Phi.shape[1]} on the samples", cond)
    return Phi / s, s


def best_chebyshev(f, basis, m: int) -> ApproxResult:
    """Minimise ``max_{V_m} |f - sum c_i phi_i|`` over ``c``.

    The LP solved is ``max f.(u - v)`` subject to ``Phi^T (u - v) = 0`` and
    ``sum(u + v) <= 1`` with ``u, v >= 0``; its multipliers on the equality
    rows are the coefficients and the one on the last row is the error.
    """
    graph = build_level_graph(m)
    fv = as_values(f, graph)
    Phi, scale = _scaled(_columns(basis, graph))
    P, n = Phi.shape
    A = np.vstack(
        [
            np.hstack([Phi.T, -Phi.T]),
            np.hstack([-Phi.T, Phi.T]),
            np.ones((1, 2 * P)),
        ]
    )
    b = np.concatenate([np.zeros(2 * n), [1.0]])
    res = solve_lp(LinearProgram(np.concatenate([fv, -fv]), A, b))
    if res.status != "optimal":
        raise SolverError(f"Chebyshev dual LP ended with status {res.status!r}")
    c = (res.duals[:n] - res.duals[n : 2 * n]) / scale
    approx = Phi @ (c * scale)
    resid = np.abs(fv - approx)
    err = float(resid.max())
    active = int(np.sum(resid >= err - TAU_ACTIVE * max(1.0, err)))
    return ApproxResult("chebyshev", m, c, SGFunction(graph, approx), err, active, res.objective)


def best_one_sided_below(f, basis, m: int, weights=None) -> ApproxResult:
    """Maximise ``Q_m(sum c_i phi_i)`` subject to ``sum c_i phi_i <= f`` on ``V_m``.

    ``weights`` defaults to the level-``m`` quadrature weights.  The LP
    solved is ``max -f.lam`` subject to ``Phi^T lam = Phi^T w``, ``lam >= 0``;
    the multipliers of the two inequality halves give ``c``.

    Raises
    ------
    InfeasibleError
        If no combination lies below ``f`` (the dual is unbounded).
    """
    graph = build_level_graph(m)
    fv = as_values(f, graph)
    Phi, scale = _scaled(_columns(basis, graph))
    P, n = Phi.shape
    w = quadrature_weights(m) if weights is None else np.asarray(weights, dtype=float)
    target = Phi.T @ w
    A = np.vstack([Phi.T, -Phi.T])
    b = np.concatenate([target, -target])
    res = solve_lp(LinearProgram(-fv, A, b))
    if res.status == "unbounded":
        raise InfeasibleError("no basis combination lies below f")
    if res.status == "infeasible":
        raise SolverError("one-sided objective is unbounded above (check the weights)")
    cs = res.duals[n:] - res.duals[:n]
    approx = Phi @ cs
    gap = fv - approx
    if gap.min() < -1e-9 * max(1.0, np.abs(fv).max()):
        raise SolverError(f"recovered approximant exceeds f by {-gap.min():.3e}")
    active = int(np.sum(gap <= TAU_ACTIVE * max(1.0, np.abs(fv).max())))
    return ApproxResult("below", m, cs / scale, SGFunction(graph, approx), float(w @ gap), active, float(w @ approx))


def fractal_basis(basis, alpha: ScalingFamily, level: int, base="harmonic") -> list[SGFunction]:
    """Images of basis functions under the fractal operator at ``level``."""
    graph = build_level_graph(level)
    return [fractal_operator(SGFunction(graph, as_values(phi, graph)), alpha, level, base).values for phi in basis]
