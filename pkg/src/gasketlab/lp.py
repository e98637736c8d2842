"""Dense two-phase simplex for small linear programs.

Problems are ``maximize c.x  subject to  A x <= b`` with per-variable bounds.
Dantzig's rule is used until a run of degenerate pivots suggests cycling,
after which Bland's rule takes over for the rest of the solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

TOL = 1e-10
PIVOT_TOL = 1e-9  # smaller pivot elements are treated as zero
HARRIS = 1e-9  # bound relaxation in the ratio test
WEAK_PIVOT = 1e-6  # relative to the column's largest entry
DEGENERATE_RUN = 50
REFACTOR_EVERY = 50


@dataclass
class LinearProgram:
    """``maximize c @ x`` subject to ``A @ x <= b`` and ``bounds``.

    ``bounds`` is a list of ``(lo, hi)`` with ``None`` for no limit; the
    default is ``x >= 0``.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    bounds: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        n = len(self.c)
        if self.A.shape != (len(self.b), n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({len(self.b)}, {n})")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ValueError("one (lo, hi) pair per variable is required")


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None  # one per row of A, all >= 0
    iterations: int = 0
    bland: bool = field(default=False, repr=False)


class _Tableau:
    def __init__(self, T, basis, max_iter):
        self.T = T  # rows: constraints; last column: rhs
        self.T0 = T.copy()
        self.basis = basis
        self.iterations = 0
        self.max_iter = max_iter
        self.bland = False
        self._degenerate = 0

    def pivot(self, r, q):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[np.abs(T) < 1e-14] = 0.0
        m = len(self.basis)
        # a relaxed ratio step can leave basic values a hair below zero
        T[:m, -1] = np.maximum(T[:m, -1], 0.0)
        self.basis[r] = q

    def reinvert(self) -> bool:
        """Rebuild the tableau for the current basis from the original data.

        Returns False if the basis matrix is singular to working precision.
        """
        m = len(self.basis)
        if m == 0:
            return True
        B = self.T0[:m, self.basis]
        try:
            body = np.linalg.solve(B, self.T0[:m])
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(body)):
            return False
        body[:, self.basis] = np.eye(m)
        body[np.abs(body) < 1e-14] = 0.0
        if body[:, -1].min() < -1e-9 * max(1.0, np.abs(body[:, -1]).max()):
            return False  # drift made the basis infeasible; keep the old tableau
        body[:, -1] = np.maximum(body[:, -1], 0.0)
        self.T[:m] = body
        # any row of reduced costs can be re-derived from its starting copy
        for row in range(m, self.T.shape[0]):
            cost = self.T0[row]
            self.T[row] = cost - cost[self.basis] @ body
            self.T[row, self.basis] = 0.0
        return True

    def _leaving(self, q: int):
        """Ratio test for entering column ``q``: ``(row, step, pivot)`` or None."""
        T = self.T
        m = len(self.basis)
        col = T[:m, q]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if len(pos) == 0:
            return None
        rhs = np.maximum(T[pos, -1], 0.0)
        ratios = rhs / col[pos]
        best = ratios.min()
        if self.bland:
            ties = pos[ratios <= best + TOL * max(1.0, best)]
            big = col[ties]
            ties = ties[big >= 1e-3 * big.max()]
            r = int(ties[np.argmin([self.basis[i] for i in ties])])
        else:
            # two-pass (Harris) ratio test: relax the bounds slightly, then
            # take the largest pivot among rows inside the relaxed step
            step = ((rhs + HARRIS) / col[pos]).min()
            ties = pos[ratios <= step]
            r = int(ties[np.argmax(col[ties])])
        return r, best, col[r] / max(1.0, np.abs(col).max())

    def run(self, obj_row: int, allowed: np.ndarray) -> str:
        """Maximise the objective stored (as reduced costs) in ``obj_row``."""
        T = self.T
        fresh = False
        while True:
            red = T[obj_row, :-1]
            cand = np.flatnonzero((red > TOL) & allowed)
            if len(cand) == 0:
                return "optimal"
            if not self.bland:
                cand = cand[np.argsort(-red[cand], kind="stable")]
            # tiny pivots wreck the tableau, so pass over columns that only
            # offer one unless every improving column does
            choice = None
            for q in cand:
                out = self._leaving(int(q))
                if out is None:
                    choice = (int(q), None)
                    break
                if out[2] >= WEAK_PIVOT:
                    choice = (int(q), out)
                    break
                if choice is None:
                    choice = (int(q), out)
            q, out = choice
            if out is None:
                # a column can lose its positive entries to rounding; check again
                if not fresh and self.reinvert():
                    fresh = True
                    continue
                return "unbounded"
            r, best, _ = out
            if best <= TOL:
                self._degenerate += 1
                if self._degenerate > DEGENERATE_RUN:
                    self.bland = True
            else:
                self._degenerate = 0
            self.pivot(r, q)
            self.iterations += 1
            fresh = False
            if self.iterations % REFACTOR_EVERY == 0:
                fresh = self.reinvert()
            if self.iterations > self.max_iter:
                raise SolverError(f"simplex exceeded {self.max_iter} pivots")


def _standardise(lp: LinearProgram):
    """Rewrite as ``max c' z, A' z <= b', z >= 0`` and return the back map."""
    cols = []  # (orig index, sign)
    shift = np.zeros(len(lp.c))
    extra_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return None
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    n2 = len(cols)
    A2 = np.zeros((lp.A.shape[0] + len(extra_rows), n2))
    c2 = np.zeros(n2)
    for k, (j, s) in enumerate(cols):
        A2[: lp.A.shape[0], k] = s * lp.A[:, j]
        c2[k] = s * lp.c[j]
    b2 = np.concatenate([lp.b - lp.A @ shift, [u for _, u in extra_rows]])
    for i, (k, _) in enumerate(extra_rows):
        A2[lp.A.shape[0] + i, k] = 1.0
    return A2, b2, c2, cols, shift


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LPResult:
    """Solve ``lp`` by the two-phase simplex method.

    Returns duals ``y >= 0`` for the rows of ``A`` so that, at an optimum,
    ``b @ y`` equals the objective up to the variable-bound terms.
    """
    std = _standardise(lp)
    if std is None:
        return LPResult("infeasible")
    A, b, c, cols, shift = std
    m, n = A.shape
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.abs(b)
    n_art = int(flip.sum())
    width = n + m + n_art + 1
    T = np.zeros((m + 2, width))
    T[:m, :n] = A
    T[:m, n : n + m] = np.diag(np.where(flip, -1.0, 1.0))
    art_rows = np.flatnonzero(flip)
    for a, r in enumerate(art_rows):
        T[r, n + m + a] = 1.0
    T[:m, -1] = b
    basis = [n + i for i in range(m)]
    for a, r in enumerate(art_rows):
        basis[r] = n + m + a
    # row m: phase-2 reduced costs; row m+1: phase-1 reduced costs (max -sum art)
    T[m, :n] = c
    T[m + 1, :] = T[art_rows].sum(axis=0)
    T[m + 1, n + m :] = 0.0
    T[m + 1, -1] = T[art_rows, -1].sum()
    tab = _Tableau(T, basis, max_iter or 50 * (m + n + 10))
    all_cols = np.ones(width - 1, dtype=bool)

    if n_art:
        tab.run(m + 1, all_cols)
        if T[m + 1, -1] > 1e-9 * max(1.0, np.abs(b).max()):
            return LPResult("infeasible", iterations=tab.iterations)
        for r in range(m):
            if tab.basis[r] >= n + m:
                nz = np.flatnonzero(np.abs(T[r, : n + m]) > TOL)
                if len(nz):
                    tab.pivot(r, int(nz[0]))
    allowed = all_cols.copy()
    allowed[n + m :] = False
    status = tab.run(m, allowed)
    # long pivot sequences drift; refactorise and polish until the basis is clean
    for _ in range(5):
        if status != "optimal" or not tab.reinvert():
            break
        if not np.any((T[m, :-1] > TOL) & allowed):
            break
        status = tab.run(m, allowed)
    if status == "unbounded":
        return LPResult("unbounded", iterations=tab.iterations, bland=tab.bland)

    z = np.zeros(n + m + n_art)
    for r, j in enumerate(tab.basis):
        z[j] = T[r, -1]
    x = shift.copy()
    for k, (j, s) in enumerate(cols):
        x[j] += s * z[k]
    # the reduced cost of row i's slack is -y_i; for a flipped row the surplus
    # column and the row sign both change, so the relation is the same
    y = np.maximum(-T[m, n : n + lp.A.shape[0]], 0.0)
    return LPResult("optimal", x, float(lp.c @ x), y, tab.iterations, tab.bland)
