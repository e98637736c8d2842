"""Geometry of the Sierpinski gasket.

Points are stored twice: as floats in the plane and as integer lattice
coordinates ``(a, b)`` at scale ``2**level`` meaning ``a/2**level * p2 +
b/2**level * p3``.  The lattice form makes vertex identity exact, so no
floating-point hashing is ever needed.

Vertex ids are stable across levels: ``V_{m-1}`` occupies ids
``0 .. n_vertices(m-1) - 1`` of the level-``m`` graph.  New vertices are
numbered in order of first appearance when the level-``m`` cells are walked
in lexicographic word order, corners in the order p1, p2, p3.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import LevelError, PointOutsideCellError, SampleError

SQRT3 = math.sqrt(3.0)
CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3 / 2.0]])
_CORNER_TUPLES = tuple((float(a), float(b)) for a, b in CORNERS)
BOUNDARY = (0, 1, 2)
TAU_GEOM = 1e-9
DEFAULT_MAX_LEVEL = 12


class Point2(NamedTuple):
    x: float
    y: float


P1 = Point2(0.0, 0.0)
P2 = Point2(1.0, 0.0)
P3 = Point2(0.5, SQRT3 / 2.0)


def max_level() -> int:
    """Largest buildable level; ``GASKETLAB_MAX_LEVEL`` overrides the default."""
    raw = os.environ.get("GASKETLAB_MAX_LEVEL")
    return int(raw) if raw else DEFAULT_MAX_LEVEL


def n_vertices(m: int) -> int:
    return (3 ** (m + 1) + 3) // 2


def check_word(word) -> str:
    """Normalise a word given as a string or a sequence of ints to a string."""
    if isinstance(word, str):
        s = word
    else:
        s = "".join(str(int(c)) for c in word)
    if any(c not in "123" for c in s):
        raise ValueError(f"word {word!r} has symbols outside {{1,2,3}}")
    return s


def word_to_index(word) -> int:
    k = 0
    for c in check_word(word):
        k = 3 * k + (ord(c) - ord("1"))
    return k


def index_to_word(k: int, m: int) -> str:
    digits = []
    for _ in range(m):
        k, r = divmod(k, 3)
        digits.append("123"[r])
    if k:
        raise ValueError("cell index too large for word length")
    return "".join(reversed(digits))


def words(m: int) -> list[str]:
    return [index_to_word(k, m) for k in range(3**m)]


def apply_map(word, t) -> Point2:
    """Image of ``t`` under ``L_w = L_{w1} o ... o L_{wN}``."""
    x, y = float(t[0]), float(t[1])
    for c in reversed(check_word(word)):
        px, py = _CORNER_TUPLES[ord(c) - ord("1")]
        x, y = 0.5 * (px + x), 0.5 * (py + y)
    return Point2(x, y)


def _triangle_slack(x: float, y: float) -> float:
    # signed distance to the closest edge of the unit triangle; >= 0 inside
    h = SQRT3 / 2.0
    return min(y, h * x - 0.5 * y, h * (1.0 - x) - 0.5 * y)


def invert_map(word, t, tol: float = TAU_GEOM) -> Point2:
    """Preimage of ``t`` under ``L_w``.

    Raises :class:`PointOutsideCellError` if ``t`` is farther than ``tol``
    from the closed cell triangle ``L_w(A)``.
    """
    w = check_word(word)
    ox, oy = apply_map(w, P1)
    scale = float(2 ** len(w))
    x, y = (float(t[0]) - ox) * scale, (float(t[1]) - oy) * scale
    if _triangle_slack(x, y) < -tol * scale:
        raise PointOutsideCellError(f"point {tuple(t)} is outside cell {w!r}")
    return Point2(x, y)


@dataclass(frozen=True, eq=False)
class LevelGraph:
    """Level-``m`` approximation graph ``Gamma_m`` of the gasket.

    Attributes
    ----------
    level : int
    lattice : (n, 2) int64 array
        Integer coordinates at scale ``2**level``.
    cells : (3**level, 3) int64 array
        Vertex ids of ``L_w(p1), L_w(p2), L_w(p3)`` for each word ``w`` in
        lexicographic order.  Children of cell ``k`` are ``3k, 3k+1, 3k+2``.
    """

    level: int
    lattice: np.ndarray
    cells: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.lattice)

    @property
    def boundary(self) -> tuple[int, int, int]:
        return BOUNDARY

    @cached_property
    def coords(self) -> np.ndarray:
        scale = float(2**self.level)
        a = self.lattice[:, 0].astype(float)
        b = self.lattice[:, 1].astype(float)
        xy = np.column_stack([(a + 0.5 * b) / scale, b * (SQRT3 / 2.0) / scale])
        xy.flags.writeable = False
        return xy

    @cached_property
    def edges(self) -> np.ndarray:
        c = self.cells
        e = np.stack([c[:, [0, 1]], c[:, [0, 2]], c[:, [1, 2]]], axis=1).reshape(-1, 2)
        e.sort(axis=1)
        e.flags.writeable = False
        return e

    @cached_property
    def interior(self) -> np.ndarray:
        """Ids of ``V_m \\ V_0`` in increasing order."""
        ids = np.arange(3, self.n_vertices)
        ids.flags.writeable = False
        return ids

    @cached_property
    def adjacency(self):
        """Symmetric 0/1 adjacency matrix as a scipy CSR matrix."""
        from scipy import sparse

        e = self.edges
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    @cached_property
    def _key_index(self):
        keys = self._keys(self.lattice)
        order = np.argsort(keys, kind="stable")
        return keys[order], order

    def _keys(self, lattice: np.ndarray) -> np.ndarray:
        side = (1 << self.level) + 1
        return lattice[..., 0].astype(np.int64) * side + lattice[..., 1]

    def ids_of(self, lattice: np.ndarray) -> np.ndarray:
        """Vertex ids for integer lattice coordinates at this level's scale."""
        keys = self._keys(np.asarray(lattice, dtype=np.int64))
        sorted_keys, order = self._key_index
        pos = np.searchsorted(sorted_keys, keys)
        pos = np.clip(pos, 0, len(sorted_keys) - 1)
        if not np.array_equal(sorted_keys[pos], keys):
            raise ValueError("lattice point is not a vertex of this level")
        return order[pos]

    def cell_word(self, k: int) -> str:
        return index_to_word(k, self.level)

    def cell_vertices(self, word) -> tuple[int, int, int]:
        w = check_word(word)
        if len(w) != self.level:
            raise ValueError(f"word length {len(w)} != level {self.level}")
        return tuple(int(v) for v in self.cells[word_to_index(w)])

    def children(self, k: int) -> tuple[int, int, int]:
        return (3 * k, 3 * k + 1, 3 * k + 2)


def _check_level(m: int) -> None:
    if m < 0:
        raise LevelError(f"level must be non-negative, got {m}")
    if m > max_level():
        raise LevelError(f"level {m} exceeds maximum {max_level()} (set GASKETLAB_MAX_LEVEL)")


@lru_cache(maxsize=None)
def _build(m: int) -> LevelGraph:
    if m == 0:
        lattice = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
        cells = np.array([[0, 1, 2]], dtype=np.int64)
    else:
        prev = _build(m - 1)
        n_old = prev.n_vertices
        c = prev.cells
        k = len(c)
        old = prev.lattice * 2
        mids = np.empty((k, 3, 2), dtype=np.int64)
        mids[:, 0] = (old[c[:, 0]] + old[c[:, 1]]) // 2
        mids[:, 1] = (old[c[:, 0]] + old[c[:, 2]]) // 2
        mids[:, 2] = (old[c[:, 1]] + old[c[:, 2]]) // 2
        lattice = np.concatenate([old, mids.reshape(-1, 2)])
        base = n_old + 3 * np.arange(k, dtype=np.int64)
        m12, m13, m23 = base, base + 1, base + 2
        cells = np.stack(
            [
                np.column_stack([c[:, 0], m12, m13]),
                np.column_stack([m12, c[:, 1], m23]),
                np.column_stack([m13, m23, c[:, 2]]),
            ],
            axis=1,
        ).reshape(-1, 3)
    lattice.flags.writeable = False
    cells.flags.writeable = False
    return LevelGraph(m, lattice, cells)


def build_level_graph(m: int) -> LevelGraph:
    """Return the (cached, immutable) level-``m`` graph."""
    _check_level(m)
    return _build(m)


@lru_cache(maxsize=64)
def subcell_vertex_map(level: int, depth: int) -> np.ndarray:
    """Ids in ``V_level`` of ``L_w(s)`` for every word ``w`` of length ``depth``.

    Returns an array of shape ``(3**depth, n_vertices(level - depth))`` whose
    row ``k`` lists the images of the ``V_{level-depth}`` vertices under the
    ``k``-th word map.
    """
    if not 0 <= depth <= level:
        raise LevelError(f"need 0 <= depth <= level, got depth={depth}, level={level}")
    g = build_level_graph(level)
    g_cells = build_level_graph(depth)
    inner = n_vertices(level - depth)
    local = g.lattice[:inner] >> depth
    origins = g_cells.lattice[g_cells.cells[:, 0]] << (level - depth)
    ids = g.ids_of(origins[:, None, :] + local[None, :, :])
    ids.flags.writeable = False
    return ids


@dataclass(frozen=True, eq=False)
class SGFunction:
    """Real values on every vertex of a level graph."""

    graph: LevelGraph
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.graph.n_vertices,):
            raise ValueError(
                f"expected {self.graph.n_vertices} values for level {self.graph.level}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise SampleError(bad, "non-finite value")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def level(self) -> int:
        return self.graph.level

    def restrict(self, m: int) -> "SGFunction":
        if m > self.level:
            raise LevelError(f"cannot restrict level-{self.level} function to level {m}")
        return SGFunction(build_level_graph(m), self.values[: n_vertices(m)])

    def _combine(self, other, op):
        if isinstance(other, SGFunction):
            if other.level != self.level:
                raise LevelError("level mismatch")
            other = other.values
        return SGFunction(self.graph, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return SGFunction(self.graph, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


Evaluable = Callable[[np.ndarray, np.ndarray], "np.ndarray | float"]


def sample(fn: Evaluable, graph: LevelGraph) -> SGFunction:
    """Evaluate ``fn(x, y)`` (vectorised over numpy arrays) at every vertex."""
    x, y = graph.coords[:, 0], graph.coords[:, 1]
    try:
        v = np.broadcast_to(np.asarray(fn(x, y), dtype=float), x.shape)
    except Exception as exc:
        # locate the first offending vertex
        for i in range(len(x)):
            try:
                fn(x[i : i + 1], y[i : i + 1])
            except Exception as inner:
                raise SampleError(i, str(inner)) from inner
        raise SampleError(-1, str(exc)) from exc
    return SGFunction(graph, v)


def as_values(fn_or_values, graph: LevelGraph) -> np.ndarray:
    """Values of a callable, SGFunction, scalar or array on ``graph``.

    SGFunctions at a finer level are restricted; coarser ones are rejected.
    """
    if isinstance(fn_or_values, SGFunction):
        if fn_or_values.level < graph.level:
            raise LevelError(
                f"function at level {fn_or_values.level} is coarser than level {graph.level}"
            )
        return fn_or_values.values[: graph.n_vertices]
    if callable(fn_or_values):
        return sample(fn_or_values, graph).values
    arr = np.asarray(fn_or_values, dtype=float)
    if arr.ndim == 0:
        return np.full(graph.n_vertices, float(arr))
    if len(arr) < graph.n_vertices:
        raise LevelError("value array is shorter than the vertex count")
    return arr[: graph.n_vertices]


@lru_cache(maxsize=None)
def quadrature_weights(n: int) -> np.ndarray:
    """Per-vertex weights of the level-``n`` cell-mean rule for ``mu``."""
    g = build_level_graph(n)
    counts = np.bincount(g.cells.ravel(), minlength=g.n_vertices)
    w = counts / (3.0 * 3**n)
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class Quadrature:
    level: int
    weights: np.ndarray

    @classmethod
    def at(cls, n: int) -> "Quadrature":
        return cls(n, quadrature_weights(n))


def integrate(f: SGFunction, level: int | None = None) -> float:
    """Cell-mean quadrature of ``f`` against the self-similar measure.

    ``Q_n(f) = sum_{|w|=n} 3**-n * mean(f at the corners of cell w)``; uses
    ``f``'s own level unless ``level`` is given.
    """
    n = f.level if level is None else level
    g = build_level_graph(n)
    v = f.values[: g.n_vertices]
    means = (v[g.cells[:, 0]] + v[g.cells[:, 1]] + v[g.cells[:, 2]]) / 3.0
    return float(np.sum(means) / 3**n)


def edge_length_census(n: int):
    """Exact sum of squared Euclidean edge lengths over ``Gamma_n``.

    Returned as a :class:`fractions.Fraction`; the lattice form ``a^2 + ab +
    b^2`` is the squared length in units of the level-``n`` spacing.
    """
    from fractions import Fraction

    g = build_level_graph(n)
    d = g.lattice[g.edges[:, 0]] - g.lattice[g.edges[:, 1]]
    total = int(np.sum(d[:, 0] * d[:, 0] + d[:, 0] * d[:, 1] + d[:, 1] * d[:, 1]))
    return Fraction(total, 4**n)


def projected_edge_census(n: int):
    """Exact sum of squared horizontal edge extents over ``Gamma_n``."""
    from fractions import Fraction

    g = build_level_graph(n)
    d = g.lattice[g.edges[:, 0]] - g.lattice[g.edges[:, 1]]
    # twice the x-difference is 2a + b in lattice units
    dx2 = 2 * d[:, 0] + d[:, 1]
    return Fraction(int(np.sum(dx2 * dx2)), 4 ** (n + 1))
