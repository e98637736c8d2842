"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when
``GASKETLAB_PURE_PYTHON=1`` is set, the numpy fallback is used.  Both
expose ``cascade_stage``, ``count_boxes`` and ``cell_ranges`` with identical
semantics; the wrappers here normalise dtypes and memory layout.
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("GASKETLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backends():
    """Available backend modules keyed by name."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def cascade_stage(out, filled, targets, f_vals, alpha, b_vals, impl=None):
    impl = impl or _impl
    return float(impl.cascade_stage(out, filled, _i64(targets), _f64(f_vals), _f64(alpha), _f64(b_vals)))


def count_boxes(i, j, k, impl=None):
    impl = impl or _impl
    return int(impl.count_boxes(_i64(i), _i64(j), _i64(k)))


def cell_ranges(values, index_map, impl=None):
    impl = impl or _impl
    lo, hi = impl.cell_ranges(_f64(values), _i64(index_map))
    return np.asarray(lo), np.asarray(hi)
