"""Pure-Python (numpy) versions of the compiled kernels."""

import numpy as np

_AXIS_BITS = 21
_AXIS_MASK = (1 << _AXIS_BITS) - 1


def cascade_stage(out, filled, targets, f_vals, alpha, b_vals):
    """Apply one cascade stage in place and return the junction discrepancy.

    For every word row ``w`` and source vertex ``s`` (in that order) the
    candidate ``f_vals[t] + alpha[w, s] * (out[s] - b_vals[s])`` is computed
    for ``t = targets[w, s]``.  Unfilled targets take their first candidate;
    the largest gap between a stored value and any later candidate is
    returned.
    """
    n_src = targets.shape[1]
    gap = out[:n_src] - b_vals[:n_src]
    flat_t = targets.ravel()
    vals = (f_vals[targets] + alpha * gap[None, :]).ravel()
    pre = filled[flat_t].astype(bool)
    fresh_t = flat_t[~pre]
    uniq, first = np.unique(fresh_t, return_index=True)
    out[uniq] = vals[~pre][first]
    filled[uniq] = 1
    if len(vals) == 0:
        return 0.0
    return float(np.max(np.abs(out[flat_t] - vals)))


def count_boxes(i, j, k):
    keys = ((i & _AXIS_MASK) << (2 * _AXIS_BITS)) | ((j & _AXIS_MASK) << _AXIS_BITS) | (k & _AXIS_MASK)
    return int(len(np.unique(keys)))


def cell_ranges(values, index_map):
    v = values[index_map]
    return v.min(axis=1), v.max(axis=1)
