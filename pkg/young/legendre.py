"""
Discrete Legendre-Fenchel transform in one variable.

sup_i (s * x_i - f_i) only depends on the lower convex hull of the points
(x_i, f_i); after the hull is extracted each query is a binary search over
the hull slopes.
"""

import numpy as np


def lower_hull(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of (x_i, f_i); x must be increasing."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            turn = (x[i1] - x[i0]) * (f[i] - f[i0]) - (f[i1] - f[i0]) * (x[i] - x[i0])
            if turn > 0:
                break
            hull.pop()
        hull.append(i)
    return np.asarray(hull, dtype=int)


def legendre_1d(x: np.ndarray, f: np.ndarray, s: np.ndarray) -> np.ndarray:
    """
    sup over finite f_i of s * x_i - f_i for every query s; -inf if every f_i is +inf.
    """
    s = np.asarray(s, dtype=float)
    finite = np.isfinite(f)
    if not finite.any():
        return np.full(s.shape, -np.inf)
    xs = x[finite]
    fs = f[finite]
    index = lower_hull(xs, fs)
    hx, hf = xs[index], fs[index]
    if len(hx) == 1:
        return s * hx[0] - hf[0]
    slopes = np.diff(hf) / np.diff(hx)
    k = np.searchsorted(slopes, s)
    return s * hx[k] - hf[k]


def legendre_along_axis(values: np.ndarray, x: np.ndarray, s: np.ndarray, axis: int) -> np.ndarray:
    """Apply legendre_1d to every 1-D slice of `values` along `axis`."""
    moved = np.moveaxis(values, axis, -1)
    rows = moved.reshape(-1, moved.shape[-1])
    out = np.empty((rows.shape[0], len(s)))
    for r in range(rows.shape[0]):
        out[r] = legendre_1d(x, rows[r], s)
    out = out.reshape(moved.shape[:-1] + (len(s),))
    return np.moveaxis(out, -1, axis)
