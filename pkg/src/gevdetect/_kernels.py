"""Hot numeric loops over discrete spectral measures.

Every kernel has a numba version and a pure-numpy version with identical
signatures. The numba path is used when numba imports cleanly and the
environment variable ``GEVDETECT_DISABLE_NUMBA`` is unset or ``0``; set it to
``1`` to force the numpy path (useful for debugging and for the benchmark).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("GEVDETECT_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

USE_NUMBA = njit is not None and not _DISABLED


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

_CHUNK = 4096


def xmap_grid_numpy(m, weights, locs, c):
    """x(m) = -1/m + c sum w l/(1+l m) and its m-derivative, over a grid of m."""
    m = np.asarray(m, dtype=np.float64)
    x = np.empty_like(m)
    dx = np.empty_like(m)
    for lo in range(0, m.size, _CHUNK):
        mm = m[lo:lo + _CHUNK, None]
        lm = locs[None, :] * mm
        den = 1.0 + lm
        x[lo:lo + _CHUNK] = -1.0 / mm[:, 0] + c * (weights * locs / den).sum(axis=1)
        s = (weights * (lm / den) ** 2).sum(axis=1)
        dx[lo:lo + _CHUNK] = (1.0 - c * s) / mm[:, 0] ** 2
    return x, dx


def g_grid_numpy(t, weights, locs, c):
    """g(t) = c sum w l^2/(l-t)^2 over a grid of t."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    for lo in range(0, t.size, _CHUNK):
        tt = t[lo:lo + _CHUNK, None]
        out[lo:lo + _CHUNK] = c * (weights * (locs / (locs - tt)) ** 2).sum(axis=1)
    return out


def spike_image_grid_numpy(t, weights, locs, c):
    """t (1 + c sum w l/(t-l)) over a grid of t."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    for lo in range(0, t.size, _CHUNK):
        tt = t[lo:lo + _CHUNK, None]
        out[lo:lo + _CHUNK] = tt[:, 0] * (1.0 + c * (weights * locs / (tt - locs)).sum(axis=1))
    return out


def ks_sorted_numpy(values, cdf_right, cdf_left):
    """sup |edf - F| for ascending ``values``.

    ``cdf_right`` and ``cdf_left`` are F and its left limit at each value. Ties
    are handled by comparing against the edf just before the first and just
    after the last copy of each distinct value.
    """
    n = values.size
    hi = np.searchsorted(values, values, side="right") / n
    lo = np.searchsorted(values, values, side="left") / n
    return float(max(np.max(np.abs(hi - cdf_right)), np.max(np.abs(cdf_left - lo))))


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if njit is not None:

    @njit(cache=True)
    def xmap_grid_numba(m, weights, locs, c):
        x = np.empty(m.size)
        dx = np.empty(m.size)
        for i in range(m.size):
            mi = m[i]
            sx = 0.0
            sd = 0.0
            for j in range(locs.size):
                lm = locs[j] * mi
                den = 1.0 + lm
                sx += weights[j] * locs[j] / den
                r = lm / den
                sd += weights[j] * r * r
            x[i] = -1.0 / mi + c * sx
            dx[i] = (1.0 - c * sd) / (mi * mi)
        return x, dx

    @njit(cache=True)
    def g_grid_numba(t, weights, locs, c):
        out = np.empty(t.size)
        for i in range(t.size):
            s = 0.0
            for j in range(locs.size):
                r = locs[j] / (locs[j] - t[i])
                s += weights[j] * r * r
            out[i] = c * s
        return out

    @njit(cache=True)
    def spike_image_grid_numba(t, weights, locs, c):
        out = np.empty(t.size)
        for i in range(t.size):
            s = 0.0
            for j in range(locs.size):
                s += weights[j] * locs[j] / (t[i] - locs[j])
            out[i] = t[i] * (1.0 + c * s)
        return out

    @njit(cache=True)
    def ks_sorted_numba(values, cdf_right, cdf_left):
        n = values.size
        best = 0.0
        i = 0
        while i < n:
            j = i
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            below = i / n
            above = (j + 1) / n
            for k in range(i, j + 1):
                d1 = abs(above - cdf_right[k])
                d2 = abs(cdf_left[k] - below)
                if d1 > best:
                    best = d1
                if d2 > best:
                    best = d2
            i = j + 1
        return best

else:  # pragma: no cover
    xmap_grid_numba = xmap_grid_numpy
    g_grid_numba = g_grid_numpy
    spike_image_grid_numba = spike_image_grid_numpy
    ks_sorted_numba = ks_sorted_numpy


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def xmap_grid(m, weights, locs, c):
    args = (_as_f64(np.atleast_1d(m)), _as_f64(weights), _as_f64(locs), float(c))
    return xmap_grid_numba(*args) if USE_NUMBA else xmap_grid_numpy(*args)


def g_grid(t, weights, locs, c):
    args = (_as_f64(np.atleast_1d(t)), _as_f64(weights), _as_f64(locs), float(c))
    return g_grid_numba(*args) if USE_NUMBA else g_grid_numpy(*args)


def spike_image_grid(t, weights, locs, c):
    args = (_as_f64(np.atleast_1d(t)), _as_f64(weights), _as_f64(locs), float(c))
    return spike_image_grid_numba(*args) if USE_NUMBA else spike_image_grid_numpy(*args)


def ks_sorted(values, cdf_right, cdf_left):
    args = (_as_f64(values), _as_f64(cdf_right), _as_f64(cdf_left))
    return float(ks_sorted_numba(*args)) if USE_NUMBA else ks_sorted_numpy(*args)
