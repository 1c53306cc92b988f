"""Geometry kernels used in the hot paths of set projection.

Two interchangeable backends: numba-jitted loops and pure numpy. The numpy
fallback is selected by setting the environment variable
``THETABSDE_DISABLE_NUMBA=1`` before import; otherwise numba is used when
importable. ``BACKEND`` records which one is active.
"""

import os

import numpy as np

_DISABLE = os.environ.get("THETABSDE_DISABLE_NUMBA", "").strip() in {"1", "true", "yes"}

try:
    if _DISABLE:
        raise ImportError("numba disabled by THETABSDE_DISABLE_NUMBA")
    import numba

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False


def _np_box_project(P, lower, upper):
    return np.clip(P, lower, upper)


def _np_ball_project(P, center, radius):
    diff = P - center
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    out = P.copy()
    outside = dist > radius
    scale = radius / dist[outside]
    out[outside] = center + diff[outside] * scale[:, None]
    return out


def _np_cloud_nearest(P, pts):
    # pts are stored lexicographically sorted, so the first argmin among
    # exact ties is the lexicographically smallest candidate.
    diff = P[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=2))
    idx = np.argmin(D, axis=1)
    d1 = D[np.arange(len(P)), idx]
    if pts.shape[0] >= 2:
        d2 = np.partition(D, 1, axis=1)[:, 1]
    else:
        d2 = np.full(len(P), np.inf)
    return idx, d1, d2


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_box_project(P, lower, upper):
        n, m = P.shape
        out = np.empty_like(P)
        for i in range(n):
            for j in range(m):
                v = P[i, j]
                if v < lower[j]:
                    v = lower[j]
                elif v > upper[j]:
                    v = upper[j]
                out[i, j] = v
        return out

    @numba.njit(cache=True)
    def _nb_ball_project(P, center, radius):
        n, m = P.shape
        out = np.empty_like(P)
        for i in range(n):
            s = 0.0
            for j in range(m):
                d = P[i, j] - center[j]
                s += d * d
            dist = np.sqrt(s)
            if dist <= radius:
                for j in range(m):
                    out[i, j] = P[i, j]
            else:
                f = radius / dist
                for j in range(m):
                    out[i, j] = center[j] + (P[i, j] - center[j]) * f
        return out

    @numba.njit(cache=True)
    def _nb_cloud_nearest(P, pts):
        n = P.shape[0]
        k, m = pts.shape
        idx = np.empty(n, dtype=np.int64)
        d1 = np.empty(n)
        d2 = np.empty(n)
        for i in range(n):
            best = np.inf
            second = np.inf
            bi = 0
            for p in range(k):
                s = 0.0
                for j in range(m):
                    d = P[i, j] - pts[p, j]
                    s += d * d
                s = np.sqrt(s)
                if s < best:
                    second = best
                    best = s
                    bi = p
                elif s < second:
                    second = s
            idx[i] = bi
            d1[i] = best
            d2[i] = second
        return idx, d1, d2

    BACKEND = "numba"
    box_project = _nb_box_project
    ball_project = _nb_ball_project
    cloud_nearest = _nb_cloud_nearest
else:
    BACKEND = "numpy"
    box_project = _np_box_project
    ball_project = _np_ball_project
    cloud_nearest = _np_cloud_nearest

# fallbacks always importable, for benchmarking the two paths side by side
numpy_box_project = _np_box_project
numpy_ball_project = _np_ball_project
numpy_cloud_nearest = _np_cloud_nearest
