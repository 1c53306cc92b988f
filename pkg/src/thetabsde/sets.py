"""Compact, possibly non-convex uncertainty sets.

Variants: axis-aligned boxes, Euclidean balls, finite point clouds and
finite unions of the above. All geometry runs on flat ambient coordinates
(see :mod:`thetabsde.ambient`). Projection, membership and linear
maximization are vectorized over batches of query points; ties are broken
deterministically (lowest member index, then lexicographically smallest
coordinates).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .ambient import MAX_DIM, as_point

INF_GAP = np.inf


class SetError(ValueError):
    pass


def _check_batch(P, dim):
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    if P.ndim != 2 or P.shape[1] != dim:
        raise SetError(f"query batch has shape {P.shape}, expected (n, {dim})")
    return P


def _lex_smaller(a, b):
    """True if a precedes b lexicographically (strict)."""
    for x, y in zip(a, b):
        if x < y:
            return True
        if x > y:
            return False
    return False


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    distance: float
    member_index: int = -1
    medial_gap: float = INF_GAP


class UncertaintySet:
    """Base class; subclasses implement the geometry primitives."""

    dim: int

    def project_batch(self, P):
        """Return (nearest points, distances) for a (n, dim) batch."""
        raise NotImplementedError

    def distance_batch(self, P):
        return self.project_batch(P)[1]

    def medial_gap_batch(self, P):
        """Second-smallest candidate distance minus smallest; inf if the
        set has a single projection candidate."""
        P = _check_batch(P, self.dim)
        return np.full(len(P), INF_GAP)

    def member_index_batch(self, P):
        P = _check_batch(P, self.dim)
        return np.full(len(P), -1, dtype=np.int64)

    def linear_max(self, c):
        raise NotImplementedError

    def linear_max_batch(self, C):
        """Vectorized linear_max over a (n, dim) batch of functionals."""
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def fixed_element(self):
        """Deterministic representative, used when the argmax degenerates."""
        raise NotImplementedError

    # conveniences ---------------------------------------------------------

    def project(self, p):
        p = as_point(p, dim=self.dim)
        pts, dist = self.project_batch(p.reshape(1, -1))
        gap = float(self.medial_gap_batch(p.reshape(1, -1))[0])
        mi = int(self.member_index_batch(p.reshape(1, -1))[0])
        return ProjectionResult(point=pts[0], distance=float(dist[0]),
                                member_index=mi, medial_gap=gap)

    def contains(self, p, tol=0.0):
        p = as_point(p, dim=self.dim)
        return bool(self.distance_batch(p.reshape(1, -1))[0] <= tol)

    def contains_batch(self, P, tol=0.0):
        return self.distance_batch(P) <= tol

    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))


@dataclass
class Box(UncertaintySet):
    lower: np.ndarray
    upper: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        self.lower = as_point(self.lower)
        self.upper = as_point(self.upper, dim=self.lower.size)
        if np.any(self.lower > self.upper):
            raise SetError("box lower bound exceeds upper bound")
        self.dim = self.lower.size

    def project_batch(self, P):
        P = _check_batch(P, self.dim)
        pts = _kernels.box_project(P, self.lower, self.upper)
        return pts, np.linalg.norm(P - pts, axis=1)

    def linear_max(self, c):
        c = as_point(c, dim=self.dim)
        # per-coordinate sign selection; c == 0 picks the lower bound
        arg = np.where(c > 0, self.upper, self.lower)
        return float(arg @ c), arg

    def linear_max_batch(self, C):
        C = _check_batch(C, self.dim)
        args = np.where(C > 0, self.upper, self.lower)
        return np.sum(args * C, axis=1), args

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def fixed_element(self):
        return self.lower.copy()


@dataclass
class Ball(UncertaintySet):
    center: np.ndarray
    radius: float
    dim: int = field(init=False)

    def __post_init__(self):
        self.center = as_point(self.center)
        self.radius = float(self.radius)
        if not self.radius > 0:
            raise SetError("ball radius must be positive")
        self.dim = self.center.size

    def project_batch(self, P):
        P = _check_batch(P, self.dim)
        pts = _kernels.ball_project(P, self.center, self.radius)
        return pts, np.linalg.norm(P - pts, axis=1)

    def linear_max(self, c):
        c = as_point(c, dim=self.dim)
        nc = np.linalg.norm(c)
        if nc == 0.0:
            return float(self.center @ c), self.center.copy()
        arg = self.center + self.radius * c / nc
        return float(self.center @ c + self.radius * nc), arg

    def linear_max_batch(self, C):
        C = _check_batch(C, self.dim)
        nc = np.linalg.norm(C, axis=1)
        args = np.tile(self.center, (len(C), 1))
        nz = nc > 0
        args[nz] += self.radius * C[nz] / nc[nz, None]
        return C @ self.center + self.radius * nc, args

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def fixed_element(self):
        return self.center.copy()


@dataclass
class PointCloud(UncertaintySet):
    points: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise SetError("point cloud needs a nonempty (k, dim) array")
        if pts.shape[1] > MAX_DIM:
            raise SetError(f"point dim exceeds {MAX_DIM}")
        if not np.all(np.isfinite(pts)):
            raise SetError("point cloud has non-finite entries")
        # dedupe, and keep lexicographic storage order so first-argmin ties
        # resolve to the lex-smallest candidate
        self.points = np.unique(pts, axis=0)
        self.dim = pts.shape[1]

    def project_batch(self, P):
        P = _check_batch(P, self.dim)
        idx, d1, _ = _kernels.cloud_nearest(P, self.points)
        return self.points[idx], d1

    def medial_gap_batch(self, P):
        P = _check_batch(P, self.dim)
        _, d1, d2 = _kernels.cloud_nearest(P, self.points)
        return d2 - d1

    def linear_max(self, c):
        c = as_point(c, dim=self.dim)
        vals = self.points @ c
        i = int(np.argmax(vals))
        return float(vals[i]), self.points[i].copy()

    def linear_max_batch(self, C):
        C = _check_batch(C, self.dim)
        V = C @ self.points.T
        idx = np.argmax(V, axis=1)
        return V[np.arange(len(C)), idx], self.points[idx]

    def bounding_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def fixed_element(self):
        return self.points[0].copy()


@dataclass
class UnionSet(UncertaintySet):
    members: list
    dim: int = field(init=False)
    min_member_gap: float = field(init=False)

    def __post_init__(self):
        if not self.members:
            raise SetError("union needs at least one member")
        self.members = list(self.members)
        dims = {m.dim for m in self.members}
        if len(dims) != 1:
            raise SetError(f"union members disagree on dim: {sorted(dims)}")
        self.dim = dims.pop()
        self.min_member_gap = self._measure_member_gap()

    def _measure_member_gap(self, iters=16):
        """Diagnostic only: alternating-projection estimate of the smallest
        distance between two distinct members (0 if they overlap)."""
        if len(self.members) < 2:
            return INF_GAP
        best = INF_GAP
        for i, a in enumerate(self.members):
            for b in self.members[i + 1:]:
                p = a.fixed_element().reshape(1, -1)
                for _ in range(iters):
                    q = b.project_batch(p)[0]
                    p = a.project_batch(q)[0]
                best = min(best, float(b.distance_batch(p)[0]))
        return best

    def _member_distances(self, P):
        P = _check_batch(P, self.dim)
        return np.stack([m.distance_batch(P) for m in self.members], axis=1)

    def project_batch(self, P):
        P = _check_batch(P, self.dim)
        D = self._member_distances(P)
        best = np.argmin(D, axis=1)  # first minimum = lowest member index
        pts = np.empty_like(P)
        for j, m in enumerate(self.members):
            sel = best == j
            if np.any(sel):
                pts[sel] = m.project_batch(P[sel])[0]
        return pts, D[np.arange(len(P)), best]

    def member_index_batch(self, P):
        D = self._member_distances(P)
        return np.argmin(D, axis=1).astype(np.int64)

    def distance_batch(self, P):
        return self._member_distances(P).min(axis=1)

    def medial_gap_batch(self, P):
        D = self._member_distances(P)
        if D.shape[1] < 2:
            return np.full(len(D), INF_GAP)
        two = np.partition(D, 1, axis=1)
        return two[:, 1] - two[:, 0]

    def linear_max(self, c):
        c = as_point(c, dim=self.dim)
        best_val, best_arg = -np.inf, None
        for m in self.members:
            val, arg = m.linear_max(c)
            if val > best_val or (val == best_val and _lex_smaller(arg, best_arg)):
                best_val, best_arg = val, arg
        return best_val, best_arg

    def linear_max_batch(self, C):
        C = _check_batch(C, self.dim)
        vals, args = self.members[0].linear_max_batch(C)
        for m in self.members[1:]:
            v, a = m.linear_max_batch(C)
            better = v > vals  # strict: keeps the lowest member index on ties
            vals = np.where(better, v, vals)
            args[better] = a[better]
        return vals, args

    def bounding_box(self):
        boxes = [m.bounding_box() for m in self.members]
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        return lo, hi

    def fixed_element(self):
        return self.members[0].fixed_element()


def grid_cover(uset, step):
    """Regular grid over the bounding box, thinned to points within
    ``step`` of the set. Brute-force oracle support; dim <= 3 only."""
    if uset.dim > 3:
        raise SetError("grid cover supported for dim <= 3 only")
    lo, hi = uset.bounding_box()
    axes = [np.arange(lo[j], hi[j] + step / 2, step) for j in range(uset.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)
    keep = uset.contains_batch(P, tol=step)
    return P[keep]
