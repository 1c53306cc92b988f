"""Driver families F(t, x, y, z, a), their maximizer maps and the reduced
driver max_a F.

All evaluation entry points are batched over the sample axis: ``x`` has
shape (n, dim_x), ``y`` shape (n,), ``z`` shape (n, dim_b) and ``a`` shape
(n, dim_a) or (dim_a,). Closed-form maximizers exist for every variant that
supports one; a brute-force grid oracle (dim_a <= 3) double-checks them.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ambient import as_point, sym_vec_dim
from .sets import Box, Ball, SetError, grid_cover


class DriverError(ValueError):
    pass


def _batch_args(t, x, y, z):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(1, -1)
    n = max(x.shape[0], y.shape[0], z.shape[0])
    if x.shape[0] == 1 and n > 1:
        x = np.broadcast_to(x, (n, x.shape[1]))
    if y.shape[0] == 1 and n > 1:
        y = np.broadcast_to(y, (n,))
    if z.shape[0] == 1 and n > 1:
        z = np.broadcast_to(z, (n, z.shape[1]))
    if not (x.shape[0] == y.shape[0] == z.shape[0]):
        raise DriverError("inconsistent batch sizes for (x, y, z)")
    return float(t), x, y, z


def embed_zz(z):
    """Batched ambient embedding of z^T z for row vectors z (n, d)."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(1, -1)
    n, d = z.shape
    out = np.empty((n, sym_vec_dim(d)))
    out[:, :d] = z * z
    k = d
    for i in range(d):
        for j in range(i + 1, d):
            out[:, k] = np.sqrt(2.0) * z[:, i] * z[:, j]
            k += 1
    return out


@dataclass
class StateFn:
    """Affine map (t, x, y, z) -> c0 + c_t*t + C_x x + c_y*y + C_z z.

    Scalar codomain when ``c0`` is scalar, ambient-vector codomain when
    ``c0`` is a vector. Coefficient blocks may be None (treated as zero);
    affinity keeps every Lipschitz constant computable exactly.
    """

    c0: np.ndarray
    c_t: Optional[np.ndarray] = None
    C_x: Optional[np.ndarray] = None
    c_y: Optional[np.ndarray] = None
    C_z: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c0 = np.asarray(self.c0, dtype=float)
        self.scalar = self.c0.ndim == 0
        for name in ("c_t", "C_x", "c_y", "C_z"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=float))

    @property
    def dim_out(self):
        return 1 if self.scalar else self.c0.size

    def value(self, t, x, y, z):
        t, x, y, z = _batch_args(t, x, y, z)
        n = x.shape[0]
        if self.scalar:
            out = np.full(n, float(self.c0))
            if self.c_t is not None:
                out += float(self.c_t) * t
            if self.C_x is not None:
                out += x @ np.atleast_1d(self.C_x)
            if self.c_y is not None:
                out += float(self.c_y) * y
            if self.C_z is not None:
                out += z @ np.atleast_1d(self.C_z)
            return out
        out = np.tile(self.c0, (n, 1))
        if self.c_t is not None:
            out += t * self.c_t
        if self.C_x is not None:
            out += x @ np.atleast_2d(self.C_x).T
        if self.c_y is not None:
            out += y[:, None] * self.c_y
        if self.C_z is not None:
            out += z @ np.atleast_2d(self.C_z).T
        return out

    def lipschitz_yz(self):
        """Lipschitz constant w.r.t. |dy| + ||dz|| (exact for affine maps)."""
        ly = 0.0 if self.c_y is None else float(np.linalg.norm(np.atleast_1d(self.c_y)))
        if self.C_z is None:
            lz = 0.0
        elif self.scalar:
            lz = float(np.linalg.norm(np.atleast_1d(self.C_z)))
        else:
            lz = float(np.linalg.norm(np.atleast_2d(self.C_z), ord=2))
        return max(ly, lz)

    def depends_on_y(self):
        return self.c_y is not None and np.any(np.atleast_1d(self.c_y) != 0)


@dataclass
class ZeroDriver:
    kind = "zero"


@dataclass
class AffineDriver:
    """F = alpha + beta*y + <gamma, z>; independent of a."""

    alpha: float
    beta: float
    gamma: np.ndarray

    kind = "affine"

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.beta = float(self.beta)
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))


@dataclass
class ProjectionDriver:
    """F = h(t,x,y,z) - 0.5*||a - G(t,x,y,z)||^2."""

    h: StateFn
    G: StateFn

    kind = "projection"


@dataclass
class RegularizedProjectionDriver:
    """Projection driver with the extra penalty -(eps/2)*||a||^2."""

    h: StateFn
    G: StateFn
    eps: float

    kind = "regularized_projection"

    def __post_init__(self):
        self.eps = float(self.eps)
        if not self.eps > 0:
            raise DriverError("eps must be positive")

    def maximizer_lipschitz(self):
        """Lipschitz constant of the maximizer map in (y, z)."""
        return self.G.lipschitz_yz() / (1.0 + self.eps)


@dataclass
class GRegularizedDriver:
    """F = 0.5*<a, embed(z^T z)> - (eps/2)*||a - a0||^2."""

    eps: float
    a0: np.ndarray

    kind = "g_regularized"

    def __post_init__(self):
        self.eps = float(self.eps)
        if not self.eps > 0:
            raise DriverError("eps must be positive")
        self.a0 = as_point(self.a0)


@dataclass
class GLimitDriver:
    """Reduced driver is the support function max_a 0.5*<a, embed(z^T z)>
    directly; there is no a argument."""

    kind = "g_limit"


def is_convex(uset):
    return isinstance(uset, (Box, Ball))


def validate_driver(driver, uset, dim_b):
    """Dimension and membership checks before any compute."""
    if isinstance(driver, (GRegularizedDriver, GLimitDriver)):
        need = sym_vec_dim(dim_b)
        if uset.dim != need:
            raise DriverError(
                f"G-type driver with dim_b={dim_b} needs ambient dim {need}, "
                f"set has {uset.dim}")
        if isinstance(driver, GRegularizedDriver):
            as_point(driver.a0, dim=uset.dim)
            if not uset.contains(driver.a0, tol=1e-9):
                raise DriverError("a0 must lie in the uncertainty set")
    if isinstance(driver, (ProjectionDriver, RegularizedProjectionDriver)):
        if driver.G.dim_out != uset.dim:
            raise DriverError(
                f"G codomain dim {driver.G.dim_out} != set dim {uset.dim}")


def evaluate(driver, t, x, y, z, a):
    """Pointwise driver value F(t, x, y, z, a)."""
    t, x, y, z = _batch_args(t, x, y, z)
    n = x.shape[0]
    if isinstance(driver, GLimitDriver):
        raise DriverError("g_limit driver has no a argument; use effective_driver")
    if isinstance(driver, ZeroDriver):
        return np.zeros(n)
    if isinstance(driver, AffineDriver):
        return driver.alpha + driver.beta * y + z @ driver.gamma
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = np.broadcast_to(a, (n, a.size))
    if isinstance(driver, (ProjectionDriver, RegularizedProjectionDriver)):
        h = driver.h.value(t, x, y, z)
        G = driver.G.value(t, x, y, z)
        if G.ndim == 1:
            G = G[:, None]
        val = h - 0.5 * np.sum((a - G) ** 2, axis=1)
        if isinstance(driver, RegularizedProjectionDriver):
            val -= 0.5 * driver.eps * np.sum(a * a, axis=1)
        return val
    if isinstance(driver, GRegularizedDriver):
        c = embed_zz(z)
        return 0.5 * np.sum(a * c, axis=1) \
            - 0.5 * driver.eps * np.sum((a - driver.a0) ** 2, axis=1)
    raise DriverError(f"unknown driver {driver!r}")


def maximizer(driver, uset, t, x, y, z):
    """Closed-form argmax over the set. Returns (astar, value, degenerate)."""
    t, x, y, z = _batch_args(t, x, y, z)
    n = x.shape[0]
    if isinstance(driver, GLimitDriver):
        raise DriverError("g_limit driver has no maximizer; use effective_driver")
    if isinstance(driver, (ZeroDriver, AffineDriver)):
        astar = np.tile(uset.fixed_element(), (n, 1))
        return astar, evaluate(driver, t, x, y, z, astar), True
    if isinstance(driver, ProjectionDriver):
        G = driver.G.value(t, x, y, z)
        query = G if G.ndim == 2 else G[:, None]
    elif isinstance(driver, RegularizedProjectionDriver):
        G = driver.G.value(t, x, y, z)
        query = (G if G.ndim == 2 else G[:, None]) / (1.0 + driver.eps)
    elif isinstance(driver, GRegularizedDriver):
        # complete the square: argmax_a <a,c> - (eps/2)||a-a0||^2
        query = driver.a0 + embed_zz(z) / (2.0 * driver.eps)
    else:
        raise DriverError(f"unknown driver {driver!r}")
    astar, _ = uset.project_batch(query)
    return astar, evaluate(driver, t, x, y, z, astar), False


def effective_driver(driver, uset, t, x, y, z):
    """Value of max_a F; astar is None for the g_limit variant."""
    if isinstance(driver, GLimitDriver):
        vals, _ = uset.linear_max_batch(0.5 * embed_zz(z))
        return vals, None
    astar, vals, _ = maximizer(driver, uset, t, x, y, z)
    return vals, astar


def maximizer_oracle(driver, uset, t, x, y, z, grid_step):
    """Exhaustive grid search over the set; single state only, dim <= 3."""
    if uset.dim > 3:
        raise DriverError("grid oracle supported for ambient dim <= 3 only")
    pts = grid_cover(uset, grid_step)
    if len(pts) == 0:
        raise SetError("grid cover is empty; decrease grid_step")
    t, x, y, z = _batch_args(t, x, y, z)
    if x.shape[0] != 1:
        raise DriverError("oracle evaluates a single state at a time")
    vals = evaluate(driver,
                    t,
                    np.broadcast_to(x, (len(pts), x.shape[1])),
                    np.broadcast_to(y, (len(pts),)),
                    np.broadcast_to(z, (len(pts), z.shape[1])),
                    pts)
    i = int(np.argmax(vals))
    return pts[i].copy(), float(vals[i])


def empirical_lipschitz(driver, uset, sample_box, n_pairs, seed):
    """Sampled lower bound on the Lipschitz constant of max_a F in (y, z).

    ``sample_box`` is a pair (lo, hi) over the stacked (y, z) coordinates.
    """
    lo = np.atleast_1d(np.asarray(sample_box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(sample_box[1], dtype=float))
    if lo.size != hi.size or np.any(hi <= lo):
        raise DriverError("degenerate sample box")
    rng = np.random.default_rng(seed)
    dim_b = lo.size - 1
    if dim_b < 1:
        raise DriverError("sample box must cover (y, z) with dim_b >= 1")
    u = rng.uniform(lo, hi, size=(n_pairs, lo.size))
    v = rng.uniform(lo, hi, size=(n_pairs, lo.size))
    x0 = np.zeros((1, 1))
    f_u, _ = effective_driver(driver, uset, 0.0, x0, u[:, 0], u[:, 1:])
    f_v, _ = effective_driver(driver, uset, 0.0, x0, v[:, 0], v[:, 1:])
    denom = np.abs(u[:, 0] - v[:, 0]) + np.linalg.norm(u[:, 1:] - v[:, 1:], axis=1)
    ok = denom > 1e-12
    return float(np.max(np.abs(f_u[ok] - f_v[ok]) / denom[ok]))


def driver_depends_on_y(driver):
    if isinstance(driver, (ZeroDriver, GRegularizedDriver, GLimitDriver)):
        return False
    if isinstance(driver, AffineDriver):
        return driver.beta != 0.0
    return driver.h.depends_on_y() or driver.G.depends_on_y()
