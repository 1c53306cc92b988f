"""Ambient space for uncertainty sets.

Symmetric d x d matrices are flattened to vectors of length d(d+1)/2 with
the off-diagonal entries stored once, scaled by sqrt(2), so that the
Euclidean norm of the vector equals the Frobenius norm of the matrix. Plain
Euclidean vectors pass through unchanged, which lets all set geometry run on
one code path.
"""

import numpy as np

MAX_DIM = 64

_SQRT2 = np.sqrt(2.0)


class AmbientError(ValueError):
    pass


def as_point(x, dim=None):
    """Validate and return a 1-d float64 ambient point."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1:
        raise AmbientError(f"ambient point must be 1-d, got shape {p.shape}")
    if p.size == 0 or p.size > MAX_DIM:
        raise AmbientError(f"ambient dim must be in [1, {MAX_DIM}], got {p.size}")
    if not np.all(np.isfinite(p)):
        raise AmbientError("ambient point has non-finite entries")
    if dim is not None and p.size != dim:
        raise AmbientError(f"dimension mismatch: expected {dim}, got {p.size}")
    return p


def sym_vec_dim(d):
    """Length of the flattened vector for a d x d symmetric matrix."""
    return d * (d + 1) // 2


def matrix_dim(n):
    """Inverse of sym_vec_dim; raises if n is not of the form d(d+1)/2."""
    d = int((np.sqrt(8 * n + 1) - 1) / 2)
    if sym_vec_dim(d) != n:
        raise AmbientError(f"{n} is not a symmetric-matrix vector length")
    return d


def embed(m, atol=0.0):
    """Flatten a symmetric matrix to ambient coordinates (isometry)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise AmbientError(f"expected square matrix, got shape {m.shape}")
    d = m.shape[0]
    if sym_vec_dim(d) > MAX_DIM:
        raise AmbientError(f"matrix dim {d} exceeds supported size")
    if not np.allclose(m, m.T, rtol=0.0, atol=atol):
        raise AmbientError("matrix is not symmetric")
    out = np.empty(sym_vec_dim(d))
    out[:d] = np.diag(m)
    k = d
    for i in range(d):
        for j in range(i + 1, d):
            out[k] = _SQRT2 * m[i, j]
            k += 1
    return out


def extract(p, d=None):
    """Rebuild the symmetric matrix from ambient coordinates."""
    p = as_point(p)
    if d is None:
        d = matrix_dim(p.size)
    elif sym_vec_dim(d) != p.size:
        raise AmbientError(f"vector length {p.size} does not match matrix dim {d}")
    m = np.zeros((d, d))
    np.fill_diagonal(m, p[:d])
    k = d
    for i in range(d):
        for j in range(i + 1, d):
            m[i, j] = m[j, i] = p[k] / _SQRT2
            k += 1
    return m


def frobenius_inner(a, b):
    """Inner product of ambient points; equals Tr(A^T B) for embedded matrices."""
    a = as_point(a)
    b = as_point(b, dim=a.size)
    return float(a @ b)
