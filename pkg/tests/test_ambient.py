import numpy as np
import pytest

from thetabsde.ambient import (AmbientError, as_point, embed, extract,
                               frobenius_inner, matrix_dim, sym_vec_dim)


def test_sym_vec_dim_roundtrip():
    for d in range(1, 10):
        assert matrix_dim(sym_vec_dim(d)) == d
    with pytest.raises(AmbientError):
        matrix_dim(4)  # not of the form d(d+1)/2


def test_embed_extract_roundtrip():
    rng = np.random.default_rng(0)
    for d in (1, 2, 3, 5):
        a = rng.standard_normal((d, d))
        m = a + a.T
        assert np.allclose(extract(embed(m)), m, atol=1e-14)


def test_embed_is_isometry():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 4))
    m = a + a.T
    # vector 2-norm equals Frobenius norm
    assert np.linalg.norm(embed(m)) == pytest.approx(np.linalg.norm(m), abs=1e-12)


def test_frobenius_inner_matches_trace():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))
    ma, mb = a + a.T, b + b.T
    assert frobenius_inner(embed(ma), embed(mb)) == pytest.approx(
        np.trace(ma.T @ mb), abs=1e-12)


def test_embed_rejects_nonsymmetric():
    with pytest.raises(AmbientError):
        embed(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_as_point_validation():
    assert as_point(1.5).shape == (1,)
    with pytest.raises(AmbientError):
        as_point(np.zeros((2, 2)))
    with pytest.raises(AmbientError):
        as_point([np.nan])
    with pytest.raises(AmbientError):
        as_point(np.zeros(65))  # above the supported ambient dimension
    with pytest.raises(AmbientError):
        as_point([1.0, 2.0], dim=3)
