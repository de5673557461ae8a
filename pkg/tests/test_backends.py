"""Cross-backend agreement: the compiled core and the NumPy fallback must
implement the same contract to floating-point accuracy."""

import numpy as np
import pytest

from mmdfuse.backends import available_backends, get_backend, set_backend


def test_both_backends_available():
    # The build ships the compiled extension; the fallback always exists.
    assert "numpy" in available_backends()
    assert "cython" in available_backends()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unknown backend"):
        get_backend("fortran")
    with pytest.raises(ValueError, match="unknown backend"):
        set_backend("fortran")


@pytest.mark.parametrize("shape", [(5, 1), (23, 3), (40, 7)])
def test_distance_matrices_agree(shape, rng):
    x = rng.standard_normal(shape)
    pairs = [get_backend(name) for name in available_backends()]
    ref = pairs[0]
    for other in pairs[1:]:
        np.testing.assert_allclose(
            ref.sq_l2_distances(x), other.sq_l2_distances(x), rtol=0, atol=1e-12
        )
        np.testing.assert_allclose(
            ref.l1_distances(x), other.l1_distances(x), rtol=0, atol=1e-12
        )


def test_distance_matrix_contract(backend_name, rng):
    b = get_backend(backend_name)
    x = rng.standard_normal((17, 4))
    for mat in (b.sq_l2_distances(x), b.l1_distances(x)):
        assert mat.shape == (17, 17)
        np.testing.assert_array_equal(np.diagonal(mat), np.zeros(17))
        np.testing.assert_array_equal(mat, mat.T)
        assert (mat >= 0).all()


def test_batch_mmd_agrees_across_backends(rng):
    n, m = 21, 17
    z = rng.standard_normal((n + m, 3))
    gram = np.exp(-get_backend("numpy").sq_l2_distances(z) / 2.0)
    perms = np.vstack([rng.permutation(n + m) for _ in range(64)]).astype(np.int64)
    xidx = np.ascontiguousarray(perms[:, :n])
    results = {
        name: get_backend(name).batch_mmd(gram, xidx, n, m)
        for name in available_backends()
    }
    values = list(results.values())
    for other in values[1:]:
        np.testing.assert_allclose(values[0], other, rtol=0, atol=1e-12)


def test_batch_mmd_rejects_inconsistent_shapes(backend_name, rng):
    b = get_backend(backend_name)
    gram = np.eye(10)
    xidx = np.arange(4, dtype=np.int64).reshape(1, 4)
    with pytest.raises(ValueError):
        b.batch_mmd(gram, xidx, 4, 5)  # n + m != gram size
    with pytest.raises(ValueError):
        b.batch_mmd(gram, xidx, 5, 5)  # row width != n
