"""The numba and numpy backends must agree: bit for bit on the tree kernels,
in distribution on the rejection sampler."""

import numpy as np
import pytest

from anchorseek.kernels import _numpy
from anchorseek.sample_model import SampledMatrix

_numba = pytest.importorskip("anchorseek.kernels._numba")


@pytest.fixture(scope="module")
def mat():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((37, 23))
    A[rng.random(A.shape) < 0.3] = 0.0
    A[4] = 0.0
    A[5, :] = 0.0
    A[5, 22] = 2.0
    return SampledMatrix(A)


def test_descend_identical(mat):
    us = np.random.default_rng(1).random(5000)
    tree = mat.row_norms.tree
    i1, v1 = _numba.descend(tree, mat.base_m, us)
    i2, v2 = _numpy.descend(tree, mat.base_m, us)
    np.testing.assert_array_equal(i1, i2)
    assert v1 == v2
    assert np.all(mat.row_norms2()[i1] > 0)


def test_descend_rows_identical(mat):
    rng = np.random.default_rng(2)
    rows = rng.choice(np.flatnonzero(mat.row_norms2() > 0), size=5000)
    us = rng.random(5000)
    i1, _ = _numba.descend_rows(mat.row_trees, rows, mat.base_n, us)
    i2, _ = _numpy.descend_rows(mat.row_trees, rows, mat.base_n, us)
    np.testing.assert_array_equal(i1, i2)
    assert np.all(mat.to_dense()[rows, i1] != 0)


def test_edge_uniforms(mat):
    us = np.array([0.0, 1.0 - 2 ** -53])
    tree = mat.row_norms.tree
    np.testing.assert_array_equal(_numba.descend(tree, mat.base_m, us)[0],
                                  _numpy.descend(tree, mat.base_m, us)[0])


def test_gather_identical(mat):
    rng = np.random.default_rng(3)
    rows, cols = rng.integers(37, size=999), rng.integers(23, size=999)
    g1 = _numba.gather(mat.row_trees, mat.row_signs, mat.base_n, rows, cols)
    g2 = _numpy.gather(mat.row_trees, mat.row_signs, mat.base_n, rows, cols)
    np.testing.assert_array_equal(g1, g2)
    np.testing.assert_array_equal(g1, mat.to_dense()[rows, cols])


def test_update_path_identical():
    rng = np.random.default_rng(4)
    t1 = np.zeros(64)
    t2 = np.zeros(64)
    for _ in range(200):
        i, w = int(rng.integers(32)), float(rng.random())
        assert _numba.update_path(t1, 32, i, w) == _numpy.update_path(t2, 32, i, w) == 6
    np.testing.assert_array_equal(t1, t2)


def test_combo_entries_identical(mat):
    rng = np.random.default_rng(5)
    T = rng.integers(37, size=9)
    C = rng.standard_normal((9, 3))
    idx = rng.integers(23, size=6000)
    e1 = _numba.combo_entries(mat.row_trees, mat.row_signs, mat.base_n, T, C, idx)
    e2 = _numpy.combo_entries(mat.row_trees, mat.row_signs, mat.base_n, T, C, idx)
    np.testing.assert_allclose(e1, e2, rtol=1e-13, atol=1e-13)
    dense = mat.to_dense()
    np.testing.assert_allclose(e1, (dense[T][:, idx]).T @ C, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("backend", [_numpy, _numba], ids=["numpy", "numba"])
def test_combo_reject_distribution(backend):
    rng = np.random.default_rng(6)
    V = np.linalg.qr(rng.standard_normal((30, 3)))[0]
    a = SampledMatrix(V.T)
    w = np.array([0.4, -1.0, 0.7])
    out, stats, status = backend.combo_reject(a.row_trees, a.row_signs, a.base_n, a.row_norms2(),
                                              np.arange(3), np.eye(3), a.row_norms2().copy(), w,
                                              60_000, np.random.default_rng(7), 10 ** 5, 10 ** 5)
    assert status == 0
    target = (V @ w) ** 2 / np.sum((V @ w) ** 2)
    emp = np.bincount(out, minlength=30) / out.size
    assert 0.5 * np.abs(emp - target).sum() < 0.015
    assert stats[0] == 60_000
    assert stats[1] >= stats[0]


@pytest.mark.parametrize("backend", [_numpy, _numba], ids=["numpy", "numba"])
def test_combo_reject_budget(backend):
    # two nearly parallel columns with opposite weights: V w is tiny
    V = np.zeros((8, 2))
    V[:, 0] = 1 / np.sqrt(8)
    V[:, 1] = V[:, 0]
    V[0, 1] += 1e-4
    a = SampledMatrix(V.T)
    out, stats, status = backend.combo_reject(a.row_trees, a.row_signs, a.base_n, a.row_norms2(),
                                              np.arange(2), np.eye(2), a.row_norms2().copy(),
                                              np.array([1.0, -1.0]), 5,
                                              np.random.default_rng(0), 50, 1000)
    assert status == 1
    assert stats[1] <= 50 * 5
