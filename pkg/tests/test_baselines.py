import math

import mpmath
import numpy as np
import pytest

from anchorseek.baselines import (
    best_rank_k_error,
    condition_number,
    dense_svd,
    exact_dca,
    l1_normalize,
    numerical_rank,
    spa,
)
from anchorseek.datagen import generate


def test_diagonal_singular_values():
    U, s, V = dense_svd(np.diag([1.0, -4.0, 2.5]))
    np.testing.assert_allclose(s, [4.0, 2.5, 1.0])


def test_full_rank_truncation_reconstructs():
    A = np.random.default_rng(0).standard_normal((8, 5))
    U, s, V = dense_svd(A, 5)
    np.testing.assert_allclose(U @ np.diag(s) @ V.T, A, atol=1e-12)
    assert best_rank_k_error(A, 5) == pytest.approx(0.0, abs=1e-20)


def test_against_high_precision_reference():
    A = np.random.default_rng(1).standard_normal((20, 10))
    mpmath.mp.dps = 40
    ref = mpmath.svd_r(mpmath.matrix(A.tolist()), compute_uv=False)
    ref = np.array(sorted((float(x) for x in ref), reverse=True))
    _, s, _ = dense_svd(A)
    np.testing.assert_allclose(s, ref, rtol=1e-12)


def test_best_rank_k_error_is_minimal():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((15, 9))
    U, s, V = dense_svd(A, 3)
    err = np.linalg.norm(A - U @ np.diag(s) @ V.T) ** 2
    assert err == pytest.approx(best_rank_k_error(A, 3), rel=1e-8)
    for _ in range(20):
        Q = np.linalg.qr(rng.standard_normal((9, 3)))[0]
        assert np.linalg.norm(A - A @ Q @ Q.T) ** 2 >= err * (1 - 1e-8)


def test_condition_number_and_rank():
    A = np.diag([10.0, 2.0, 0.0])
    assert numerical_rank(A) == 2
    assert condition_number(A) == pytest.approx(5.0)
    assert condition_number(A, 3) == math.inf


def test_exact_dca_simplex_vertices():
    rng = np.random.default_rng(3)
    k = 4
    inner = rng.dirichlet(np.ones(k), size=30) @ np.eye(k)
    A = np.vstack([inner[:10], np.eye(k), inner[10:]])
    s = math.ceil(3 * k * math.log(k)) * 3
    assert exact_dca(A, k, s, 4) == list(range(10, 14))


def test_exact_dca_duplicated_anchor():
    A = np.tile([[0.1, 0.6, 0.3]], (9, 1))
    assert len(exact_dca(A, 1, 5, 0)) == 1


def test_exact_dca_is_reproducible():
    inst = generate(3, 60, 20, None, 0.2, 5)
    assert exact_dca(inst.A, 3, 12, 6) == exact_dca(inst.A, 3, 12, 6)
    anchors, winners, xs = exact_dca(inst.A, 3, 12, 6, return_winners=True)
    assert len(winners) == 12 and xs.shape == (12, 3)


def test_spa_scaled_basis_plus_interior():
    rng = np.random.default_rng(7)
    basis = np.diag([2.0, 5.0, 0.5])
    interior = rng.dirichlet(np.ones(3), size=12) @ basis
    A = np.vstack([interior[:4], basis, interior[4:]])
    assert sorted(spa(A, 3).anchors) == [4, 5, 6]


def test_spa_k_one_is_max_norm_normalized_row():
    A = np.random.default_rng(8).random((10, 4))
    N = l1_normalize(A)
    assert spa(A, 1).anchors == [int(np.argmax(np.linalg.norm(N, axis=1)))]


def test_spa_permutation_equivariance():
    inst = generate(4, 40, 15, None, 0.2, 9)
    perm = np.random.default_rng(10).permutation(40)
    base = spa(inst.A, 4).anchors
    permuted = spa(inst.A[perm], 4).anchors
    assert [int(perm[i]) for i in permuted] == base


def test_spa_rank_deficiency_stops_early():
    A = np.array([[1.0, 0, 0], [0, 1.0, 0], [0.5, 0.5, 0]])
    res = spa(A, 3)
    assert res.early_stop and len(res.anchors) == 2


def test_spa_scale_invariance():
    inst = generate(3, 30, 10, None, 0.2, 11)
    B = inst.A * np.random.default_rng(12).uniform(0.5, 20, size=(30, 1))
    assert spa(B, 3).anchors == spa(inst.A, 3).anchors


def test_spa_and_exact_dca_agree_on_clean_data():
    for seed in range(50):
        k = 2 + seed % 5
        inst = generate(k, 200, 60, None, 0.2, seed)
        dca = exact_dca(inst.A, k, 40 * k, seed)
        assert sorted(spa(inst.A, k).anchors) == dca == [int(i) for i in inst.anchors]
