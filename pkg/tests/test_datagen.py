import hashlib
import json
import math

import numpy as np
import pytest

from anchorseek.baselines import condition_number, exact_dca, spa
from anchorseek.datagen import generate, read_sidecar, write_instance
from anchorseek.io import read_matrix


def test_k_equals_m_gives_identity_mixing():
    inst = generate(4, 4, 10, None, 0.2, 0)
    np.testing.assert_array_equal(inst.F, np.eye(4))
    assert list(inst.anchors) == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", range(8))
def test_instance_invariants(seed):
    k, m, n, mu = 2 + seed % 4, 120, 40, 0.2
    inst = generate(k, m, n, 15.0, mu, seed)
    A, F, R = inst.A, inst.F, inst.anchors
    assert np.all(A >= 0)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(F @ A[R], A, atol=1e-12)
    np.testing.assert_array_equal(F[R], np.eye(k))
    np.testing.assert_allclose(F.sum(axis=1), 1.0, atol=1e-12)
    rest = np.setdiff1d(np.arange(m), R)
    assert F[rest].max() <= 1 - mu
    sig = np.linalg.svd(A, compute_uv=False)
    assert sig[k] <= 1e-10 * sig[0]
    assert inst.kappa == pytest.approx(condition_number(A, k), rel=1e-8)
    assert inst.kappa <= 15.0 * (1 + 1e-9)


def test_hand_built_midpoint():
    A = np.array([[1.0, 0, 0], [0, 1.0, 0], [0.5, 0.5, 0]])
    assert sorted(spa(A, 2).anchors) == [0, 1]


def test_kappa_target_is_met_by_blending():
    loose = generate(5, 200, 50, None, 0.2, 1)
    tight = generate(5, 200, 50, loose.kappa / 2, 0.2, 1)
    assert tight.blend > 0
    assert tight.kappa <= loose.kappa / 2 * (1 + 1e-9)


def test_unreachable_kappa_warns():
    with pytest.warns(RuntimeWarning):
        inst = generate(3, 50, 20, 1.0, 0.2, 2)
    assert inst.blend == 1.0 and inst.warnings


def test_invalid_parameters():
    with pytest.raises(ValueError):
        generate(5, 4, 10)
    with pytest.raises(ValueError):
        generate(2, 10, 10, margin=0.0)
    with pytest.raises(ValueError):
        generate(2, 10, 10, margin=0.6)
    with pytest.raises(ValueError):
        generate(1, 10, 10)


def test_spa_recovers_ground_truth_on_grid():
    for seed in range(30):
        for mu in (0.1, 0.2, 0.4):
            k = 2 + seed % 4
            inst = generate(k, 150, 40, 20.0, mu, seed)
            assert sorted(spa(inst.A, k).anchors) == [int(i) for i in inst.anchors]


def test_exact_dca_recovery_rate():
    hits = 0
    for seed in range(100):
        k = 2 + seed % 4
        inst = generate(k, 100, 30, None, 0.2, seed)
        s = math.ceil(3 * k * math.log(k))
        hits += exact_dca(inst.A, k, s, seed) == [int(i) for i in inst.anchors]
    assert hits >= 95


def test_anchor_positions_vary():
    firsts = {int(generate(3, 100, 20, None, 0.2, s).anchors[0]) for s in range(10)}
    assert len(firsts) > 3


def test_write_instance(tmp_path):
    inst = generate(3, 30, 12, 10.0, 0.2, 7)
    mtx, side = write_instance(inst, tmp_path / "inst")
    np.testing.assert_array_equal(read_matrix(mtx), inst.A)
    doc = read_sidecar(side)
    assert doc["anchors"] == [int(i) for i in inst.anchors]
    assert doc["seed"] == 7 and doc["params"]["k"] == 3
    assert doc["F_sha256"] == hashlib.sha256(inst.F.astype("<f8").tobytes()).hexdigest()
    again = generate(3, 30, 12, 10.0, 0.2, 7)
    mtx2, side2 = write_instance(again, tmp_path / "again.mtx")
    assert mtx.read_bytes() == mtx2.read_bytes()
    assert json.loads(side.read_text()) == json.loads(side2.read_text())
