"""Dense reference algorithms: SVD utilities, exact divide-and-conquer
anchoring, and the successive projection algorithm (SPA)."""

from dataclasses import dataclass

import numpy as np

from .sample_model import SampledMatrix


def as_dense(a):
    """Dense float64 copy of a SampledMatrix or array-like."""
    if isinstance(a, SampledMatrix):
        return a.to_dense()
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def dense_svd(a, k=None):
    """Truncated SVD ``(U, sigma, V)`` with ``U`` m-by-k and ``V`` n-by-k."""
    a = as_dense(a)
    U, sig, Vt = np.linalg.svd(a, full_matrices=False)
    if k is not None:
        U, sig, Vt = U[:, :k], sig[:k], Vt[:k]
    return U, sig, Vt.T


def numerical_rank(a, rtol=1e-10):
    sig = np.linalg.svd(as_dense(a), compute_uv=False)
    return int(np.sum(sig > rtol * sig[0])) if sig[0] > 0 else 0


def best_rank_k_error(a, k):
    """``min ||A - D||_F^2`` over rank-k D."""
    sig = np.linalg.svd(as_dense(a), compute_uv=False)
    return float(np.sum(sig[k:] ** 2))


def condition_number(a, k=None, rtol=1e-10):
    """sigma_max / sigma_k, with k the numerical rank when omitted."""
    sig = np.linalg.svd(as_dense(a), compute_uv=False)
    if k is None:
        k = int(np.sum(sig > rtol * sig[0]))
    if k < 1 or sig[k - 1] <= 0:
        return float("inf")
    return float(sig[0] / sig[k - 1])


def row_space_basis(a, k):
    """Orthonormal n-by-k basis of the top-k right singular subspace."""
    return dense_svd(a, k)[2]


def l1_normalize(a):
    a = as_dense(a)
    if np.any(a < 0):
        raise ValueError("expected a nonnegative matrix")
    sums = a.sum(axis=1)
    if np.any(sums <= 0):
        raise ValueError("zero rows cannot be l1-normalised")
    return a / sums[:, None]


def dca_winner(a, beta):
    """Row with the largest absolute projection on ``beta``; ties to the smallest index."""
    proj = np.abs(as_dense(a) @ np.asarray(beta, dtype=np.float64))
    return int(np.argmax(proj))


def exact_dca(a, k, s, rng=None, normalize=True, return_winners=False):
    """Divide-and-conquer anchoring with exact projections.

    Draws ``s`` uniform unit directions in the top-k row space, records the
    winner of each, and returns the sorted union (plus the per-projection
    winners and directions when ``return_winners`` is set).
    """
    a = l1_normalize(a) if normalize else as_dense(a)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    V = row_space_basis(a, k)
    P = a @ V
    winners, xs = [], []
    for _ in range(s):
        x = rng.standard_normal(V.shape[1])
        x /= np.linalg.norm(x)
        winners.append(int(np.argmax(np.abs(P @ x))))
        xs.append(x)
    anchors = sorted(set(winners))
    if return_winners:
        return anchors, winners, np.array(xs)
    return anchors


@dataclass
class SpaResult:
    anchors: list
    early_stop: bool
    residual_norms: list


def spa(a, k, normalize=True, tol=1e-10):
    """Successive projection: pick the max-norm row, project it out, repeat.

    Stops early (``early_stop``) when every residual row is below ``tol``
    times the largest initial row norm. Ties go to the smallest index.
    """
    R = l1_normalize(a) if normalize else as_dense(a).copy()
    if not 1 <= k <= min(R.shape):
        raise ValueError(f"k={k} must lie in [1, min(m, n)]")
    R = R.copy()
    norms = np.einsum("ij,ij->i", R, R)
    scale = norms.max()
    anchors, picked = [], []
    for _ in range(k):
        j = int(np.argmax(norms))
        if norms[j] <= tol * tol * scale or scale == 0:
            return SpaResult(anchors, True, picked)
        anchors.append(j)
        picked.append(float(np.sqrt(norms[j])))
        u = R[j] / np.sqrt(norms[j])
        R -= np.outer(R @ u, u)
        norms = np.einsum("ij,ij->i", R, R)
    return SpaResult(anchors, False, picked)
