"""Sampling kernels: matrix-product estimation and rejection sampling.

``estimate_product`` estimates ``M = L A R`` by drawing ``s ~ D_Ã`` and then
``t ~ D_{A_(s)}``. Each draw gives the unbiased single-sample estimate
``L[:, s] R[t, :] ||A||_F^2 / A[s, t]`` for every entry at once. Estimates are
combined by median-of-means.

``rejection_sample`` draws from ``D_{V w}`` for approximately orthonormal
columns V. It proposes column j with probability proportional to
``w_j^2 ||V_j||^2``, draws s from ``D_{V_j}``, and accepts with probability
``(V w)_s^2 / (k sum_j (w_j V_sj)^2)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fkv import SketchDescription
from .sample_model import QUERIES, SAMPLES, SampledMatrix, _as_generator

BUDGET_FACTOR = 64


class RejectionBudgetExceeded(RuntimeError):
    """No proposal was accepted within the configured budget."""

    def __init__(self, stats):
        super().__init__(
            f"rejection sampling gave up after {stats.budget} proposals "
            f"({stats.accepted} samples drawn); the columns are likely far from orthonormal")
        self.stats = stats


@dataclass
class ProductEstimate:
    matrix: np.ndarray
    zeta: float
    eta: float
    eta_entry: float
    groups: int
    group_size: int
    bound: float

    @property
    def samples_per_entry(self):
        return self.groups * self.group_size


@dataclass
class RejectionSampleStats:
    accepted: int
    proposed: int
    inner_proposals: int
    queries: int
    samples: int
    gamma: float
    budget: int

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else float("nan")

    def as_dict(self):
        d = dict(self.__dict__)
        d["acceptance_rate"] = self.acceptance_rate
        return d


class DenseColumns:
    """Explicit columns ``V`` (n-by-k) behind the same sampling interface as a sketch."""

    def __init__(self, V):
        V = np.asarray(V, dtype=np.float64)
        if V.ndim == 1:
            V = V[:, None]
        self.V = V
        self._mat = SampledMatrix(V.T)

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def length(self):
        return self.V.shape[0]

    @property
    def counts(self):
        return self._mat.counts

    def norms2(self):
        return self._mat.row_norms2().copy()

    def entries(self, idx):
        return self.V[np.asarray(idx, dtype=np.int64)]

    def dense(self):
        return self.V

    def sample_column(self, j, rng, size=None):
        return self._mat.sample_from_row(j, rng, size)

    def stack(self):
        k = self.rank
        m = self._mat
        return (m.row_trees, m.row_signs, m.base_n, m.row_norms2(),
                np.arange(k, dtype=np.int64), np.eye(k), m.row_norms2().copy())


def _counts_of(cols):
    return cols.source.counts if isinstance(cols, SketchDescription) else cols.counts


def rejection_sample(vhat, w, gamma, rng, size=None, budget_factor=BUDGET_FACTOR):
    """Draw from (approximately) ``D_{vhat @ w}``.

    Parameters
    ----------
    vhat : SketchDescription, DenseColumns or array of shape (n, k)
    w : array of length k
    gamma : float
        Failure budget; each draw may use ``budget_factor * k^2 * ln(1/gamma)``
        proposals before :class:`RejectionBudgetExceeded` is raised.
    size : int, optional
        Number of draws; a scalar index is returned when omitted.

    Returns
    -------
    (index or array of indices, RejectionSampleStats)
    """
    if not isinstance(vhat, (SketchDescription, DenseColumns)):
        vhat = DenseColumns(vhat)
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != vhat.rank:
        raise ValueError(f"w has length {w.shape[0]}, expected {vhat.rank}")
    if not np.all(np.isfinite(w)) or not np.any(w != 0.0):
        raise ValueError("w must be finite and nonzero")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    rng = _as_generator(rng)
    trees, signs, base, norm2_stack, T, C, nu2 = vhat.stack()
    k, p = vhat.rank, T.shape[0]
    log_term = max(1.0, math.log(1.0 / gamma))
    outer_budget = math.ceil(budget_factor * k * k * log_term)
    inner_budget = math.ceil(budget_factor * p * p * log_term)
    n = 1 if size is None else int(size)
    out, raw, status = kernels.combo_reject(trees, signs, base, norm2_stack, T, C, nu2, w,
                                            n, rng, outer_budget, inner_budget)
    counts = _counts_of(vhat)
    counts[QUERIES] += raw[kernels.QUERIES]
    counts[SAMPLES] += raw[kernels.SAMPLES]
    stats = RejectionSampleStats(
        accepted=int(raw[kernels.ACCEPTED]), proposed=int(raw[kernels.OUTER]),
        inner_proposals=int(raw[kernels.INNER]), queries=int(raw[kernels.QUERIES]),
        samples=int(raw[kernels.SAMPLES]), gamma=gamma, budget=outer_budget)
    if status != 0:
        raise RejectionBudgetExceeded(stats)
    return (int(out[0]) if size is None else out), stats


def _left_rows(left, s):
    if isinstance(left, SketchDescription):
        return left.entries(s)
    return left[:, s].T


def _right_rows(right, t):
    if isinstance(right, SketchDescription):
        return right.entries(t)
    return right[t, :]


def _fro(op):
    if isinstance(op, SketchDescription):
        # columns are approximately unit vectors
        return math.sqrt(op.rank)
    return float(np.linalg.norm(op))


def draw_values(a, left, right, s, t):
    """Single-draw estimates for draws ``(s, t)``; shape (len(s), k1, k2)."""
    s = np.asarray(s, dtype=np.int64)
    t = np.asarray(t, dtype=np.int64)
    scale = a.fro2() / a.entries(s, t)
    L = _left_rows(left, s) * scale[:, None]
    return L[:, :, None] * _right_rows(right, t)[:, None, :]


def estimate_product(a, left, right, zeta, eta, rng=None, constant=4.0):
    """Median-of-means estimate of ``left @ A @ right``.

    ``left`` is a (k1, m) array or a left sketch (read as its transpose);
    ``right`` is an (n, k2) array or a right sketch. Every draw updates all
    k1*k2 entries. Each entry gets ``ceil(ln(1/eta'))`` groups of
    ``ceil(constant / zeta^2)`` draws, with ``eta' = 1 - (1 - eta)^(1/(k1 k2))``.
    """
    if not (0.0 < zeta < 1.0 and 0.0 < eta < 1.0):
        raise ValueError("zeta and eta must lie in (0, 1)")
    if a.fro2() <= 0.0:
        raise ValueError("cannot estimate a product with the zero matrix")
    for op in (left, right):
        if not isinstance(op, SketchDescription) and not np.all(np.isfinite(op)):
            raise ValueError("left and right factors must be finite")
    if isinstance(left, SketchDescription):
        if left.side != "col" or left.length != a.m:
            raise ValueError("left sketch must describe left singular vectors of A")
        k1 = left.rank
    else:
        left = np.asarray(left, dtype=np.float64)
        if left.shape[1] != a.m:
            raise ValueError(f"left factor has {left.shape[1]} columns, A has {a.m} rows")
        k1 = left.shape[0]
    if isinstance(right, SketchDescription):
        if right.side != "row" or right.length != a.n:
            raise ValueError("right sketch must describe right singular vectors of A")
        k2 = right.rank
    else:
        right = np.asarray(right, dtype=np.float64)
        if right.shape[0] != a.n:
            raise ValueError(f"right factor has {right.shape[0]} rows, A has {a.n} columns")
        k2 = right.shape[1]

    rng = _as_generator(rng)
    eta_entry = 1.0 - (1.0 - eta) ** (1.0 / (k1 * k2))
    groups = max(1, math.ceil(math.log(1.0 / eta_entry)))
    size = math.ceil(constant / zeta ** 2)
    fro2 = a.fro2()
    means = np.empty((groups, k1, k2))
    for g in range(groups):
        s = a.sample_row_index(rng, size)
        t = a.sample_from_row(s, rng)
        scale = fro2 / a.entries(s, t)
        L = _left_rows(left, s) * scale[:, None]
        means[g] = L.T @ _right_rows(right, t) / size
    bound = zeta * math.sqrt(fro2) * _fro(left) * _fro(right)
    return ProductEstimate(matrix=np.median(means, axis=0), zeta=zeta, eta=eta,
                           eta_entry=eta_entry, groups=groups, group_size=size, bound=bound)
