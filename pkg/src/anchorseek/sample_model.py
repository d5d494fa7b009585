"""Length-squared sampling access to vectors and matrices.

A vector of length n is stored as an implicit complete binary tree in heap
order: node 1 is the root, node i has children 2i and 2i+1, and leaf i sits at
``base + i`` where ``base`` is n rounded up to a power of two. Leaves hold
``v_i**2``; interior nodes hold the sum of their children; the sign of each
entry is kept in a separate int8 array. Padding leaves have weight zero.

A matrix keeps one tree per row, one per column, and two more over the row
and column norms, all mutually consistent under :meth:`SampledMatrix.update`.
"""

import numpy as np
import scipy.sparse

from . import kernels

QUERIES, SAMPLES = 0, 1

# leaves store squares, so magnitudes beyond this would overflow
MAX_MAGNITUDE = 1e150


class ZeroNormError(ValueError):
    """Sampling was requested from an all-zero vector."""


def _base(n):
    return 1 << max(0, int(n - 1).bit_length())


def _resum(trees, base):
    lo = base // 2
    while lo >= 1:
        trees[..., lo:2 * lo] = trees[..., 2 * lo:4 * lo:2] + trees[..., 2 * lo + 1:4 * lo:2]
        lo //= 2


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise ValueError("entries must be finite")
    if np.any(np.abs(values) > MAX_MAGNITUDE):
        raise ValueError(f"entries above {MAX_MAGNITUDE:g} in magnitude cannot be stored squared")


def _as_generator(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


class SampledVector:
    """Vector with O(log n) update and O(log n) draws from ``D_v``.

    Build one with :meth:`from_values`. The constructor wraps existing storage
    and is how :class:`SampledMatrix` hands out row and column views.
    """

    def __init__(self, tree, signs, n, base, counts=None):
        self.tree = tree
        self.signs = signs
        self.n = n
        self.base = base
        self.counts = np.zeros(2, dtype=np.int64) if counts is None else counts
        self.node_visits = 0

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        n = values.shape[0]
        if n < 1:
            raise ValueError("cannot build a sampled vector from an empty sequence")
        _check_finite(values)
        base = _base(n)
        tree = np.zeros(2 * base)
        tree[base:base + n] = values * values
        _resum(tree, base)
        return cls(tree, np.sign(values).astype(np.int8), n, base)

    def __len__(self):
        return self.n

    @property
    def depth(self):
        return self.base.bit_length() - 1

    def _check(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range for length {self.n}")

    def query(self, i):
        self._check(i)
        self.counts[QUERIES] += 1
        return float(self.signs[i] * np.sqrt(self.tree[self.base + i]))

    def update(self, i, value):
        """Set entry i; returns the number of tree nodes rewritten."""
        self._check(i)
        value = float(value)
        _check_finite(value)
        self.signs[i] = np.sign(value)
        return kernels.update_path(self.tree, self.base, i, value * value)

    def norm2(self):
        return float(self.tree[1])

    def norm(self):
        return float(np.sqrt(self.tree[1]))

    def leaves(self):
        return self.tree[self.base:self.base + self.n]

    def density(self):
        """Exact ``D_v`` as a dense array."""
        total = self.norm2()
        if total <= 0.0:
            raise ZeroNormError("D_v is undefined for the zero vector")
        return self.leaves() / total

    def to_array(self):
        return self.signs * np.sqrt(self.leaves())

    def sample(self, rng, size=None):
        """Index i drawn with probability ``v_i**2 / ||v||**2``."""
        if self.tree[1] <= 0.0:
            raise ZeroNormError("cannot sample from the zero vector")
        rng = _as_generator(rng)
        us = rng.random(1 if size is None else size)
        idx, visits = kernels.descend(self.tree, self.base, us)
        self.node_visits += visits
        self.counts[SAMPLES] += us.shape[0]
        return int(idx[0]) if size is None else idx

    def rebuild(self):
        """Re-sum every interior node from the leaves."""
        _resum(self.tree, self.base)


class SampledMatrix:
    """Dense m-by-n matrix in the sample model.

    Access counters live in ``counts`` (entry/norm queries, samples) and are
    shared with the transposed view ``.T``.
    """

    def __init__(self, entries):
        if scipy.sparse.issparse(entries):
            entries = entries.toarray()
        a = np.asarray(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
        _check_finite(a)
        m, n = a.shape
        self.m, self.n = m, n
        self.base_n, self.base_m = _base(n), _base(m)
        sq = a * a
        self.row_trees = np.zeros((m, 2 * self.base_n))
        self.row_trees[:, self.base_n:self.base_n + n] = sq
        self.col_trees = np.zeros((n, 2 * self.base_m))
        self.col_trees[:, self.base_m:self.base_m + m] = sq.T
        self.row_signs = np.sign(a).astype(np.int8)
        self.col_signs = np.ascontiguousarray(self.row_signs.T)
        self.counts = np.zeros(2, dtype=np.int64)
        self.row_norms = SampledVector(np.zeros(2 * self.base_m), np.ones(m, dtype=np.int8),
                                       m, self.base_m, self.counts)
        self.col_norms = SampledVector(np.zeros(2 * self.base_n), np.ones(n, dtype=np.int8),
                                       n, self.base_n, self.counts)
        self.rebuild()
        self._T = None

    @classmethod
    def from_dense(cls, entries):
        return cls(entries)

    @property
    def shape(self):
        return self.m, self.n

    @property
    def T(self):
        """Transposed view sharing all storage."""
        if self._T is None:
            t = object.__new__(SampledMatrix)
            t.m, t.n = self.n, self.m
            t.base_n, t.base_m = self.base_m, self.base_n
            t.row_trees, t.col_trees = self.col_trees, self.row_trees
            t.row_signs, t.col_signs = self.col_signs, self.row_signs
            t.row_norms, t.col_norms = self.col_norms, self.row_norms
            t.counts = self.counts
            t._T = self
            self._T = t
        return self._T

    def rebuild(self):
        _resum(self.row_trees, self.base_n)
        _resum(self.col_trees, self.base_m)
        self.row_norms.leaves()[:] = self.row_trees[:, 1]
        self.row_norms.rebuild()
        self.col_norms.leaves()[:] = self.col_trees[:, 1]
        self.col_norms.rebuild()

    def _check(self, i, j):
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError(f"entry ({i}, {j}) out of range for shape {self.shape}")

    def row(self, i):
        """Read-only view of row i as a :class:`SampledVector`."""
        return SampledVector(self.row_trees[i], self.row_signs[i], self.n, self.base_n, self.counts)

    def col(self, j):
        return self.T.row(j)

    def query(self, i, j):
        self._check(i, j)
        self.counts[QUERIES] += 1
        return float(self.row_signs[i, j] * np.sqrt(self.row_trees[i, self.base_n + j]))

    def query_via_column(self, i, j):
        self._check(i, j)
        self.counts[QUERIES] += 1
        return float(self.col_signs[j, i] * np.sqrt(self.col_trees[j, self.base_m + i]))

    def entries(self, rows, cols):
        """Vectorised entry queries."""
        rows = np.asarray(rows, dtype=np.int64)
        self.counts[QUERIES] += rows.shape[0]
        return kernels.gather(self.row_trees, self.row_signs, self.base_n, rows, cols)

    def update(self, i, j, value):
        self._check(i, j)
        value = float(value)
        _check_finite(value)
        w = value * value
        sign = np.sign(value)
        self.row_signs[i, j] = sign
        self.col_signs[j, i] = sign
        kernels.update_path(self.row_trees[i], self.base_n, j, w)
        kernels.update_path(self.col_trees[j], self.base_m, i, w)
        kernels.update_path(self.row_norms.tree, self.base_m, i, self.row_trees[i, 1])
        kernels.update_path(self.col_norms.tree, self.base_n, j, self.col_trees[j, 1])

    def fro2(self):
        return float(self.row_norms.tree[1])

    def fro_norm(self):
        return float(np.sqrt(self.fro2()))

    def row_norm(self, i):
        self.counts[QUERIES] += 1
        return float(np.sqrt(self.row_trees[i, 1]))

    def col_norm(self, j):
        self.counts[QUERIES] += 1
        return float(np.sqrt(self.col_trees[j, 1]))

    def row_norms2(self):
        return self.row_norms.leaves()

    def col_norms2(self):
        return self.col_norms.leaves()

    def sample_row_index(self, rng, size=None):
        """Row index from ``D_Ã``."""
        if self.fro2() <= 0.0:
            raise ZeroNormError("cannot sample rows of the zero matrix")
        return self.row_norms.sample(rng, size)

    def sample_col_index(self, rng, size=None):
        return self.T.sample_row_index(rng, size)

    def sample_from_row(self, i, rng, size=None):
        """Column index drawn from ``D_{A_(i)}``; ``i`` may be an array of rows."""
        rows = np.atleast_1d(np.asarray(i, dtype=np.int64))
        scalar = np.ndim(i) == 0
        if scalar and size is not None:
            rows = np.full(size, rows[0])
        if np.any((rows < 0) | (rows >= self.m)):
            raise IndexError("row index out of range")
        if np.any(self.row_trees[rows, 1] <= 0.0):
            raise ZeroNormError("cannot sample from a zero row")
        us = _as_generator(rng).random(rows.shape[0])
        idx, _ = kernels.descend_rows(self.row_trees, rows, self.base_n, us)
        self.counts[SAMPLES] += rows.shape[0]
        return int(idx[0]) if scalar and size is None else idx

    def sample_from_col(self, j, rng, size=None):
        return self.T.sample_from_row(j, rng, size)

    def to_dense(self):
        return self.row_signs * np.sqrt(self.row_trees[:, self.base_n:self.base_n + self.n])

    def reset_counts(self):
        self.counts[:] = 0

    @property
    def accesses(self):
        return {"queries": int(self.counts[QUERIES]), "samples": int(self.counts[SAMPLES])}
