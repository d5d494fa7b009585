"""Monte-Carlo low-rank sketch from sample-model access.

The sketch samples p rows of A by squared norm, rescales them into S, samples
q columns of S the same way into W, and keeps the top singular pairs of the
small p-by-q matrix W. The approximate right singular vectors are never
formed; column j of V̂ is ``S^T u_j / sigma_j``, a linear combination of p
rows of A, and every query or draw goes through that identity.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .sample_model import QUERIES, SampledMatrix, _as_generator


def sample_size(k, epsilon, delta, constant=1.0):
    """``constant * ceil(k^4 / eps^2) * ceil(ln(1/delta))`` rows (or columns)."""
    return max(1, math.ceil(constant * math.ceil(k ** 4 / epsilon ** 2)
                            * max(1, math.ceil(math.log(1.0 / delta)))))


@dataclass(eq=False)
class SketchDescription:
    """Short description of k' approximate singular vectors.

    ``side == "row"`` describes right singular vectors (length n), built
    from rows of A; ``side == "col"`` describes left singular vectors
    (length m), built from columns of A. ``rows`` indexes the sampled
    vectors of that source, with multiplicity.
    """

    side: str
    rows: np.ndarray
    weights: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    k: int
    epsilon: float
    delta: float
    p: int
    q: int
    exact_rows: bool
    exact_cols: bool
    matrix: SampledMatrix = field(repr=False)
    trials: int = 1
    residual_estimate: float = float("nan")
    seed: int = None

    def __post_init__(self):
        scaled = self.weights[:, None] * self.u
        # a zero sigma leaves a zero column, which sample_column refuses
        self.coefficients = np.divide(scaled, self.sigma[None, :], out=np.zeros_like(scaled),
                                      where=self.sigma[None, :] > 0)

    @property
    def source(self):
        return self.matrix if self.side == "row" else self.matrix.T

    @property
    def rank(self):
        return int(self.sigma.shape[0])

    @property
    def length(self):
        return self.source.n

    @property
    def exact(self):
        return self.exact_rows and self.exact_cols

    def stack(self):
        """Arrays consumed by the sampling kernels."""
        src = self.source
        return (src.row_trees, src.row_signs, src.base_n, src.row_norms2(),
                self.rows, self.coefficients, np.ones(self.rank))

    def entries(self, idx):
        """Rows ``idx`` of V̂ as an array of shape (len(idx), k')."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.length):
            raise IndexError("sketch row index out of range")
        src = self.source
        src.counts[QUERIES] += self.rows.shape[0] * idx.shape[0]
        return kernels.combo_entries(src.row_trees, src.row_signs, src.base_n,
                                     self.rows, self.coefficients, idx)

    def entry(self, row, j):
        if not 0 <= j < self.rank:
            raise IndexError(f"column {j} out of range for rank {self.rank}")
        return float(self.entries([row])[0, j])

    def dense(self):
        """Materialise V̂ (length-by-k'); test and diagnostic use only."""
        return self.entries(np.arange(self.length))

    def sample_column(self, j, rng, size=None, gamma=1e-3):
        """Index drawn from ``D`` of column j."""
        from .estimate import rejection_sample

        if not 0 <= j < self.rank:
            raise IndexError(f"column {j} out of range for rank {self.rank}")
        if not self.sigma[j] > 0.0:
            raise ValueError("degenerate sketch column")
        w = np.zeros(self.rank)
        w[j] = 1.0
        idx, _ = rejection_sample(self, w, gamma, rng, size=1 if size is None else size)
        return int(idx[0]) if size is None else idx

    def to_json(self):
        doc = {
            "side": self.side,
            "rows": self.rows.tolist(),
            "weights": self.weights.tolist(),
            "u": self.u.tolist(),
            "sigma": self.sigma.tolist(),
            "params": {"k": self.k, "epsilon": self.epsilon, "delta": self.delta,
                       "p": self.p, "q": self.q, "exact_rows": self.exact_rows,
                       "exact_cols": self.exact_cols, "trials": self.trials,
                       "residual_estimate": self.residual_estimate,
                       "shape": list(self.matrix.shape)},
            "seed": self.seed,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text, matrix):
        doc = json.loads(text)
        par = doc["params"]
        if tuple(par["shape"]) != matrix.shape:
            raise ValueError("sketch was built for a matrix of a different shape")
        return cls(side=doc["side"], rows=np.asarray(doc["rows"], dtype=np.int64),
                   weights=np.asarray(doc["weights"]), u=np.asarray(doc["u"]).reshape(len(doc["rows"]), -1),
                   sigma=np.asarray(doc["sigma"]), k=par["k"], epsilon=par["epsilon"],
                   delta=par["delta"], p=par["p"], q=par["q"], exact_rows=par["exact_rows"],
                   exact_cols=par["exact_cols"], matrix=matrix, trials=par["trials"],
                   residual_estimate=par["residual_estimate"], seed=doc["seed"])


def _draw(src, p, q, rng):
    """One round of row then column sampling; returns (T, weights, W)."""
    m, n = src.m, src.n
    fro2 = src.fro2()
    norms2 = src.row_norms2()
    if p >= m:
        T = np.arange(m, dtype=np.int64)
        weights = np.ones(m)
    else:
        T = src.sample_row_index(rng, p)
        weights = np.sqrt(fro2 / (p * norms2[T]))
        src.counts[QUERIES] += p
    W = _column_block(src, T, weights, q, rng)
    return T, weights, W


def _column_block(src, T, weights, q, rng):
    p, n = T.shape[0], src.n
    if q >= n:
        cols = np.arange(n, dtype=np.int64)
        block = src.entries(np.repeat(T, n), np.tile(cols, p)).reshape(p, n)
        return weights[:, None] * block
    picks = T[rng.integers(p, size=q)]
    cols = src.sample_from_row(picks, rng)
    block = src.entries(np.repeat(T, q), np.tile(cols, p)).reshape(p, q)
    # probability of column c under "uniform sampled row, then D of that row"
    prob = (block * block / src.row_norms2()[T][:, None]).mean(axis=0)
    return weights[:, None] * block / np.sqrt(q * prob)[None, :]


def _residual_estimate(src, T, weights, q, Z, rng):
    """Estimated ||A - A V̂ V̂^T||_F^2 using a fresh column sample."""
    W = _column_block(src, T, weights, q, rng)
    K = W @ W.T
    KZ = K @ Z
    gram = Z.T @ KZ
    H = KZ.T @ KZ
    return src.fro2() - 2.0 * np.trace(H) + np.trace(H @ gram)


def _sketch(src, side, k, epsilon, delta, rng, constant, rows, cols, theta, boost, matrix):
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 1 <= k <= min(src.m, src.n):
        raise ValueError(f"rank k={k} must lie in [1, min(m, n)]")
    if src.fro2() <= 0.0:
        raise ValueError("cannot sketch the zero matrix")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = _as_generator(rng)
    p = rows if rows is not None else sample_size(k, epsilon, delta, constant)
    q = cols if cols is not None else sample_size(k, epsilon, delta, constant)
    exact_rows, exact_cols = p >= src.m, q >= src.n
    trials = 1
    if boost and not (exact_rows and exact_cols):
        trials = max(1, math.ceil(math.log(1.0 / delta)))

    best = None
    for _ in range(trials):
        T, weights, W = _draw(src, p, q, rng)
        U, sig, _ = np.linalg.svd(W, full_matrices=False)
        keep = min(k, int(np.sum(sig > theta * sig[0])))
        U, sig = U[:, :keep], sig[:keep]
        score = float("nan")
        if trials > 1:
            score = _residual_estimate(src, T, weights, min(q, src.n), U / sig, rng)
        if best is None or score < best[0]:
            best = (score, T, weights, U, sig)
    score, T, weights, U, sig = best
    return SketchDescription(side=side, rows=T, weights=weights, u=U, sigma=sig, k=k,
                             epsilon=epsilon, delta=delta, p=int(min(p, src.m)),
                             q=int(min(q, src.n)), exact_rows=exact_rows,
                             exact_cols=exact_cols, matrix=matrix, trials=trials,
                             residual_estimate=score, seed=seed)


def fkv_sketch(a, k, epsilon, delta, rng=None, *, constant=1.0, rows=None, cols=None,
               theta=1e-8, boost=True):
    """Approximate right singular vectors of ``a`` from sample-model access.

    Parameters
    ----------
    a : SampledMatrix
    k : int
        Target rank.
    epsilon, delta : float
        Accuracy and failure probability, both in (0, 1).
    rng : Generator or int, optional
    constant : float
        Multiplier on the default sample count ``ceil(k^4/eps^2) ceil(ln 1/delta)``.
    rows, cols : int, optional
        Explicit sample counts overriding the formula.
    theta : float
        Singular values at or below ``theta * sigma_max`` are dropped.
    boost : bool
        Repeat ``ceil(ln 1/delta)`` times and keep the lowest estimated residual.

    Returns
    -------
    SketchDescription
        When the sample count reaches the matrix dimension the sketch uses
        every row (or column) deterministically and flags ``exact_rows``
        (``exact_cols``).
    """
    return _sketch(a, "row", k, epsilon, delta, rng, constant, rows, cols, theta, boost, a)


def fkv_sketch_left(a, k, epsilon, delta, rng=None, **kw):
    """Approximate left singular vectors: the right sketch of the transpose."""
    kw.setdefault("constant", 1.0)
    return _sketch(a.T, "col", k, epsilon, delta, rng, kw["constant"], kw.get("rows"),
                   kw.get("cols"), kw.get("theta", 1e-8), kw.get("boost", True), a)


@dataclass(frozen=True)
class AlphaOrthoCertificate:
    alpha: float
    k: int
    diag_deviation: float
    offdiag_max: float

    @property
    def passed(self):
        limit = self.alpha / self.k
        return self.diag_deviation <= limit and self.offdiag_max <= limit

    @property
    def implied_alpha(self):
        """Smallest alpha for which the columns qualify."""
        return self.k * max(self.diag_deviation, self.offdiag_max)


def alpha_certificate(V, alpha):
    """Check alpha-approximate orthonormality of the columns of a dense ``V``."""
    V = np.asarray(V, dtype=np.float64)
    k = V.shape[1]
    G = V.T @ V
    diag = float(np.max(np.abs(np.diag(G) - 1.0)))
    off = float(np.max(np.abs(G - np.diag(np.diag(G))))) if k > 1 else 0.0
    return AlphaOrthoCertificate(alpha=float(alpha), k=k, diag_deviation=diag, offdiag_max=off)


def verify_alpha_ortho(d, alpha=None):
    """Dense check of a sketch at ``alpha`` (default ``epsilon * k / 16``)."""
    if alpha is None:
        alpha = d.epsilon * d.k / 16.0
    return alpha_certificate(d.dense(), alpha)


def span_residual(d, a=None):
    """Largest relative distance from a row (or column) of A to span(V̂)."""
    V = d.dense()
    U, sig, _ = np.linalg.svd(V, full_matrices=False)
    Q = U[:, sig > 1e-12 * sig[0]]
    A = (d.matrix if a is None else a).to_dense()
    if d.side == "col":
        A = A.T
    R = A - (A @ Q) @ Q.T
    norms = np.linalg.norm(A, axis=1)
    nz = norms > 0
    return float(np.max(np.linalg.norm(R[nz], axis=1) / norms[nz]))


def span_check(d, a=None, tol=1e-6):
    """True when every row of A (columns for a left sketch) lies in span(V̂)."""
    return span_residual(d, a) <= tol
