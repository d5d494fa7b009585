"""Anchor seeking from sample-model access.

Pipeline: sketch the right singular vectors V̂ and the left singular vectors
Û of the row-normalised matrix, estimate the small matrix ``M = Û^T A V̂``,
then for each random unit ``x`` sample from ``D_{Û M x}`` by rejection and
keep the most frequent index. Every randomised stage draws from its own
stream derived from the master seed, so a run is reproducible and the
projections can run on several threads without changing the result.
"""

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._jit import thread_cap
from .estimate import RejectionBudgetExceeded, estimate_product, rejection_sample
from .fkv import fkv_sketch, fkv_sketch_left
from .sample_model import SampledMatrix

log = logging.getLogger(__name__)


def required_projections(k, coverage_alpha=1.0):
    """``ceil((3/alpha) k ln k)`` random projections, at least 1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if coverage_alpha <= 0:
        raise ValueError("coverage_alpha must be positive")
    return max(1, math.ceil(3.0 / coverage_alpha * k * math.log(k)))


def coverage_failure_bound(k, s, coverage_alpha=1.0):
    """Upper bound ``k exp(-alpha s / 3k)`` on missing some anchor."""
    return min(1.0, k * math.exp(-coverage_alpha * s / (3.0 * k)))


def vote_threshold(N, delta, epsilon):
    """Smallest distribution margin for which N votes provably find the mode."""
    return 2.0 * math.sqrt(2.0 * math.log(4.0 * N / delta) / N) + epsilon


def default_votes(m):
    return max(1, math.ceil(math.log2(m) ** 2)) if m > 1 else 1


def epsilon_bound(m, delta):
    N = default_votes(m)
    return 2.0 * math.sqrt(2.0 * math.log(4.0 * N / delta) / N)


@dataclass(frozen=True)
class DerivedParams:
    epsilon: float
    epsilon_bound: float
    epsilon_clamped: bool
    eps_V: float
    eps_U: float
    zeta: float
    delta_V: float
    delta_U: float
    eta: float
    gamma: float
    s: int
    N: int
    vote_threshold: float
    coverage_failure: float


@dataclass
class FasConfig:
    """Tolerances and sizes for :func:`fas_run`.

    ``epsilon``, ``s``, ``N`` and ``zeta`` default to values derived from the
    matrix height and the other fields. ``sketch_rows`` / ``sketch_cols`` fix
    the sketch sample counts instead of the tolerance-driven formula.
    """

    k: int
    kappa: float = 1.0
    delta: float = 0.1
    s: int = None
    N: int = None
    epsilon: float = None
    zeta: float = None
    c_V: float = 1.0
    c_U: float = 1.0
    c_zeta: float = 1.0
    coverage_alpha: float = 1.0
    sketch_constant: float = 1.0
    sketch_rows: int = None
    sketch_cols: int = None
    product_constant: float = 4.0
    budget_factor: float = 64.0
    normalize: bool = True
    seed: int = None

    def validate(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.kappa < 1.0:
            raise ValueError("kappa must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.zeta is not None and not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if self.s is not None and self.s < 1:
            raise ValueError("s must be at least 1")
        if self.N is not None and self.N < 1:
            raise ValueError("N must be at least 1")
        if self.coverage_alpha <= 0:
            raise ValueError("coverage_alpha must be positive")

    def derive(self, m):
        self.validate()
        k, kappa, delta = self.k, self.kappa, self.delta
        bound = epsilon_bound(m, delta)
        if self.epsilon is not None:
            eps, clamped = self.epsilon, False
        else:
            # the bound exceeds 1 for any realistic m
            eps = min(0.5, 0.99 * bound)
            clamped = eps < 0.99 * bound
        s = self.s if self.s is not None else max(k, required_projections(k, self.coverage_alpha))
        N = self.N if self.N is not None else default_votes(m)
        eps_V = self.c_V * min(eps / (math.sqrt(k) * kappa), 1.0 / (k * kappa ** 2))
        eps_U = self.c_U * min(eps / k, 1.0 / (k * kappa ** 2))
        zeta = self.zeta if self.zeta is not None else min(0.99, self.c_zeta * eps / (k * k * kappa))
        quarter = 1.0 - (1.0 - delta) ** 0.25
        gamma = 1.0 - (1.0 - delta) ** (1.0 / (4 * s))
        return DerivedParams(
            epsilon=eps, epsilon_bound=bound, epsilon_clamped=clamped,
            eps_V=min(eps_V, 0.99), eps_U=min(eps_U, 0.99), zeta=zeta,
            delta_V=quarter, delta_U=quarter, eta=quarter, gamma=gamma, s=s, N=N,
            vote_threshold=vote_threshold(N, delta, eps),
            coverage_failure=coverage_failure_bound(k, s, self.coverage_alpha))


@dataclass
class ProjectionRecord:
    x: list
    winner: int
    histogram: dict
    margin: float
    status: str
    low_confidence: bool = False
    acceptance_rate: float = float("nan")
    proposals: int = 0

    def as_dict(self):
        d = asdict(self)
        d["histogram"] = {str(i): c for i, c in self.histogram.items()}
        return d


@dataclass
class AnchorReport:
    anchors: list
    projections: list
    config: dict
    derived: dict
    seed: object
    accesses: dict
    timings: dict
    flags: list = field(default_factory=list)
    status: str = "ok"

    @property
    def effective_s(self):
        return sum(p.status == "ok" for p in self.projections)

    def as_dict(self):
        return {
            "anchors": [int(i) for i in self.anchors],
            "projections": [p.as_dict() for p in self.projections],
            "config": self.config,
            "derived": self.derived,
            "seed": self.seed,
            "accesses": self.accesses,
            "timings": self.timings,
            "flags": list(self.flags),
            "effective_s": self.effective_s,
            "status": self.status,
            "version": __version__,
        }

    def to_json(self, **kw):
        return json.dumps(self.as_dict(), indent=kw.pop("indent", 1), default=_jsonable, **kw)


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def random_unit_vector(k, rng):
    """Uniform direction on the unit sphere in R^k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    while True:
        x = rng.standard_normal(k)
        nrm = np.linalg.norm(x)
        if nrm > 0.0:
            return x / nrm


def l1_normalize_view(a):
    """New sample-model matrix whose rows are those of ``a`` divided by their l1 norms."""
    dense = a.to_dense() if isinstance(a, SampledMatrix) else np.asarray(a, dtype=np.float64)
    if np.any(dense < 0):
        raise ValueError("anchor seeking needs a nonnegative matrix")
    sums = dense.sum(axis=1)
    if np.any(sums <= 0):
        raise ValueError(f"row {int(np.argmin(sums))} is zero and cannot be l1-normalised")
    return SampledMatrix(dense / sums[:, None])


def tally(samples):
    """(winner, histogram, margin) with ties going to the smallest index."""
    idx, counts = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    order = np.argsort(-counts, kind="stable")
    top = counts[order[0]]
    second = counts[order[1]] if len(order) > 1 else 0
    hist = {int(i): int(c) for i, c in zip(idx, counts)}
    return int(idx[order[0]]), hist, (top - second) / counts.sum()


def project_and_vote(a, sketch_u, M, x, N, gamma, rng, threshold=None, budget_factor=64.0):
    """Vote over N draws from ``D_{Û M x}``.

    ``a`` is accepted for symmetry with the other stages; all access goes
    through ``sketch_u``, whose counters are those of ``a``. Returns a
    :class:`ProjectionRecord`; a zero direction or an exhausted rejection
    budget yields status ``"degenerate"`` or ``"rejection_failed"``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(M, dtype=np.float64) @ x
    if not np.any(y != 0.0):
        return ProjectionRecord(x=x.tolist(), winner=-1, histogram={}, margin=0.0,
                                status="degenerate")
    try:
        samples, stats = rejection_sample(sketch_u, y, gamma, rng, size=N,
                                          budget_factor=budget_factor)
    except RejectionBudgetExceeded as exc:
        return ProjectionRecord(x=x.tolist(), winner=-1, histogram={}, margin=0.0,
                                status="rejection_failed", proposals=exc.stats.proposed)
    winner, hist, margin = tally(samples)
    low = threshold is not None and margin <= threshold
    return ProjectionRecord(x=x.tolist(), winner=winner, histogram=hist, margin=float(margin),
                            status="ok", low_confidence=bool(low),
                            acceptance_rate=stats.acceptance_rate, proposals=stats.proposed)


@dataclass
class Prepared:
    """Sketches and the estimated small matrix shared by all projections."""

    matrix: SampledMatrix
    sketch_v: object
    sketch_u: object
    M: np.ndarray
    derived: DerivedParams
    product: object


def _root(rng):
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2 ** 63)))
    return np.random.SeedSequence(rng)


def prepare(a, cfg, rng=None):
    """Run the sketching and product-estimation stages on ``a`` as given."""
    d = cfg.derive(a.m)
    if cfg.k > min(a.m, a.n):
        raise ValueError(f"k={cfg.k} exceeds min(m, n)={min(a.m, a.n)}")
    sv, su, sp = (np.random.default_rng(s) for s in _root(rng).spawn(3))
    kw = dict(constant=cfg.sketch_constant, rows=cfg.sketch_rows, cols=cfg.sketch_cols)
    sketch_v = fkv_sketch(a, cfg.k, d.eps_V, d.delta_V, sv, **kw)
    sketch_u = fkv_sketch_left(a, cfg.k, d.eps_U, d.delta_U, su, **kw)
    prod = estimate_product(a, sketch_u, sketch_v, d.zeta, d.eta, sp, constant=cfg.product_constant)
    return Prepared(a, sketch_v, sketch_u, prod.matrix, d, prod)


def fas_run(a, cfg, rng=None):
    """Find the anchor rows of a separable nonnegative matrix.

    Parameters
    ----------
    a : SampledMatrix or array
        Nonnegative input. Rows are l1-normalised first unless
        ``cfg.normalize`` is False.
    cfg : FasConfig
    rng : int, Generator, SeedSequence or None
        Master seed; ``cfg.seed`` is used when omitted. The report records
        the root entropy, so even an unseeded run can be replayed.

    Returns
    -------
    AnchorReport
    """
    t0 = time.perf_counter()
    root = _root(cfg.seed if rng is None else rng)
    prep_seq, proj_root = root.spawn(2)
    if not isinstance(a, SampledMatrix):
        a = SampledMatrix(a)
    if cfg.normalize:
        a = l1_normalize_view(a)
    a.reset_counts()
    t_build = time.perf_counter()

    pre = prepare(a, cfg, prep_seq)
    d = pre.derived
    t_prep = time.perf_counter()

    proj_seq = proj_root.spawn(d.s)
    k2 = pre.sketch_v.rank

    def one(seq):
        rng_i = np.random.default_rng(seq)
        x = random_unit_vector(k2, rng_i)
        return project_and_vote(a, pre.sketch_u, pre.M, x, d.N, d.gamma, rng_i,
                                threshold=d.vote_threshold, budget_factor=cfg.budget_factor)

    workers = min(thread_cap(), d.s)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, proj_seq))
    else:
        records = [one(seq) for seq in proj_seq]
    t_end = time.perf_counter()

    anchors = sorted({r.winner for r in records if r.status == "ok"})
    flags = []
    if d.epsilon_clamped:
        flags.append("epsilon_clamped")
    if pre.sketch_v.rank < cfg.k or pre.sketch_u.rank < cfg.k:
        flags.append("sketch_rank_deficient")
    if pre.sketch_v.exact or pre.sketch_u.exact:
        flags.append("sketch_exact_fallback")
    if len(anchors) < cfg.k:
        flags.append("fewer_anchors_than_k")
    if any(r.status != "ok" for r in records):
        flags.append("failed_projections")
    if any(r.low_confidence for r in records):
        flags.append("low_confidence_votes")
    for f in flags:
        log.info("fas_run: %s", f)

    return AnchorReport(
        anchors=anchors, projections=records, config=_config_echo(cfg),
        derived=asdict(d), seed=root.entropy, accesses=a.accesses,
        timings={"normalize": t_build - t0, "prepare": t_prep - t_build,
                 "projections": t_end - t_prep, "total": t_end - t0},
        flags=flags, status="ok" if anchors else "failed")


def _config_echo(cfg):
    return asdict(cfg)
