"""Synthetic separable nonnegative matrices with known anchors.

Anchor rows are Dirichlet(1) points in the n-simplex placed at a random
k-subset of rows; every other row is a Dirichlet(1_k) mixture of them whose
largest weight is at most ``1 - margin``. The condition number is steered by
blending the anchors toward rows with disjoint supports, which are
orthogonal and so perfectly conditioned.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .io import write_matrix_market

MAX_DRAWS = 1000


@dataclass
class SeparableInstance:
    A: np.ndarray
    anchors: np.ndarray
    F: np.ndarray
    H: np.ndarray
    params: dict
    kappa: float
    blend: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def shape(self):
        return self.A.shape

    def f_checksum(self):
        return hashlib.sha256(np.ascontiguousarray(self.F, dtype="<f8").tobytes()).hexdigest()

    def sidecar(self):
        return {"anchors": [int(i) for i in self.anchors], "F_sha256": self.f_checksum(),
                "params": self.params, "seed": self.params["seed"], "kappa": self.kappa,
                "blend": self.blend}


def _kappa(F, H):
    # singular values of F H equal those of R_F H, with F = Q R_F
    R = np.linalg.qr(F, mode="r")
    sig = np.linalg.svd(R @ H, compute_uv=False)
    return float(sig[0] / sig[-1]) if sig[-1] > 0 else float("inf")


def _blocks(k, n):
    B = np.zeros((k, n))
    for i, cols in enumerate(np.array_split(np.arange(n), k)):
        B[i, cols] = 1.0 / len(cols)
    return B


def _mixtures(rng, count, k, margin):
    out = np.empty((count, k))
    filled = 0
    for _ in range(MAX_DRAWS):
        need = count - filled
        if need == 0:
            break
        draw = rng.dirichlet(np.ones(k), size=max(16, 2 * need))
        ok = draw[draw.max(axis=1) <= 1.0 - margin][:need]
        out[filled:filled + ok.shape[0]] = ok
        filled += ok.shape[0]
    if filled < count:
        raise RuntimeError("could not draw mixtures within the margin; lower it")
    return out


def generate(k, m, n, kappa_target=None, margin=0.2, seed=None):
    """Separable instance ``A = F H`` with ``H = A[anchors]``.

    Parameters
    ----------
    k, m, n : int
        Rank and shape; ``k <= min(m, n)``.
    kappa_target : float, optional
        Upper target for the condition number of A. The smallest blend that
        meets it is used; a warning is issued if even full blending fails.
    margin : float
        Every non-anchor mixing weight is at most ``1 - margin``.
    seed : int, optional
    """
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} must lie in [1, min(m, n)={min(m, n)}]")
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    if m > k and margin >= 1.0 - 1.0 / k:
        raise ValueError(f"margin {margin} is infeasible for k={k}: some weight is always >= 1/k")
    if kappa_target is not None and kappa_target < 1.0:
        raise ValueError("kappa_target must be at least 1")
    rng = np.random.default_rng(seed)
    anchors = np.sort(rng.choice(m, size=k, replace=False))
    H0 = rng.dirichlet(np.ones(n), size=k)
    F = np.zeros((m, k))
    F[anchors] = np.eye(k)
    rest = np.setdiff1d(np.arange(m), anchors)
    F[rest] = _mixtures(rng, rest.shape[0], k, margin)

    B = _blocks(k, n)
    blend, notes = 0.0, []
    kappa = _kappa(F, H0)
    if kappa_target is not None and kappa > kappa_target:
        if _kappa(F, B) > kappa_target:
            blend = 1.0
            notes.append(f"kappa target {kappa_target} unreachable; using fully blended anchors")
            warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        else:
            lo, hi = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if _kappa(F, (1 - mid) * H0 + mid * B) <= kappa_target:
                    hi = mid
                else:
                    lo = mid
            blend = hi
    H = (1 - blend) * H0 + blend * B
    A = F @ H
    A /= A.sum(axis=1, keepdims=True)
    params = {"k": k, "m": m, "n": n, "kappa_target": kappa_target, "margin": margin, "seed": seed}
    return SeparableInstance(A=A, anchors=anchors, F=F, H=A[anchors].copy(), params=params,
                             kappa=_kappa(F, H), blend=blend, warnings=notes)


def write_instance(inst, path):
    """Write ``<path>.mtx`` and the ``<path>.json`` sidecar; returns both paths."""
    base = Path(path)
    if base.suffix in (".mtx", ".json"):
        base = base.with_suffix("")
    mtx, side = base.with_suffix(".mtx"), base.with_suffix(".json")
    write_matrix_market(inst.A, mtx, comment=f"separable instance seed={inst.params['seed']}")
    side.write_text(json.dumps(inst.sidecar(), indent=1, sort_keys=True) + "\n")
    return mtx, side


def read_sidecar(path):
    return json.loads(Path(path).read_text())
