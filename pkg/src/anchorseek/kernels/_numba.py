"""numba backend for the hot loops.

Every routine here has a twin in :mod:`._numpy` with the same signature. The
tree kernels consume uniforms in the same order, so both backends return
identical draws for identical inputs. The rejection sampler is sequential here
and batched there, so those agree only in distribution.
"""

import numpy as np
from numba import njit

# stats layout shared with the numpy backend
ACCEPTED, OUTER, INNER, QUERIES, SAMPLES = range(5)


@njit(nogil=True, cache=True)
def _descend_one(tree, base, u):
    node = 1
    visits = 1
    while node < base:
        left = 2 * node
        wl = tree[left]
        if u < wl or tree[left + 1] <= 0.0:
            node = left
        else:
            u -= wl
            node = left + 1
        visits += 1
    return node - base, visits


@njit(nogil=True, cache=True)
def _descend(tree, base, us, out):
    total = tree[1]
    visits = 0
    for b in range(us.shape[0]):
        idx, v = _descend_one(tree, base, us[b] * total)
        out[b] = idx
        visits += v
    return visits


@njit(nogil=True, cache=True)
def _descend_rows(trees, rows, base, us, out):
    visits = 0
    for b in range(us.shape[0]):
        tree = trees[rows[b]]
        idx, v = _descend_one(tree, base, us[b] * tree[1])
        out[b] = idx
        visits += v
    return visits


def descend(tree, base, us):
    """Leaf indices for uniforms ``us`` in [0, 1); returns (idx, node visits)."""
    out = np.empty(us.shape[0], dtype=np.int64)
    visits = _descend(tree, base, us, out)
    return out, int(visits)


def descend_rows(trees, rows, base, us):
    out = np.empty(us.shape[0], dtype=np.int64)
    visits = _descend_rows(trees, np.asarray(rows, dtype=np.int64), base, us, out)
    return out, int(visits)


@njit(nogil=True, cache=True)
def update_path(tree, base, i, w):
    node = base + i
    tree[node] = w
    touched = 1
    node //= 2
    while node >= 1:
        tree[node] = tree[2 * node] + tree[2 * node + 1]
        touched += 1
        node //= 2
    return touched


@njit(nogil=True, cache=True)
def _entry(trees, signs, base, r, c):
    return signs[r, c] * np.sqrt(trees[r, base + c])


@njit(nogil=True, cache=True)
def _gather(trees, signs, base, rows, cols, out):
    for b in range(rows.shape[0]):
        out[b] = _entry(trees, signs, base, rows[b], cols[b])


def gather(trees, signs, base, rows, cols):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.empty(rows.shape[0])
    _gather(trees, signs, base, rows, cols, out)
    return out


@njit(nogil=True, cache=True)
def _combo_entries(trees, signs, base, T, C, idx, out):
    p, k = C.shape
    for b in range(idx.shape[0]):
        c = idx[b]
        for j in range(k):
            out[b, j] = 0.0
        for t in range(p):
            a = _entry(trees, signs, base, T[t], c)
            if a != 0.0:
                for j in range(k):
                    out[b, j] += C[t, j] * a


def combo_entries(trees, signs, base, T, C, idx):
    """Rows ``idx`` of the implicit matrix ``sum_t C[t, :] * stack[T[t]]``."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty((idx.shape[0], C.shape[1]))
    _combo_entries(trees, signs, base, np.asarray(T, dtype=np.int64),
                   np.ascontiguousarray(C), idx, out)
    return out


@njit(nogil=True, cache=True)
def _search(cum, x):
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if x < cum[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(nogil=True, cache=True)
def _inner(trees, signs, base, T, C, j, cum, p_eff, vals, us, pos, budget, stats):
    """One draw from D of ``sum_t C[t, j] stack[T[t]]`` by rejection.

    Returns (index, pos); index -1 means budget spent, -2 means out of uniforms.
    ``vals`` is left holding the stack entries at the accepted index.
    """
    p = T.shape[0]
    total = cum[cum.shape[0] - 1]
    tries = 0
    while True:
        if tries >= budget:
            return -1, pos
        if pos + 3 > us.shape[0]:
            return -2, pos
        t = _search(cum, us[pos] * total)
        tree = trees[T[t]]
        s, _ = _descend_one(tree, base, us[pos + 1] * tree[1])
        u_acc = us[pos + 2]
        pos += 3
        tries += 1
        stats[INNER] += 1
        stats[SAMPLES] += 1
        stats[QUERIES] += p
        num = 0.0
        den = 0.0
        for tt in range(p):
            a = _entry(trees, signs, base, T[tt], s)
            vals[tt] = a
            term = C[tt, j] * a
            num += term
            den += term * term
        if den > 0.0 and u_acc * p_eff * den < num * num:
            return s, pos


@njit(nogil=True, cache=True)
def _combo_reject(trees, signs, base, norm2_stack, T, C, nu2, w, n_samples,
                  start, us, outer_budget, inner_budget, out, stats):
    """Algorithm-2 sampling of ``D_{V w}`` where column j of V is
    ``sum_t C[t, j] stack[T[t]]`` and its squared norm is taken as ``nu2[j]``.

    Returns (next sample slot, status); status 0 done, 1 budget, 2 uniforms.
    """
    p, k = C.shape
    cum = np.empty((k, p))
    p_eff = np.zeros(k)
    for j in range(k):
        acc = 0.0
        for t in range(p):
            c = C[t, j]
            if c != 0.0:
                p_eff[j] += 1.0
            acc += c * c * norm2_stack[T[t]]
            cum[j, t] = acc
    omega = np.empty(k)
    acc = 0.0
    for j in range(k):
        acc += w[j] * w[j] * nu2[j]
        omega[j] = acc
    omega_total = acc
    vals = np.empty(p)
    row = np.empty(k)
    pos = 0
    for b in range(start, n_samples):
        props = 0
        while True:
            if props >= outer_budget:
                return b, 1
            if pos + 2 > us.shape[0]:
                return b, 2
            j = _search(omega, us[pos] * omega_total)
            u_acc = us[pos + 1]
            pos += 2
            props += 1
            stats[OUTER] += 1
            s, pos = _inner(trees, signs, base, T, C, j, cum[j], p_eff[j],
                            vals, us, pos, inner_budget, stats)
            if s == -2:
                return b, 2
            if s == -1:
                continue
            num = 0.0
            den = 0.0
            for jj in range(k):
                r = 0.0
                for t in range(p):
                    r += C[t, jj] * vals[t]
                row[jj] = r
                term = w[jj] * r
                num += term
                den += term * term
            if u_acc * k * den < num * num:
                out[b] = s
                stats[ACCEPTED] += 1
                break
    return n_samples, 0


def combo_reject(trees, signs, base, norm2_stack, T, C, nu2, w, n_samples, rng,
                 outer_budget, inner_budget):
    """Draw ``n_samples`` indices; returns (samples, stats, status).

    On status 1 only ``stats[ACCEPTED]`` leading samples are valid.
    """
    T = np.asarray(T, dtype=np.int64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    nu2 = np.asarray(nu2, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.full(n_samples, -1, dtype=np.int64)
    stats = np.zeros(5, dtype=np.int64)
    stats[QUERIES] += T.shape[0]  # stack norms read once
    chunk = max(4096, 64 * n_samples)
    start = 0
    while True:
        # a sample interrupted by an empty buffer restarts on fresh uniforms;
        # its proposals stay in the access counts
        us = rng.random(chunk)
        start, status = _combo_reject(trees, signs, base, norm2_stack, T, C, nu2, w,
                                      n_samples, start, us, outer_budget, inner_budget,
                                      out, stats)
        if status != 2:
            return out, stats, status
        chunk *= 2
