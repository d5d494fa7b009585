"""Pure numpy backend, vectorised across draws.

Tree descents walk all draws one level at a time; the rejection sampler runs
batches of proposals and keeps the accepted ones in proposal order.
"""

import numpy as np

ACCEPTED, OUTER, INNER, QUERIES, SAMPLES = range(5)

_CHUNK = 4096


def _depth(base):
    return int(base).bit_length() - 1


def descend(tree, base, us):
    u = us * tree[1]
    node = np.ones(us.shape[0], dtype=np.int64)
    for _ in range(_depth(base)):
        left = 2 * node
        wl = tree[left]
        right = (u >= wl) & (tree[left + 1] > 0.0)
        u = np.where(right, u - wl, u)
        node = left + right
    return node - base, us.shape[0] * (_depth(base) + 1)


def descend_rows(trees, rows, base, us):
    rows = np.asarray(rows, dtype=np.int64)
    u = us * trees[rows, 1]
    node = np.ones(us.shape[0], dtype=np.int64)
    for _ in range(_depth(base)):
        left = 2 * node
        wl = trees[rows, left]
        right = (u >= wl) & (trees[rows, left + 1] > 0.0)
        u = np.where(right, u - wl, u)
        node = left + right
    return node - base, us.shape[0] * (_depth(base) + 1)


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


def gather(trees, signs, base, rows, cols):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    return signs[rows, cols] * np.sqrt(trees[rows, base + cols])


def _stack_block(trees, signs, base, T, idx):
    # (p, B) block of stack entries stack[T[t], idx[b]]
    return signs[T[:, None], idx[None, :]] * np.sqrt(trees[T[:, None], base + idx[None, :]])


def combo_entries(trees, signs, base, T, C, idx):
    T = np.asarray(T, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty((idx.shape[0], C.shape[1]))
    for lo in range(0, idx.shape[0], _CHUNK):
        block = _stack_block(trees, signs, base, T, idx[lo:lo + _CHUNK])
        out[lo:lo + _CHUNK] = block.T @ C
    return out


def combo_reject(trees, signs, base, norm2_stack, T, C, nu2, w, n_samples, rng,
                 outer_budget, inner_budget):
    T = np.asarray(T, dtype=np.int64)
    C = np.asarray(C, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    p, k = C.shape
    stats = np.zeros(5, dtype=np.int64)
    stats[QUERIES] += p
    p_eff = (C != 0.0).sum(axis=0).astype(np.float64)
    cum_inner = np.cumsum(C * C * norm2_stack[T][:, None], axis=0)
    omega = np.cumsum(w * w * np.asarray(nu2, dtype=np.float64))

    def inner(j):
        n = j.shape[0]
        s = np.zeros(n, dtype=np.int64)
        vals = np.zeros((p, n))
        ok = np.zeros(n, dtype=bool)
        tries = np.zeros(n, dtype=np.int64)
        pending = np.arange(n)
        while pending.size:
            jj = j[pending]
            x = rng.random(pending.size) * cum_inner[-1, jj]
            t = np.minimum((cum_inner[:, jj] <= x[None, :]).sum(axis=0), p - 1)
            cand, _ = descend_rows(trees, T[t], base, rng.random(pending.size))
            u_acc = rng.random(pending.size)
            block = _stack_block(trees, signs, base, T, cand)
            terms = C[:, jj] * block
            num = terms.sum(axis=0)
            den = (terms * terms).sum(axis=0)
            acc = (den > 0.0) & (u_acc * p_eff[jj] * den < num * num)
            tries[pending] += 1
            hit = pending[acc]
            s[hit] = cand[acc]
            vals[:, hit] = block[:, acc]
            ok[hit] = True
            spent = tries[pending] >= inner_budget
            pending = pending[~acc & ~spent]
        return s, vals, ok, tries

    out = np.full(n_samples, -1, dtype=np.int64)
    got = 0
    since = 0
    while got < n_samples:
        B = int(min(max(64, (3 * k * (n_samples - got)) // 2), 1 << 15))
        j = np.minimum(np.searchsorted(omega, rng.random(B) * omega[-1], side="right"), k - 1)
        u_acc = rng.random(B)
        s, vals, ok, tries = inner(j)
        rows = C.T @ vals
        num = (w @ rows) ** 2
        den = ((w[:, None] * rows) ** 2).sum(axis=0)
        acc = ok & (u_acc * k * den < num)
        used = B
        prev = -1
        failed = False
        for pos in np.flatnonzero(acc):
            if since + (pos - prev) > outer_budget:
                used = prev + 1 + (outer_budget - since)
                failed = True
                break
            out[got] = s[pos]
            got += 1
            since = 0
            prev = pos
            if got == n_samples:
                used = pos + 1
                break
        else:
            since += B - 1 - prev
            if since >= outer_budget:
                used = B - (since - outer_budget)
                failed = True
        stats[OUTER] += used
        spent = int(tries[:used].sum())
        stats[INNER] += spent
        stats[SAMPLES] += spent
        stats[QUERIES] += p * spent
        if failed:
            stats[ACCEPTED] += got
            return out, stats, 1
    stats[ACCEPTED] += got
    return out, stats, 0
