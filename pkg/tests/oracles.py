"""Independent reference implementations used only by the tests.

Everything here is written with plain Python loops over lists/floats so it
shares no code path with the vectorised package internals.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


def central_diff(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f()
        flat[i] = orig - step
        down = f()
        flat[i] = orig
        gf[i] = (up - down) / (2 * step)
    return g


def rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-4) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def cosine_loop(u, v) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return dot / (nu * nv)


def adjacency_loop(rows, tau: float) -> np.ndarray:
    n = len(rows)
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and cosine_loop(rows[i], rows[j]) >= tau:
                A[i, j] = 1.0
    return A


def matvec(W, x):
    return [sum(W[r][c] * x[c] for c in range(len(x))) for r in range(len(W))]


def message_passing_loop(h, A, W1, W2, Q, K) -> np.ndarray:
    """relu(sum_j alpha_ij W1 h_j + W2 h_i) with neighbourhood softmax, as loops."""
    h = [list(map(float, r)) for r in np.asarray(h)]
    W1, W2, Q, K = (np.asarray(M).tolist() for M in (W1, W2, Q, K))
    n, d = len(h), len(h[0])
    q = [matvec(Q, h[i]) for i in range(n)]
    k = [matvec(K, h[j]) for j in range(n)]
    w1h = [matvec(W1, h[j]) for j in range(n)]
    out = np.zeros((n, d))
    for i in range(n):
        nbrs = [j for j in range(n) if A[i][j] > 0]
        msg = [0.0] * d
        if nbrs:
            scores = [sum(q[i][c] * k[j][c] for c in range(d)) / math.sqrt(d) for j in nbrs]
            top = max(scores)
            ex = [math.exp(s - top) for s in scores]
            tot = sum(ex)
            for e, j in zip(ex, nbrs):
                for c in range(d):
                    msg[c] += (e / tot) * w1h[j][c]
        self_term = matvec(W2, h[i])
        for c in range(d):
            out[i, c] = max(0.0, msg[c] + self_term[c])
    return out


def mean_loop(rows) -> np.ndarray:
    n = len(rows)
    d = len(rows[0])
    acc = [0.0] * d
    for r in rows:
        for c in range(d):
            acc[c] += r[c]
    return np.array([a / n for a in acc])


def lcs_brute(a, b) -> int:
    """Longest common subsequence by enumerating subsequences of the shorter input."""
    if len(a) > len(b):
        a, b = b, a
    for k in range(len(a), 0, -1):
        for idx in itertools.combinations(range(len(a)), k):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(any(x == y for y in it) for x in sub):
                return k
    return 0


def rouge_n_brute(cand, ref, n):
    """Clipped n-gram overlap by explicit multiset counting."""
    cg = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    rg = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    if not cg or not rg:
        return 0.0, 0.0, 0.0
    rc = Counter(rg)
    overlap = 0
    used = Counter()
    for g in cg:
        if used[g] < rc[g]:
            used[g] += 1
            overlap += 1
    p, r = overlap / len(cg), overlap / len(rg)
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def topic_of_token(tok: int, vocab_size: int, topics: int, reserved: int = 3) -> int:
    width = (vocab_size - reserved) // topics
    return (tok - reserved) // width


def summary_rule(text_segments, visual_segments, vocab_size: int, topics: int):
    """Recompute the reference summary from the raw sample only.

    Text topic = token range of the segment; visual topic = argmax of the
    noisy one-hot; majority over visual topics, ties to the smallest id.
    """
    vis_topics = [max(range(len(v)), key=lambda t: (v[t], -t)) for v in visual_segments]
    counts: dict[int, int] = {}
    for t in vis_topics:
        counts[t] = counts.get(t, 0) + 1
    best = max(counts.values())
    major = min(t for t, c in counts.items() if c == best)
    out = []
    for seg in text_segments:
        if topic_of_token(seg[0], vocab_size, topics) == major:
            out.extend(seg)
    return out
