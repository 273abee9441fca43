"""Loop-heavy kernels with a numba path and a pure-numpy fallback.

Set ``CSSGR_DISABLE_NUMBA=1`` (read at import time) to force the numpy
versions. Both paths return identical results; ``benchmarks/bench_kernels.py``
times them against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

USE_NUMBA = njit is not None and os.environ.get("CSSGR_DISABLE_NUMBA", "0") not in ("1", "true", "yes")

NORM_EPS = 1e-12


# ------------------------------------------------------------- numpy versions


def cosine_matrix_numpy(x: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity of the rows of ``x``; zero rows give 0."""
    norms = np.sqrt(np.einsum("...ij,...ij->...i", x, x))
    ok = norms >= NORM_EPS
    safe = np.where(ok, norms, 1.0)
    unit = x / safe[..., None]
    sim = np.matmul(unit, np.swapaxes(unit, -1, -2))
    keep = ok[..., :, None] & ok[..., None, :]
    return np.where(keep, sim, 0.0)


def threshold_adjacency_numpy(x: np.ndarray, tau: float, valid: np.ndarray) -> np.ndarray:
    """Batched thresholded adjacency.

    ``x`` is (B, N, d), ``valid`` (B, N) marks real (non-padding) nodes.
    Returns a (B, N, N) 0/1 float array with zero diagonal.
    """
    sim = cosine_matrix_numpy(x)
    adj = sim >= tau
    adj &= valid[:, :, None] & valid[:, None, :]
    idx = np.arange(x.shape[1])
    adj[:, idx, idx] = False
    return adj.astype(np.float64)


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    if len(a) == 0 or len(b) == 0:
        return 0
    prev = np.zeros(len(b) + 1, dtype=np.int64)
    for x in a:
        match = np.concatenate(([0], np.where(b == x, prev[:-1] + 1, 0)))
        # row-wise prefix maximum resolves the "skip a" / "skip b" moves
        cur = np.maximum(match, prev)
        prev = np.maximum.accumulate(cur)
    return int(prev[-1])


# ------------------------------------------------------------- numba versions

if njit is not None:

    @njit(cache=False)
    def _threshold_adjacency_nb(x, tau, valid):
        B, N, d = x.shape
        out = np.zeros((B, N, N))
        norms = np.empty(N)
        for b in range(B):
            for i in range(N):
                s = 0.0
                for k in range(d):
                    s += x[b, i, k] * x[b, i, k]
                norms[i] = np.sqrt(s)
            for i in range(N):
                if not valid[b, i]:
                    continue
                for j in range(i + 1, N):
                    if not valid[b, j]:
                        continue
                    # a zero row has cosine 0 with everything
                    dot = 0.0
                    if norms[i] >= NORM_EPS and norms[j] >= NORM_EPS:
                        for k in range(d):
                            dot += (x[b, i, k] / norms[i]) * (x[b, j, k] / norms[j])
                    if dot >= tau:
                        out[b, i, j] = 1.0
                        out[b, j, i] = 1.0
        return out

    @njit(cache=False)
    def _lcs_length_nb(a, b):
        n, m = len(a), len(b)
        if n == 0 or m == 0:
            return 0
        prev = np.zeros(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(1, n + 1):
            cur[0] = 0
            for j in range(1, m + 1):
                if a[i - 1] == b[j - 1]:
                    cur[j] = prev[j - 1] + 1
                elif prev[j] >= cur[j - 1]:
                    cur[j] = prev[j]
                else:
                    cur[j] = cur[j - 1]
            prev, cur = cur, prev
        return prev[m]


def threshold_adjacency(x: np.ndarray, tau: float, valid: np.ndarray | None = None) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if valid is None:
        valid = np.ones(x.shape[:2], dtype=bool)
    valid = np.ascontiguousarray(valid, dtype=np.bool_)
    if USE_NUMBA:
        return _threshold_adjacency_nb(x, float(tau), valid)
    return threshold_adjacency_numpy(x, tau, valid)


def lcs_length(a, b) -> int:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if USE_NUMBA:
        return int(_lcs_length_nb(a, b))
    return lcs_length_numpy(a, b)
