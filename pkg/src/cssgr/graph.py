"""Cross-modal adjacency and attention message passing.

All functions accept a single graph ``(N, d)`` or a padded batch ``(B, N, d)``;
adjacency matrices have matching leading shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import tensor as T
from .init import glorot

DEFAULT_TAU = 0.5


@dataclass
class CrossModalGraph:
    adjacency: np.ndarray
    node_states: list  # h^(0), h^(1), ... as Tensors
    layer_index: int = 0


def init_gnn_params(rng: np.random.Generator, d: int, L: int) -> dict:
    params = {}
    for layer in range(L):
        for key in ("W1", "W2", "Q", "K"):
            params[f"gnn.{layer}.{key}"] = glorot(rng, d, d)
    return params


def _values(x) -> np.ndarray:
    return x.data if isinstance(x, T.Tensor) else np.asarray(x, dtype=np.float64)


def build_adjacency(nodes, tau: float = DEFAULT_TAU, valid: np.ndarray | None = None) -> np.ndarray:
    """A_ij = 1 iff cos(f_i, f_j) >= tau and i != j. Not differentiable."""
    x = _values(nodes)
    if not -1.0 <= tau <= 1.0:
        raise ValueError(f"tau={tau} outside [-1, 1]")
    if T.probing():
        _record_threshold_margin(x, tau, valid)
    if x.ndim == 2:
        v = None if valid is None else np.asarray(valid)[None]
        return kernels.threshold_adjacency(x[None], tau, v)[0]
    if x.ndim != 3:
        raise ValueError(f"expected (N, d) or (B, N, d) node matrix, got shape {x.shape}")
    return kernels.threshold_adjacency(x, tau, valid)


def _record_threshold_margin(x: np.ndarray, tau: float, valid) -> None:
    xb = x[None] if x.ndim == 2 else x
    sim = kernels.cosine_matrix_numpy(xb)
    keep = np.ones(sim.shape, dtype=bool)
    if valid is not None:
        v = np.asarray(valid, dtype=bool).reshape(xb.shape[:2])
        keep = v[:, :, None] & v[:, None, :]
    idx = np.arange(xb.shape[1])
    keep[:, idx, idx] = False
    if keep.any():
        T.record_kink("threshold", float(np.abs(sim[keep] - tau).min()))


def dynamic_update(h, tau: float = DEFAULT_TAU, valid: np.ndarray | None = None) -> np.ndarray:
    """Re-threshold similarity on the current node states."""
    return build_adjacency(h, tau, valid)


def path_adjacency(valid: np.ndarray) -> np.ndarray:
    """Sequential ablation: link consecutive real nodes (text in order, then visual)."""
    valid = np.asarray(valid, dtype=bool)
    single = valid.ndim == 1
    if single:
        valid = valid[None]
    B, N = valid.shape
    adj = np.zeros((B, N, N))
    for b in range(B):
        idx = np.flatnonzero(valid[b])
        adj[b, idx[:-1], idx[1:]] = 1.0
        adj[b, idx[1:], idx[:-1]] = 1.0
    return adj[0] if single else adj


def attention_coefficients(h: T.Tensor, adjacency: np.ndarray, params: dict, layer: int = 0) -> T.Tensor:
    """Scaled dot-product scores softmaxed over each neighbourhood.

    Rows of isolated nodes are all zero.
    """
    d = h.shape[-1]
    q = T.matmul(h, T.transpose(params[f"gnn.{layer}.Q"]))
    k = T.matmul(h, T.transpose(params[f"gnn.{layer}.K"]))
    scores = T.scale(T.matmul(q, T.transpose(k)), 1.0 / math.sqrt(d))
    return T.softmax(scores, axis=-1, mask=np.asarray(adjacency) > 0)


def message_passing_layer(h: T.Tensor, adjacency: np.ndarray, params: dict, layer: int = 0) -> T.Tensor:
    """h_i' = relu(sum_{j in N(i)} alpha_ij W1 h_j + W2 h_i)."""
    alpha = attention_coefficients(h, adjacency, params, layer)
    messages = T.matmul(alpha, T.matmul(h, T.transpose(params[f"gnn.{layer}.W1"])))
    self_term = T.matmul(h, T.transpose(params[f"gnn.{layer}.W2"]))
    return T.relu(T.add(messages, self_term))
