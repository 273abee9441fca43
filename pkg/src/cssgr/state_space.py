"""Global state-space context: pooling, the linear recurrence, fusion, and the
layer/step interleaving that ties the graph and the state together."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graph
from . import tensor as T
from .init import glorot, zeros

A_INIT_NORM = 0.9
DIVERGENCE_LIMIT = 1e6


class StateDivergence(RuntimeError):
    pass


@dataclass
class SsmState:
    s: T.Tensor
    step_index: int = 0
    readout: T.Tensor | None = None


def init_ssm_params(rng: np.random.Generator, d: int) -> dict:
    A = glorot(rng, d, d)
    A.data *= A_INIT_NORM / np.linalg.norm(A.data, 2)
    return {
        "ssm.A": A,
        "ssm.B": glorot(rng, d, d),
        "ssm.C": glorot(rng, d, d),
        "ssm.gamma": zeros(),
    }


def init_aggregator_params(rng: np.random.Generator, d: int) -> dict:
    """Two-layer MLP (d -> d -> d) that stands in for the SSM in the no_ssm ablation."""
    return {
        "agg.W1": glorot(rng, d, d),
        "agg.b1": zeros(d),
        "agg.W2": glorot(rng, d, d),
        "agg.b2": zeros(d),
        "ssm.gamma": zeros(),
    }


def pool(h: T.Tensor, valid: np.ndarray | None = None) -> T.Tensor:
    """Mean over nodes (axis -2), ignoring padded rows when ``valid`` is given."""
    if h.shape[-2] == 0:
        raise ValueError("cannot pool zero nodes")
    if valid is None:
        return T.mean(h, axis=-2)
    valid = np.asarray(valid, dtype=bool)
    counts = valid.sum(axis=-1, keepdims=True)
    if (counts == 0).any():
        raise ValueError("cannot pool zero nodes")
    w = (valid / counts)[..., None]
    return T.sum(T.mul(h, w), axis=-2)


def ssm_step(state: SsmState, z: T.Tensor, params: dict) -> SsmState:
    """s' = A s + B z; the readout y = C s' uses the post-update state."""
    s_next = T.add(
        T.matmul(state.s, T.transpose(params["ssm.A"])) if state.s.ndim > 1 else _mv(params["ssm.A"], state.s),
        T.matmul(z, T.transpose(params["ssm.B"])) if z.ndim > 1 else _mv(params["ssm.B"], z),
    )
    y = T.matmul(s_next, T.transpose(params["ssm.C"])) if s_next.ndim > 1 else _mv(params["ssm.C"], s_next)
    return SsmState(s_next, state.step_index + 1, y)


def _mv(W: T.Tensor, v: T.Tensor) -> T.Tensor:
    return T.reshape(T.matmul(W, T.reshape(v, (-1, 1))), (-1,))


def aggregate(z: T.Tensor, params: dict) -> T.Tensor:
    if z.ndim == 1:
        return T.reshape(aggregate(T.reshape(z, (1, -1)), params), (-1,))
    hidden = T.relu(T.add(T.matmul(z, T.transpose(params["agg.W1"])), params["agg.b1"]))
    return T.add(T.matmul(hidden, T.transpose(params["agg.W2"])), params["agg.b2"])


def fuse(h: T.Tensor, s: T.Tensor, gamma: T.Tensor) -> T.Tensor:
    """h~_i = h_i + gamma * s for every node i."""
    gs = T.mul(gamma, s)
    if s.ndim == 2:  # batched: (B, d) -> (B, 1, d)
        gs = T.reshape(gs, (s.shape[0], 1, s.shape[1]))
    return T.add(h, gs)


@dataclass
class ReasoningTrace:
    adjacencies: list = field(default_factory=list)
    states: list = field(default_factory=list)
    readouts: list = field(default_factory=list)


def run_reasoning(nodes: T.Tensor, params: dict, L: int, tau: float = graph.DEFAULT_TAU,
                  mode: str = "full", valid: np.ndarray | None = None, trace: ReasoningTrace | None = None):
    """Interleave L message-passing layers with L state steps.

    Per layer: [adjacency update] -> message passing -> pool -> state step
    (or MLP aggregator for ``no_ssm``) -> fuse. The state starts at zero.
    Returns the fused node states after the last layer and the final state.
    """
    if valid is None:
        valid = np.ones(nodes.shape[:-1], dtype=bool)
    batch_shape = nodes.shape[:-2]
    d = nodes.shape[-1]
    state = SsmState(T.Tensor(np.zeros(batch_shape + (d,))))
    if mode == "no_graph":
        adjacency = graph.path_adjacency(valid)
    else:
        adjacency = graph.build_adjacency(nodes, tau, valid)
    h = nodes
    for layer in range(L):
        if mode in ("full", "no_ssm") and layer > 0:
            adjacency = graph.dynamic_update(h, tau, valid)
        if trace is not None:
            trace.adjacencies.append(adjacency)
        h = graph.message_passing_layer(h, adjacency, params, layer)
        z = pool(h, valid)
        if mode == "no_ssm":
            state = SsmState(aggregate(z, params), state.step_index + 1)
        else:
            state = ssm_step(state, z, params)
        norm = float(np.max(np.linalg.norm(state.s.data, axis=-1)))
        if not norm <= DIVERGENCE_LIMIT:
            raise StateDivergence(f"global state norm {norm:.3g} exceeded {DIVERGENCE_LIMIT:g} at layer {layer}")
        h = fuse(h, state.s, params["ssm.gamma"])
        if trace is not None:
            trace.states.append(state.s)
            trace.readouts.append(state.readout)
    return h, state.s
