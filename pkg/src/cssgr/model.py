"""The assembled model: encoders -> graph/state reasoning -> decoder."""

from __future__ import annotations

import numpy as np

from . import decoder, encoders, graph, state_space
from . import tensor as T
from .config import RunConfig
from .data import Batch, Sample, make_batch

MAX_SEGMENT_LEN = 32


class CSSGRModel:
    """Parameters live in ``self.params`` (ordered name -> Tensor).

    Initialisation draws from ``rng`` in a fixed order: text encoder, visual
    encoder, GNN layers, decoder, then the mode-specific global-context block
    (state-space parameters, or the MLP aggregator for ``no_ssm``). Keeping
    the mode-specific block last makes the shared parameters identical across
    ablation variants for the same seed.
    """

    def __init__(self, cfg: RunConfig, rng: np.random.Generator | None = None):
        self.cfg = cfg
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        p = {}
        p.update(encoders.init_text_params(rng, cfg.vocab_size, cfg.d, MAX_SEGMENT_LEN if cfg.text_positional else 0))
        p.update(encoders.init_visual_params(rng, cfg.d_raw, cfg.d))
        p.update(graph.init_gnn_params(rng, cfg.d, cfg.L))
        p.update(decoder.init_decoder_params(rng, cfg.vocab_size, cfg.d, cfg.max_len, cfg.decoder_blocks))
        if cfg.mode == "no_ssm":
            p.update(state_space.init_aggregator_params(rng, cfg.d))
        else:
            p.update(state_space.init_ssm_params(rng, cfg.d))
        for name, t in p.items():
            t.name = name
        self.params: dict[str, T.Tensor] = p

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.params.values())

    # ------------------------------------------------------------ forward

    def reason(self, batch: Batch, trace: state_space.ReasoningTrace | None = None):
        nodes = encoders.encode_nodes(batch, self.params)
        h, s = state_space.run_reasoning(
            nodes.embeddings, self.params, self.cfg.L, self.cfg.tau, self.cfg.mode, nodes.valid, trace
        )
        return h, s, nodes.valid

    def memory(self, batch: Batch):
        h, s, valid = self.reason(batch)
        return decoder.memory_from(h, s, valid)

    def loss(self, batch: Batch) -> T.Tensor:
        mem, mem_valid = self.memory(batch)
        return decoder.nll_loss(batch.dec_in, batch.dec_target, batch.dec_weight, mem, mem_valid,
                                self.params, self.cfg.heads)

    def summarize(self, samples: list[Sample], max_len: int | None = None) -> list[list[int]]:
        max_len = self.cfg.max_len if max_len is None else max_len
        with T.no_grad():
            mem, mem_valid = self.memory(make_batch(samples))
            return decoder.greedy_decode(mem, mem_valid, self.params, max_len, self.cfg.heads)

    def forward_logits(self, batch: Batch) -> np.ndarray:
        """Teacher-forced logits; used for determinism and round-trip checks."""
        with T.no_grad():
            mem, mem_valid = self.memory(batch)
            return decoder.logits(batch.dec_in, mem, mem_valid, self.params, self.cfg.heads).data


def gnn_only_states(cfg: RunConfig, batch: Batch, seed: int | None = None) -> np.ndarray:
    """Reference pure-GNN forward built from scratch with the same init order.

    Encoders followed by L plain message-passing layers, with the adjacency
    policy of ``cfg.mode`` but no global state at all.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    p = {}
    p.update(encoders.init_text_params(rng, cfg.vocab_size, cfg.d, MAX_SEGMENT_LEN if cfg.text_positional else 0))
    p.update(encoders.init_visual_params(rng, cfg.d_raw, cfg.d))
    p.update(graph.init_gnn_params(rng, cfg.d, cfg.L))
    with T.no_grad():
        nodes = encoders.encode_nodes(batch, p)
        h = nodes.embeddings
        valid = nodes.valid
        adj = graph.path_adjacency(valid) if cfg.mode == "no_graph" else graph.build_adjacency(h, cfg.tau, valid)
        for layer in range(cfg.L):
            if cfg.mode in ("full", "no_ssm") and layer > 0:
                adj = graph.build_adjacency(h, cfg.tau, valid)
            h = graph.message_passing_layer(h, adj, p, layer)
    return h.data
