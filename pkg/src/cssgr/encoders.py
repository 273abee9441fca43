"""Toy text/visual encoders and node construction.

Text segments are embedded bag-of-tokens style: a learned embedding table,
averaged over positions, then one linear layer with relu. Visual segments go
through a single linear layer with relu. Both are trained with the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .data import Batch, Sample, make_batch
from .init import glorot, embedding_init, zeros

TEXT, VISUAL = "T", "V"


def init_text_params(rng: np.random.Generator, vocab_size: int, d: int, max_segment_len: int = 0) -> dict:
    params = {
        "text.embed": embedding_init(rng, vocab_size, d),
        "text.W": glorot(rng, d, d),
        "text.b": zeros(d),
    }
    if max_segment_len:
        params["text.pos"] = embedding_init(rng, max_segment_len, d)
    return params


def init_visual_params(rng: np.random.Generator, d_raw: int, d: int) -> dict:
    return {"visual.W": glorot(rng, d, d_raw), "visual.b": zeros(d)}


def encode_text_batch(ids: np.ndarray, mask: np.ndarray, params: dict) -> T.Tensor:
    """(B, M, S) padded token ids -> (B, M, d) segment embeddings."""
    table = params["text.embed"]
    emb = T.take_rows(table, ids)  # (B, M, S, d)
    if "text.pos" in params:
        S = ids.shape[-1]
        if S > params["text.pos"].shape[0]:
            raise ValueError(f"segment length {S} exceeds positional table size {params['text.pos'].shape[0]}")
        emb = T.add(emb, T.take_rows(params["text.pos"], np.arange(S)))
    counts = mask.sum(axis=-1, keepdims=True)
    weights = np.where(mask, 1.0 / np.maximum(counts, 1), 0.0)[..., None]
    pooled = T.sum(T.mul(emb, weights), axis=-2)
    return T.relu(T.add(T.matmul(pooled, T.transpose(params["text.W"])), params["text.b"]))


def encode_visual_batch(feats: np.ndarray, params: dict) -> T.Tensor:
    """(..., d_raw) raw features -> (..., d)."""
    W = params["visual.W"]
    if feats.shape[-1] != W.shape[1]:
        raise ValueError(f"visual segment length {feats.shape[-1]} != d_raw {W.shape[1]}")
    return T.relu(T.add(T.matmul(T.Tensor(feats), T.transpose(W)), params["visual.b"]))


def encode_text(segment, params: dict) -> T.Tensor:
    segment = np.asarray(segment, dtype=np.int64)
    if segment.size == 0:
        raise ValueError("cannot encode an empty text segment")
    vocab = params["text.embed"].shape[0]
    if segment.min() < 0 or segment.max() >= vocab:
        raise ValueError(f"token id out of range [0, {vocab})")
    out = encode_text_batch(segment[None, None, :], np.ones((1, 1, segment.size), dtype=bool), params)
    return T.reshape(out, (-1,))


def encode_visual(segment, params: dict) -> T.Tensor:
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("visual segment must be a flat vector")
    return T.reshape(encode_visual_batch(x[None, :], params), (-1,))


@dataclass
class NodeSet:
    embeddings: T.Tensor  # (B, N, d) or (N, d)
    modality_tags: list  # per-row TEXT / VISUAL; one list per batch item when batched
    valid: np.ndarray  # bool mask, same leading shape as embeddings


def encode_nodes(batch: Batch, params: dict) -> NodeSet:
    """Batched node construction: textual rows first, then visual rows."""
    vocab = params["text.embed"].shape[0]
    if batch.text_mask.any() and batch.text_ids[batch.text_mask].max() >= vocab:
        raise ValueError(f"token id >= vocab_size {vocab}")
    text = encode_text_batch(batch.text_ids, batch.text_mask, params)
    vis = encode_visual_batch(batch.visual, params)
    emb = T.concat([text, vis], axis=1)
    M, V = batch.text_valid.shape[1], batch.visual_valid.shape[1]
    tags = [[TEXT] * M + [VISUAL] * V for _ in range(batch.size)]
    return NodeSet(emb, tags, batch.node_valid)


def build_nodes(sample: Sample, params: dict) -> NodeSet:
    """Single-sample node construction; rows 0..m-1 text, m..m+n-1 visual."""
    sample.validate(vocab_size=params["text.embed"].shape[0], d_raw=params["visual.W"].shape[1])
    ns = encode_nodes(make_batch([sample]), params)
    return NodeSet(T.reshape(ns.embeddings, ns.embeddings.shape[1:]), ns.modality_tags[0], ns.valid[0])
