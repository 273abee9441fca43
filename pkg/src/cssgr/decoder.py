"""Small pre-norm transformer decoder over the fused node memory.

The memory for one sample is the fused node states with the final global
state appended as one extra row.
"""

from __future__ import annotations

import math

import numpy as np

from . import tensor as T
from .config import BOS, EOS
from .init import embedding_init, glorot, ones, zeros


def init_decoder_params(rng: np.random.Generator, vocab_size: int, d: int, max_len: int,
                        blocks: int = 2, ff_mult: int = 4) -> dict:
    p = {
        "dec.embed": embedding_init(rng, vocab_size, d),
        "dec.pos": embedding_init(rng, max_len, d),
    }
    for b in range(blocks):
        pre = f"dec.{b}."
        for att in ("self", "cross"):
            for key in ("Wq", "Wk", "Wv", "Wo"):
                p[pre + f"{att}.{key}"] = glorot(rng, d, d)
        p[pre + "ff.W1"] = glorot(rng, ff_mult * d, d)
        p[pre + "ff.b1"] = zeros(ff_mult * d)
        p[pre + "ff.W2"] = glorot(rng, d, ff_mult * d)
        p[pre + "ff.b2"] = zeros(d)
        for ln in ("ln1", "ln2", "ln3"):
            p[pre + f"{ln}.g"] = ones(d)
            p[pre + f"{ln}.b"] = zeros(d)
    p["dec.lnm.g"] = ones(d)
    p["dec.lnm.b"] = zeros(d)
    p["dec.lnf.g"] = ones(d)
    p["dec.lnf.b"] = zeros(d)
    p["dec.out"] = glorot(rng, d, vocab_size)
    return p


def n_blocks(params: dict) -> int:
    return len({k.split(".")[1] for k in params if k.startswith("dec.") and k.split(".")[1].isdigit()})


def memory_from(h: T.Tensor, s: T.Tensor, valid: np.ndarray) -> tuple[T.Tensor, np.ndarray]:
    """Append the global state as one extra memory row (batched)."""
    B, _, d = h.shape
    mem = T.concat([h, T.reshape(s, (B, 1, d))], axis=1)
    mem_valid = np.concatenate([valid, np.ones((B, 1), dtype=bool)], axis=1)
    return mem, mem_valid


def _linear(x, W):
    return T.matmul(x, T.transpose(W))


def _split_heads(x: T.Tensor, heads: int) -> T.Tensor:
    B, n, d = x.shape
    return T.transpose(T.reshape(x, (B, n, heads, d // heads)), (0, 2, 1, 3))


def _merge_heads(x: T.Tensor) -> T.Tensor:
    B, h, n, dh = x.shape
    return T.reshape(T.transpose(x, (0, 2, 1, 3)), (B, n, h * dh))


def _attention(x, kv, params, prefix, heads, mask):
    q = _split_heads(_linear(x, params[prefix + "Wq"]), heads)
    k = _split_heads(_linear(kv, params[prefix + "Wk"]), heads)
    v = _split_heads(_linear(kv, params[prefix + "Wv"]), heads)
    scores = T.scale(T.matmul(q, T.transpose(k)), 1.0 / math.sqrt(q.shape[-1]))
    weights = T.softmax(scores, axis=-1, mask=mask)
    return _linear(_merge_heads(T.matmul(weights, v)), params[prefix + "Wo"])


def logits(tokens: np.ndarray, memory: T.Tensor, mem_valid: np.ndarray, params: dict, heads: int = 4) -> T.Tensor:
    """Teacher-forced logits (B, T, vocab) for input tokens (B, T)."""
    tokens = np.asarray(tokens, dtype=np.int64)
    B, n = tokens.shape
    if n > params["dec.pos"].shape[0]:
        raise ValueError(f"prefix length {n} exceeds max_len {params['dec.pos'].shape[0]}")
    x = T.add(T.take_rows(params["dec.embed"], tokens), T.take_rows(params["dec.pos"], np.arange(n)))
    causal = np.tril(np.ones((n, n), dtype=bool))[None, None]
    cross_mask = np.asarray(mem_valid, dtype=bool)[:, None, None, :]
    memory = T.layer_norm(memory, params["dec.lnm.g"], params["dec.lnm.b"])
    for b in range(n_blocks(params)):
        pre = f"dec.{b}."
        hx = T.layer_norm(x, params[pre + "ln1.g"], params[pre + "ln1.b"])
        x = T.add(x, _attention(hx, hx, params, pre + "self.", heads, causal))
        hx = T.layer_norm(x, params[pre + "ln2.g"], params[pre + "ln2.b"])
        x = T.add(x, _attention(hx, memory, params, pre + "cross.", heads, cross_mask))
        hx = T.layer_norm(x, params[pre + "ln3.g"], params[pre + "ln3.b"])
        ff = T.relu(T.add(_linear(hx, params[pre + "ff.W1"]), params[pre + "ff.b1"]))
        x = T.add(x, T.add(_linear(ff, params[pre + "ff.W2"]), params[pre + "ff.b2"]))
    x = T.layer_norm(x, params["dec.lnf.g"], params["dec.lnf.b"])
    return T.matmul(x, params["dec.out"])


def decode_step(prefix, memory: T.Tensor, params: dict, heads: int = 4, mem_valid: np.ndarray | None = None) -> np.ndarray:
    """Next-token distribution after ``prefix`` for one sample.

    ``memory`` is (N_mem, d) or (1, N_mem, d).
    """
    prefix = np.asarray(prefix, dtype=np.int64)
    if prefix.ndim != 1 or prefix.size == 0 or prefix[0] != BOS:
        raise ValueError("prefix must be a non-empty 1-D sequence starting with BOS")
    mem = memory if memory.ndim == 3 else T.reshape(memory, (1,) + memory.shape)
    if mem_valid is None:
        mem_valid = np.ones(mem.shape[:2], dtype=bool)
    with T.no_grad():
        z = logits(prefix[None], mem, mem_valid, params, heads)
        probs = T.softmax(z, axis=-1)
    return probs.data[0, -1]


def nll_loss(dec_in: np.ndarray, dec_target: np.ndarray, weights: np.ndarray, memory: T.Tensor,
             mem_valid: np.ndarray, params: dict, heads: int = 4) -> T.Tensor:
    """Mean next-token cross-entropy over non-PAD positions (teacher forcing)."""
    z = logits(dec_in, memory, mem_valid, params, heads)
    return T.cross_entropy(z, dec_target, weights)


def greedy_decode(memory: T.Tensor, mem_valid: np.ndarray, params: dict, max_len: int, heads: int = 4) -> list[list[int]]:
    """Batched argmax decoding; ties go to the lowest id, stops at EOS or max_len.

    Returned sequences exclude BOS and EOS.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    B = memory.shape[0]
    seqs = np.full((B, 1), BOS, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    out: list[list[int]] = [[] for _ in range(B)]
    with T.no_grad():
        for _ in range(max_len):
            z = logits(seqs, memory, mem_valid, params, heads).data[:, -1]
            nxt = np.argmax(z, axis=-1)  # first maximum == lowest id
            for b in range(B):
                if done[b]:
                    continue
                if nxt[b] == EOS:
                    done[b] = True
                else:
                    out[b].append(int(nxt[b]))
            if done.all():
                break
            seqs = np.concatenate([seqs, nxt[:, None]], axis=1)
    return out
