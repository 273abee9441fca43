"""Parameter initialisers. Every draw comes from the caller's generator."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_out, fan_in)), requires_grad=True)


def embedding_init(rng: np.random.Generator, rows: int, d: int) -> Tensor:
    return Tensor(rng.uniform(-0.05, 0.05, size=(rows, d)), requires_grad=True)


def zeros(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones(*shape: int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)
