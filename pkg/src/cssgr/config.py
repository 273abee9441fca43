"""Run configuration shared by the harness, the CLI and checkpoints."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

MODES = ("full", "no_ssm", "no_graph", "static_adjacency")

BOS, EOS, PAD = 0, 1, 2
N_RESERVED = 3


@dataclass
class RunConfig:
    d: int = 32
    L: int = 2
    tau: float = 0.5
    vocab_size: int = 64
    max_len: int = 8
    learning_rate: float = 1e-4
    lr_decay_factor: float = 0.5
    lr_decay_every_epochs: int = 5
    epochs: int = 15
    batch_size: int = 16
    grad_clip: float | None = None
    weight_decay: float = 0.0
    seed: int = 0
    mode: str = "full"
    d_raw: int = 4
    heads: int = 4
    decoder_blocks: int = 2
    text_positional: bool = False
    train_path: str | None = None
    heldout_path: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown ablation mode {self.mode!r}; expected one of {MODES}")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [-1, 1]")
        if self.d % self.heads:
            raise ValueError(f"d={self.d} is not divisible by heads={self.heads}")
        if self.vocab_size <= N_RESERVED:
            raise ValueError("vocab_size must exceed the reserved BOS/EOS/PAD ids")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def learning_rate_at(cfg: RunConfig, epoch: int) -> float:
    """Step-decayed learning rate for a 1-based epoch number."""
    if epoch < 1:
        raise ValueError("epochs are numbered from 1")
    return cfg.learning_rate * cfg.lr_decay_factor ** ((epoch - 1) // cfg.lr_decay_every_epochs)
