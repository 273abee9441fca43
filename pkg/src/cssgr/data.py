"""Samples, the JSON Lines dataset format, the synthetic task and batching.

Dataset line schema (one JSON object per line, keys written in this order)::

    {"sample_id": "train-000000",
     "text_segments": [[5, 9, 12], [33, 40]],
     "visual_segments": [[0.04, 1.02, -0.11, 0.07], ...],
     "summary": [33, 40]}

Token ids 0, 1 and 2 are reserved for BOS, EOS and PAD and never appear in a
file. All visual segments of a dataset share one length ``d_raw``.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import BOS, EOS, N_RESERVED, PAD


@dataclass
class Sample:
    text_segments: list[list[int]]
    visual_segments: list[list[float]]
    reference_summary: list[int]
    sample_id: str = ""

    @property
    def m(self) -> int:
        return len(self.text_segments)

    @property
    def n(self) -> int:
        return len(self.visual_segments)

    def validate(self, vocab_size: int | None = None, d_raw: int | None = None) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError(f"sample {self.sample_id!r}: need m >= 1 and n >= 1, got m={self.m}, n={self.n}")
        for seg in self.text_segments:
            if len(seg) == 0:
                raise ValueError(f"sample {self.sample_id!r}: empty text segment")
            if vocab_size is not None and max(seg) >= vocab_size:
                raise ValueError(f"sample {self.sample_id!r}: token id {max(seg)} >= vocab_size {vocab_size}")
        if d_raw is not None:
            for seg in self.visual_segments:
                if len(seg) != d_raw:
                    raise ValueError(f"sample {self.sample_id!r}: visual segment length {len(seg)} != d_raw {d_raw}")

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "text_segments": [list(map(int, s)) for s in self.text_segments],
            "visual_segments": [list(map(float, v)) for v in self.visual_segments],
            "summary": list(map(int, self.reference_summary)),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sample":
        missing = {"sample_id", "text_segments", "visual_segments", "summary"} - set(obj)
        if missing:
            raise ValueError(f"dataset line is missing fields {sorted(missing)}")
        return cls(
            text_segments=[list(map(int, s)) for s in obj["text_segments"]],
            visual_segments=[list(map(float, v)) for v in obj["visual_segments"]],
            reference_summary=list(map(int, obj["summary"])),
            sample_id=str(obj["sample_id"]),
        )


def write_jsonl(samples: Iterable[Sample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), separators=(",", ":")) + "\n")


def read_jsonl(path: str | Path) -> list[Sample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                samples.append(Sample.from_json(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return samples


# ------------------------------------------------------------ synthetic task


@dataclass
class GeneratorConfig:
    num_train: int = 2000
    num_heldout: int = 200
    vocab_size: int = 64
    topics: int = 4
    text_segments: tuple[int, int] = (2, 3)
    visual_segments: tuple[int, int] = (3, 5)
    segment_len: tuple[int, int] = (2, 2)
    noise: float = 0.15
    distinct_text_topics: bool = True
    # probability that a visual segment shows the sample's dominant topic;
    # 0 draws every visual topic uniformly from the text topics
    dominant_share: float = 0.5

    def __post_init__(self):
        if self.vocab_size < 16:
            raise ValueError("vocab_size must be >= 16")
        if self.topics < 2:
            raise ValueError("topics must be >= 2")
        if (self.vocab_size - N_RESERVED) // self.topics < self.segment_len[1]:
            raise ValueError("topic token ranges are too small for the requested segment length")
        for lo, hi in (self.text_segments, self.visual_segments, self.segment_len):
            if not 1 <= lo <= hi:
                raise ValueError(f"bad range ({lo}, {hi})")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if not 0.0 <= self.dominant_share <= 1.0:
            raise ValueError("dominant_share must lie in [0, 1]")

    @property
    def d_raw(self) -> int:
        return self.topics

    def topic_tokens(self, topic: int) -> np.ndarray:
        width = (self.vocab_size - N_RESERVED) // self.topics
        start = N_RESERVED + topic * width
        return np.arange(start, start + width)

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorConfig":
        raw = dict(raw)
        for key in ("text_segments", "visual_segments", "segment_len"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


def majority_topic(topics: Sequence[int]) -> int:
    counts = Counter(topics)
    best = max(counts.values())
    return min(t for t, c in counts.items() if c == best)


def reference_summary(text_segments: Sequence[Sequence[int]], text_topics: Sequence[int],
                      visual_topics: Sequence[int]) -> list[int]:
    """Tokens of the text segments on the majority visual topic, in order."""
    majority = majority_topic(int(t) for t in visual_topics)
    return [int(tok) for seg, t in zip(text_segments, text_topics) if int(t) == majority for tok in seg]


def _draw_sample(cfg: GeneratorConfig, rng: np.random.Generator, sample_id: str) -> Sample:
    # draw order per sample: m, n, text topics, segment lengths + tokens,
    # [dominant topic + per-segment coin flips], visual topics, noise
    m = int(rng.integers(cfg.text_segments[0], cfg.text_segments[1] + 1))
    n = int(rng.integers(cfg.visual_segments[0], cfg.visual_segments[1] + 1))
    if cfg.distinct_text_topics and m <= cfg.topics:
        text_topics = rng.choice(cfg.topics, size=m, replace=False)
    else:
        text_topics = rng.integers(0, cfg.topics, size=m)
    text_segments = []
    for t in text_topics:
        length = int(rng.integers(cfg.segment_len[0], cfg.segment_len[1] + 1))
        toks = np.sort(rng.choice(cfg.topic_tokens(int(t)), size=length, replace=False))
        text_segments.append([int(x) for x in toks])
    # visual topics come from the text topics so the summary is never empty
    if cfg.dominant_share > 0:
        dominant = rng.choice(text_topics)
        use_dominant = rng.random(n) < cfg.dominant_share
        visual_topics = np.where(use_dominant, dominant, rng.choice(text_topics, size=n, replace=True))
    else:
        visual_topics = rng.choice(text_topics, size=n, replace=True)
    feats = np.eye(cfg.topics)[visual_topics] + cfg.noise * rng.standard_normal((n, cfg.topics))
    summary = reference_summary(text_segments, text_topics, visual_topics)
    return Sample(text_segments, [[float(x) for x in row] for row in feats], summary, sample_id)


def generate(cfg: GeneratorConfig, seed: int) -> tuple[list[Sample], list[Sample]]:
    """Deterministically draw (train, heldout) splits from one RNG stream."""
    rng = np.random.default_rng(seed)
    train = [_draw_sample(cfg, rng, f"train-{i:06d}") for i in range(cfg.num_train)]
    heldout = [_draw_sample(cfg, rng, f"heldout-{i:06d}") for i in range(cfg.num_heldout)]
    return train, heldout


def gen_synthetic(cfg: GeneratorConfig, seed: int, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, heldout = generate(cfg, seed)
    paths = {"train": out / "train.jsonl", "heldout": out / "heldout.jsonl"}
    write_jsonl(train, paths["train"])
    write_jsonl(heldout, paths["heldout"])
    return paths


# ------------------------------------------------------------------ batching


@dataclass
class Batch:
    """Padded arrays for a list of samples. Padding is masked everywhere."""

    text_ids: np.ndarray  # (B, M, S) int
    text_mask: np.ndarray  # (B, M, S) bool
    visual: np.ndarray  # (B, V, d_raw)
    text_valid: np.ndarray  # (B, M) bool
    visual_valid: np.ndarray  # (B, V) bool
    dec_in: np.ndarray  # (B, T) int, BOS + summary, PAD filled
    dec_target: np.ndarray  # (B, T) int, summary + EOS, PAD filled
    dec_weight: np.ndarray  # (B, T) float, 1 on real target positions
    samples: list[Sample] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.text_ids.shape[0]

    @property
    def node_valid(self) -> np.ndarray:
        return np.concatenate([self.text_valid, self.visual_valid], axis=1)


def make_batch(samples: Sequence[Sample], max_len: int | None = None) -> Batch:
    if not samples:
        raise ValueError("cannot batch zero samples")
    B = len(samples)
    M = max(s.m for s in samples)
    S = max(len(seg) for s in samples for seg in s.text_segments)
    V = max(s.n for s in samples)
    d_raw = len(samples[0].visual_segments[0])
    T = max(len(s.reference_summary) for s in samples) + 1
    if max_len is not None and T > max_len:
        raise ValueError(f"summary of length {T - 1} plus EOS exceeds max_len={max_len}")

    text_ids = np.full((B, M, S), PAD, dtype=np.int64)
    text_mask = np.zeros((B, M, S), dtype=bool)
    text_valid = np.zeros((B, M), dtype=bool)
    visual = np.zeros((B, V, d_raw))
    visual_valid = np.zeros((B, V), dtype=bool)
    dec_in = np.full((B, T), PAD, dtype=np.int64)
    dec_target = np.full((B, T), PAD, dtype=np.int64)
    dec_weight = np.zeros((B, T))
    for b, s in enumerate(samples):
        for i, seg in enumerate(s.text_segments):
            text_ids[b, i, : len(seg)] = seg
            text_mask[b, i, : len(seg)] = True
        text_valid[b, : s.m] = True
        visual[b, : s.n] = np.asarray(s.visual_segments, dtype=np.float64)
        visual_valid[b, : s.n] = True
        y = list(s.reference_summary)
        k = len(y) + 1
        dec_in[b, :k] = [BOS] + y
        dec_target[b, :k] = y + [EOS]
        dec_weight[b, :k] = 1.0
    return Batch(text_ids, text_mask, visual, text_valid, visual_valid, dec_in, dec_target, dec_weight, list(samples))


def iter_batches(samples: Sequence[Sample], batch_size: int, order: np.ndarray | None = None, max_len=None):
    idx = np.arange(len(samples)) if order is None else order
    for start in range(0, len(idx), batch_size):
        yield make_batch([samples[i] for i in idx[start : start + batch_size]], max_len)
