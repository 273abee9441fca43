"""Training loop, evaluation and metrics reports.

RNG order for one run (single ``np.random.default_rng(seed)`` stream):
parameter initialisation (see ``CSSGRModel``), then one permutation of the
training set per epoch. Nothing else draws random numbers.
"""

from __future__ import annotations

import json
import logging
import math
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import tensor as T
from .config import RunConfig, learning_rate_at
from .data import Sample, iter_batches, read_jsonl
from .metrics import corpus_rouge
from .model import CSSGRModel
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


def _first_nonfinite(model: CSSGRModel) -> str:
    for name, p in model.params.items():
        if not np.all(np.isfinite(p.data)):
            return f"{name} (value)"
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            return f"{name} (gradient)"
    return "<none: loss itself is non-finite>"


def clip_grad_norm(params: dict, max_norm: float) -> float:
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``."""
    grads = [p.grad for p in params.values() if p.grad is not None]
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if norm > max_norm:
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * (max_norm / norm)
    return norm


def infer_d_raw(samples: Sequence[Sample]) -> int:
    return len(samples[0].visual_segments[0])


def train(cfg: RunConfig, train_samples: Sequence[Sample], heldout: Sequence[Sample] | None = None,
          progress: bool = False):
    """Fit a fresh model. Returns (model, optimizer, report dict)."""
    if not train_samples:
        raise ValueError("training set is empty")
    for s in train_samples:
        s.validate(cfg.vocab_size, cfg.d_raw)
    rng = np.random.default_rng(cfg.seed)
    model = CSSGRModel(cfg, rng)
    opt = Adam(model.params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    epochs = []
    for epoch in range(1, cfg.epochs + 1):
        opt.lr = learning_rate_at(cfg, epoch)
        order = rng.permutation(len(train_samples))
        total, count = 0.0, 0
        for batch in iter_batches(train_samples, cfg.batch_size, order, cfg.max_len):
            model.zero_grad()
            loss = model.loss(batch)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {opt.step_count + 1}; first bad parameter: "
                    f"{_first_nonfinite(model)}"
                )
            T.backward(loss)
            if cfg.grad_clip is not None:
                clip_grad_norm(model.params, cfg.grad_clip)
            opt.step()
            total += value * batch.size
            count += batch.size
        epochs.append({"epoch": epoch, "lr": opt.lr, "train_loss": total / count})
        if progress:
            log.info("epoch %d lr=%.3g loss=%.4f", epoch, opt.lr, total / count)
    report = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "steps": opt.step_count,
        "epochs": epochs,
    }
    if heldout:
        report["heldout"] = evaluate_model(model, heldout)
    return model, opt, report


def token_accuracy(model: CSSGRModel, samples: Sequence[Sample], batch_size: int = 64) -> float:
    hits, total = 0.0, 0.0
    for batch in iter_batches(samples, batch_size, max_len=model.cfg.max_len):
        pred = model.forward_logits(batch).argmax(axis=-1)
        hits += float(((pred == batch.dec_target) * batch.dec_weight).sum())
        total += float(batch.dec_weight.sum())
    return hits / total


def evaluate_model(model: CSSGRModel, samples: Sequence[Sample], batch_size: int = 64) -> dict:
    if not samples:
        raise ValueError("evaluation set is empty")
    for s in samples:
        s.validate(model.cfg.vocab_size, model.cfg.d_raw)
    preds: list[list[int]] = []
    for start in range(0, len(samples), batch_size):
        preds.extend(model.summarize(list(samples[start : start + batch_size])))
    refs = [s.reference_summary for s in samples]
    exact = sum(p == r for p, r in zip(preds, refs)) / len(samples)
    return {
        "num_samples": len(samples),
        "exact_match": exact,
        "token_accuracy": token_accuracy(model, samples, batch_size),
        "rouge": corpus_rouge(preds, refs),
    }


def write_metrics(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def run_training(cfg: RunConfig, out_dir: str | Path, progress: bool = False) -> dict:
    """File-level entry point used by the CLI: read data, train, write outputs."""
    from .checkpoint import save_checkpoint

    if not cfg.train_path:
        raise ValueError("config.train_path is required for training")
    train_samples = read_jsonl(cfg.train_path)
    heldout = read_jsonl(cfg.heldout_path) if cfg.heldout_path else None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    model, opt, report = train(cfg, train_samples, heldout, progress=progress)
    elapsed = time.perf_counter() - t0
    save_checkpoint(out / "checkpoint.json", model, opt)
    write_metrics(report, out / "metrics.json")
    # wall-clock is kept apart so metrics.json stays byte-reproducible
    (out / "timing.json").write_text(json.dumps({"train_seconds": elapsed}, indent=2) + "\n")
    return report

