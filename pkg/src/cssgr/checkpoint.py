"""Versioned JSON checkpoints.

Layout::

    {"format": "cssgr-checkpoint", "version": 1,
     "config": {...RunConfig...},
     "step": 1875,
     "params": {"text.embed": {"shape": [64, 32], "data": [...]}, ...},
     "optimizer": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-08,
                   "m": {name: {"shape", "data"}}, "v": {...}}}

Floats are written with ``repr`` precision, so a save/load cycle restores
every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import RunConfig
from .model import CSSGRModel
from .optim import Adam

FORMAT = "cssgr-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _pack(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(x) for x in np.asarray(arr).reshape(-1)]}


def _unpack(obj: dict) -> np.ndarray:
    return np.asarray(obj["data"], dtype=np.float64).reshape(obj["shape"])


def checkpoint_dict(model: CSSGRModel, opt: Adam | None = None) -> dict:
    out = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.cfg.to_dict(),
        "step": 0 if opt is None else opt.step_count,
        "params": {k: _pack(p.data) for k, p in model.params.items()},
    }
    if opt is not None:
        out["optimizer"] = {
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
            "weight_decay": opt.weight_decay,
            "m": {k: _pack(v) for k, v in opt.m.items()},
            "v": {k: _pack(v) for k, v in opt.v.items()},
        }
    return out


def save_checkpoint(path: str | Path, model: CSSGRModel, opt: Adam | None = None) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(model, opt)))


def load_checkpoint(path: str | Path) -> tuple[CSSGRModel, Adam | None]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_dict(raw)


def from_dict(raw: dict) -> tuple[CSSGRModel, Adam | None]:
    if raw.get("format") != FORMAT:
        raise CheckpointError("not a cssgr checkpoint")
    if raw.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {raw.get('version')!r}")
    cfg = RunConfig.from_dict(raw["config"])
    # parameters are overwritten below; the init draws only fix names/shapes
    model = CSSGRModel(cfg, np.random.default_rng(0))
    stored = raw["params"]
    if set(stored) != set(model.params):
        missing = sorted(set(model.params) - set(stored))
        extra = sorted(set(stored) - set(model.params))
        raise CheckpointError(f"parameter mismatch; missing={missing} unexpected={extra}")
    for name, p in model.params.items():
        arr = _unpack(stored[name])
        if arr.shape != p.shape:
            raise CheckpointError(f"{name}: stored shape {arr.shape} != expected {p.shape}")
        p.data = arr
    opt = None
    if "optimizer" in raw:
        o = raw["optimizer"]
        opt = Adam(model.params, lr=cfg.learning_rate, beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"],
                   weight_decay=o.get("weight_decay", 0.0))
        opt.load_state_dict({
            "step": raw["step"],
            "m": {k: _unpack(v) for k, v in o["m"].items()},
            "v": {k: _unpack(v) for k, v in o["v"].items()},
        })
    return model, opt
