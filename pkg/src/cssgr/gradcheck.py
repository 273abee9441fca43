"""End-to-end finite-difference verification of every parameter group."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .config import N_RESERVED, RunConfig
from .data import Sample, make_batch
from .model import CSSGRModel

STEP = 1e-5
TOLERANCE = 1e-5
KINK_MARGIN = 1e-6
# Relative-error denominators never drop below this. Central differences at
# STEP carry ~3e-11 absolute roundoff for O(1) losses, so entries smaller than
# the floor are judged on an absolute 1e-9 scale instead.
REL_FLOOR = 1e-4

GROUPS = {
    "encoders": ("text.", "visual."),
    "graph": ("gnn.",),
    "state_space": ("ssm.", "agg."),
    "decoder": ("dec.",),
}


def group_of(name: str) -> str:
    for group, prefixes in GROUPS.items():
        if name.startswith(prefixes):
            return group
    raise KeyError(name)


@dataclass
class GroupResult:
    worst_rel_error: float
    worst_param: str
    worst_index: tuple
    entries: int
    failures: list = field(default_factory=list)  # (param, index, rel_err)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class GradcheckReport:
    groups: dict
    resamples: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.groups.values())

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "resamples": self.resamples,
            "groups": {
                k: {
                    "passed": g.passed,
                    "worst_rel_error": g.worst_rel_error,
                    "worst_param": g.worst_param,
                    "worst_index": list(g.worst_index),
                    "entries": g.entries,
                    "failures": [[p, list(i), e] for p, i, e in g.failures[:20]],
                }
                for k, g in self.groups.items()
            },
        }


def tiny_config(**overrides) -> RunConfig:
    base = dict(d=8, L=2, vocab_size=12, max_len=6, d_raw=3, heads=4, epochs=1, batch_size=2)
    base.update(overrides)
    return RunConfig(**base)


def random_samples(rng: np.random.Generator, cfg: RunConfig, count: int = 2, m: int = 3, n: int = 3) -> list[Sample]:
    out = []
    for i in range(count):
        text = [list(rng.integers(N_RESERVED, cfg.vocab_size, size=int(rng.integers(1, 4)))) for _ in range(m)]
        vis = rng.standard_normal((n, cfg.d_raw)).tolist()
        summary = list(rng.integers(N_RESERVED, cfg.vocab_size, size=int(rng.integers(1, cfg.max_len))))
        out.append(Sample([[int(t) for t in s] for s in text], vis, [int(t) for t in summary], f"gc-{i}"))
    return out


def _margins(model: CSSGRModel, batch) -> dict:
    with T.no_grad(), T.kink_probe() as probe:
        model.loss(batch)
    return probe


def gradcheck(cfg: RunConfig | None = None, seed: int = 0, gamma: float | None = None,
              max_resamples: int = 20, tolerance: float = TOLERANCE, step: float = STEP) -> GradcheckReport:
    """Compare autodiff gradients with central differences, entry by entry.

    Points where a relu input or a similarity/threshold gap lies within
    ``KINK_MARGIN`` of its kink are redrawn (new init and data) from the same
    generator, so results stay deterministic per ``seed``.
    """
    cfg = cfg or tiny_config()
    if cfg.d > 8:
        raise ValueError("gradcheck is meant for tiny models (d <= 8)")
    rng = np.random.default_rng(seed)
    for attempt in range(max_resamples + 1):
        model = CSSGRModel(cfg, rng)
        if gamma is not None:
            model.params["ssm.gamma"].data = np.asarray(float(gamma))
        batch = make_batch(random_samples(rng, cfg))
        probe = _margins(model, batch)
        if probe["relu"] > KINK_MARGIN and probe["threshold"] > KINK_MARGIN:
            break
    else:
        raise RuntimeError(f"no kink-free point found in {max_resamples} resamples")

    model.zero_grad()
    T.backward(model.loss(batch))

    results: dict[str, GroupResult] = {}
    for name, p in model.params.items():
        group = group_of(name)
        res = results.setdefault(group, GroupResult(0.0, "", (), 0))
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad
        flat = p.data.reshape(-1)  # view onto the live parameter
        for i in range(flat.size):
            orig = flat[i]
            with T.no_grad():
                flat[i] = orig + step
                up = model.loss(batch).item()
                flat[i] = orig - step
                down = model.loss(batch).item()
            flat[i] = orig
            numeric = (up - down) / (2 * step)
            a = float(analytic.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), REL_FLOOR)
            idx = np.unravel_index(i, p.shape) if p.shape else ()
            res.entries += 1
            if err > res.worst_rel_error or not res.worst_param:
                res.worst_rel_error, res.worst_param, res.worst_index = err, name, tuple(int(j) for j in idx)
            if not err < tolerance:
                res.failures.append((name, tuple(int(j) for j in idx), err))
    return GradcheckReport(results, attempt, tolerance)
