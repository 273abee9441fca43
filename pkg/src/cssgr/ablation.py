"""Ablation runner: the full model against its three reduced variants."""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .config import MODES, RunConfig
from .data import Sample
from .train import train

VARIANTS = MODES  # ("full", "no_ssm", "no_graph", "static_adjacency")


def _run_one(job):
    cfg, train_samples, heldout = job
    _, _, report = train(cfg, train_samples, heldout)
    h = report["heldout"]
    return {
        "variant": cfg.mode,
        "seed": cfg.seed,
        "rougeL_f1": h["rouge"]["rougeL"]["f1"],
        "rouge1_f1": h["rouge"]["rouge1"]["f1"],
        "rouge2_f1": h["rouge"]["rouge2"]["f1"],
        "exact_match": h["exact_match"],
        "final_train_loss": report["epochs"][-1]["train_loss"],
    }


def ablate(base: RunConfig, train_samples: Sequence[Sample], heldout: Sequence[Sample],
           seeds: Sequence[int] = (0, 1, 2, 3, 4), workers: int = 1) -> dict:
    """Train every variant for every seed and summarise held-out ROUGE-L.

    Runs are independent; ``workers > 1`` farms them out to processes without
    changing any per-run number.
    """
    jobs = [(base.replace(mode=v, seed=s), list(train_samples), list(heldout)) for v in VARIANTS for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    return {"seeds": list(seeds), "runs": runs, "summary": summarize(runs)}


def summarize(runs: Sequence[dict]) -> dict:
    by_variant: dict[str, list[float]] = {v: [] for v in VARIANTS}
    for r in runs:
        by_variant[r["variant"]].append(r["rougeL_f1"])
    table = {}
    full_mean = statistics.fmean(by_variant["full"]) if by_variant["full"] else float("nan")
    for v, vals in by_variant.items():
        if not vals:
            continue
        mean = statistics.fmean(vals)
        table[v] = {
            "rougeL_mean": mean,
            "rougeL_std": statistics.pstdev(vals) if len(vals) > 1 else 0.0,
            "delta_vs_full": mean - full_mean,
            "n": len(vals),
        }
    return table


def format_table(summary: dict) -> str:
    """Percent-scale ROUGE-L with signed drops relative to the full model."""
    lines = [f"{'variant':<18}{'ROUGE-L':>18}{'delta':>10}"]
    for v, row in summary.items():
        cell = f"{100 * row['rougeL_mean']:.1f} +/- {100 * row['rougeL_std']:.1f}"
        delta = "" if v == "full" else f"{100 * row['delta_vs_full']:+.1f}"
        lines.append(f"{v:<18}{cell:>18}{delta:>10}")
    return "\n".join(lines)


def to_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "rougeL_mean", "rougeL_std", "delta_vs_full", "n"])
    for v, row in result["summary"].items():
        w.writerow([v, repr(row["rougeL_mean"]), repr(row["rougeL_std"]), repr(row["delta_vs_full"]), row["n"]])
    return buf.getvalue()
