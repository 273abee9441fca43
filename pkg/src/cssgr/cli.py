"""Command-line entry point: ``cssgr <subcommand> ...``.

Every subcommand exits 0 on success. Failures exit 1 (bad input) or 2
(a failed check) and print one JSON object ``{"error": ..., "message": ...}``
on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(args) -> int:
    from .data import GeneratorConfig, gen_synthetic

    gcfg = GeneratorConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else GeneratorConfig()
    paths = gen_synthetic(gcfg, args.seed if args.seed is not None else 0, _out_dir(args))
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    return 0


def cmd_train(args) -> int:
    from .train import run_training

    cfg = _load_config(args)
    if args.train:
        cfg = cfg.replace(train_path=args.train)
    if args.heldout:
        cfg = cfg.replace(heldout_path=args.heldout)
    report = run_training(cfg, _out_dir(args), progress=args.verbose)
    print(json.dumps({"out": args.out, "heldout": report.get("heldout", {}).get("rouge")}, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    from .checkpoint import load_checkpoint
    from .data import read_jsonl
    from .train import evaluate_model, write_metrics

    model, _ = load_checkpoint(args.checkpoint)
    samples = read_jsonl(args.data)
    if not samples:
        raise ValueError(f"dataset {args.data} is empty")
    metrics = evaluate_model(model, samples)
    metrics["config_hash"] = model.cfg.config_hash()
    metrics["seed"] = model.cfg.seed
    out = _out_dir(args)
    write_metrics(metrics, out / "metrics.json")
    print(json.dumps(metrics["rouge"], sort_keys=True))
    return 0


def cmd_summarize(args) -> int:
    from .checkpoint import load_checkpoint
    from .data import read_jsonl

    model, _ = load_checkpoint(args.checkpoint)
    samples = read_jsonl(args.data)
    if args.sample_id is not None:
        matches = [s for s in samples if s.sample_id == args.sample_id]
        if not matches:
            raise ValueError(f"no sample with id {args.sample_id!r}")
        sample = matches[0]
    else:
        if not 0 <= args.index < len(samples):
            raise ValueError(f"index {args.index} out of range for {len(samples)} samples")
        sample = samples[args.index]
    sample.validate(model.cfg.vocab_size, model.cfg.d_raw)
    print(" ".join(str(t) for t in model.summarize([sample])[0]))
    return 0


def cmd_ablate(args) -> int:
    from .ablation import ablate, format_table, to_csv
    from .data import read_jsonl

    cfg = _load_config(args)
    train_path = args.train or cfg.train_path
    heldout_path = args.heldout or cfg.heldout_path
    if not train_path or not heldout_path:
        raise ValueError("ablate needs training and held-out datasets (config paths or --train/--heldout)")
    seeds = [int(s) for s in args.seeds.split(",")]
    result = ablate(cfg, read_jsonl(train_path), read_jsonl(heldout_path), seeds, workers=args.workers)
    out = _out_dir(args)
    (out / "ablation.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    (out / "ablation.csv").write_text(to_csv(result))
    print(format_table(result["summary"]))
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import gradcheck, tiny_config

    cfg = RunConfig.from_json(args.config) if args.config else tiny_config()
    report = gradcheck(cfg, seed=args.seed if args.seed is not None else 0, gamma=args.gamma)
    summary = report.summary()
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        (_out_dir(args) / "gradcheck.json").write_text(text + "\n")
    print(text)
    if not report.passed:
        bad = [g for g, r in summary["groups"].items() if not r["passed"]]
        _fail("GradcheckFailed", f"gradient mismatch in groups: {', '.join(bad)}")
        return 2
    return 0


def _fail(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cssgr", description="Cross-modal state-space graph reasoning toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", required=out_required, help="output directory")

    sp = sub.add_parser("gen-data", help="write synthetic train/heldout JSONL files")
    common(sp)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train", help="train a model and write checkpoint + metrics")
    common(sp)
    sp.add_argument("--train", help="training JSONL (overrides config)")
    sp.add_argument("--heldout", help="held-out JSONL (overrides config)")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="greedy-decode a dataset and score it")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("summarize", help="decode one sample to stdout")
    common(sp, out_required=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--sample-id")
    sp.set_defaults(func=cmd_summarize)

    sp = sub.add_parser("ablate", help="train all ablation variants over several seeds")
    common(sp)
    sp.add_argument("--train")
    sp.add_argument("--heldout")
    sp.add_argument("--seeds", default="0,1,2,3,4")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("gradcheck", help="finite-difference check of every parameter group")
    common(sp, out_required=False)
    sp.add_argument("--gamma", type=float, help="override the fusion scalar before checking")
    sp.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        _fail(type(exc).__name__, str(exc))
        return 1
    except RuntimeError as exc:
        _fail(type(exc).__name__, str(exc))
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
