"""Pipeline commands: gen, train, recover, eval, compare.

Exit codes: 0 on success, 2 on usage or configuration problems, 1 when an
internal invariant is violated. File-level config values are overridden by
flags, and every command echoes its effective configuration into its
outputs for reproducibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import fields as dataclass_fields

import numpy as np

from .activities import ACTIVITY_CATEGORIES
from .data import (
    AlignmentError,
    ParseError,
    align_subsequence,
    read_samples,
    read_sequences,
    write_samples,
    write_sequences,
)
from .generator import ConfigError, GeneratorConfig, default_config, generate_population, make_samples
from .metrics import (
    activity_distribution,
    compare_transitions,
    evaluate,
    insertion_pattern_topk,
    transition_analysis,
)
from .model import CompatibilityError, ModelConfig, VocabularyError, load_checkpoint
from .training import TrainConfig, train

_USAGE_ERRORS = (
    ConfigError,
    ParseError,
    CompatibilityError,
    VocabularyError,
    FileNotFoundError,
    IsADirectoryError,
    ValueError,
)


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_gen(args) -> int:
    if args.config is not None:
        cfg = GeneratorConfig.from_json_file(args.config)
    else:
        cfg = default_config()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n_days is not None:
        cfg.n_days = args.n_days
    if args.p_remove is not None:
        cfg.p_remove = args.p_remove
    cfg.validate()
    sequences = generate_population(cfg)
    samples = make_samples(sequences, cfg.p_remove, cfg.seed)
    write_samples(args.out, samples)
    counts = [len(s.complete) for s in samples]
    summary = {
        "config": cfg.to_json_dict(),
        "n_days": len(samples),
        "mean_daily_activities": float(np.mean(counts)),
        "total_activities": int(np.sum(counts)),
        "total_removed": int(sum(len(s.removed_positions) for s in samples)),
    }
    _write_json(str(args.out) + ".summary.json", summary)
    print(f"gen: wrote {len(samples)} samples to {args.out} "
          f"(mean daily activities {summary['mean_daily_activities']:.3f})")
    return 0


def _layered_configs(args) -> tuple[ModelConfig, TrainConfig]:
    """File values under flag values; unknown file keys are rejected."""
    model_keys = {f.name for f in dataclass_fields(ModelConfig)}
    train_keys = {f.name for f in dataclass_fields(TrainConfig)}
    model_raw: dict = {}
    train_raw: dict = {}
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: not valid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: config root must be an object")
        for key, value in raw.items():
            if key in model_keys:
                model_raw[key] = value
            elif key in train_keys:
                train_raw[key] = value
            else:
                raise ConfigError(f"{args.config}: unknown config key {key!r}")
    flag_model = {
        "d_m": args.d_m, "n_heads": args.heads, "n_layers": args.n_layers,
        "dropout": args.dropout, "max_len": args.max_len, "max_rounds": args.max_rounds,
    }
    model_raw.update({k: v for k, v in flag_model.items() if v is not None})
    flag_train = {
        "lr": args.lr, "batch_size": args.batch_size, "epochs": args.epochs,
        "seed": args.seed, "checkpoint_interval": args.checkpoint_interval,
    }
    train_raw.update({k: v for k, v in flag_train.items() if v is not None})
    model_raw["use_vsn"] = args.flavor == "vsnit"
    return ModelConfig(**model_raw), TrainConfig(**train_raw)


def cmd_train(args) -> int:
    samples = read_samples(args.data)
    if not samples:
        raise ConfigError(f"{args.data}: dataset is empty")
    model_config, train_config = _layered_configs(args)
    resume_from = args.out if args.resume else None
    model, report = train(
        samples, model_config, train_config,
        checkpoint_path=args.out, resume_from=resume_from,
    )
    payload = report.to_json_dict()
    payload["flavor"] = args.flavor
    payload["model_config"] = model_config.to_dict()
    payload["train_config"] = train_config.to_dict()
    _write_json(str(args.out) + ".report.json", payload)
    print(f"train: {report.steps} steps, final loss "
          f"{report.losses[-1] if report.losses else float('nan'):.4f}, "
          f"checkpoint {args.out}")
    return 0


def cmd_recover(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    samples = read_samples(args.data)
    hypotheses = []
    for i, sample in enumerate(samples):
        outcome = model.recover(sample.incomplete, max_rounds=args.max_rounds)
        try:
            align_subsequence(sample.incomplete.labels(), outcome.sequence.labels())
        except AlignmentError as exc:
            print(
                f"recover: invariant breach on sample {i}: input tokens are not "
                f"a subsequence of the hypothesis ({exc})",
                file=sys.stderr,
            )
            return 1
        hypotheses.append(outcome.sequence)
    write_sequences(args.out, hypotheses)
    print(f"recover: wrote {len(hypotheses)} hypotheses to {args.out}")
    return 0


def cmd_eval(args) -> int:
    samples = read_samples(args.data)
    hypotheses = read_sequences(args.hyp)
    if len(samples) != len(hypotheses):
        raise ConfigError(
            f"{args.data} has {len(samples)} samples but {args.hyp} has "
            f"{len(hypotheses)} hypotheses"
        )
    report = evaluate(samples, hypotheses)
    _write_json(str(args.out) + ".metrics.json", report.to_json_dict())
    hyp_counts = activity_distribution(hypotheses)
    target_counts = activity_distribution([s.complete for s in samples])
    _write_csv(
        str(args.out) + ".distribution.csv",
        ["label", "hypothesis", "target"],
        [[label, hyp_counts[label], target_counts[label]] for label in ACTIVITY_CATEGORIES],
    )
    patterns = insertion_pattern_topk(samples, hypotheses, k=20)
    _write_csv(
        str(args.out) + ".patterns.csv",
        ["pattern", "count"],
        [["|".join(pattern), count] for pattern, count in patterns],
    )
    table = transition_analysis(samples, hypotheses)
    _write_json(
        str(args.out) + ".transitions.json",
        {
            "labels": list(ACTIVITY_CATEGORIES),
            "broken": table.broken.tolist(),
            "inserted": table.inserted.tolist(),
        },
    )
    for kind, grid in (("broken", table.broken), ("inserted", table.inserted)):
        _write_csv(
            str(args.out) + f".transitions_{kind}.csv",
            ["from", "to", "count"],
            [
                [a, b, int(grid[i, j])]
                for i, a in enumerate(ACTIVITY_CATEGORIES)
                for j, b in enumerate(ACTIVITY_CATEGORIES)
            ],
        )
    print(f"eval: wrote metrics and tables with prefix {args.out}")
    return 0


def cmd_compare(args) -> int:
    samples = read_samples(args.data)
    hyp_a = read_sequences(args.hyp_a)
    hyp_b = read_sequences(args.hyp_b)
    if not (len(samples) == len(hyp_a) == len(hyp_b)):
        raise ConfigError(
            f"lengths differ: {len(samples)} samples, {len(hyp_a)} vs {len(hyp_b)} hypotheses"
        )
    table_a = transition_analysis(samples, hyp_a)
    table_b = transition_analysis(samples, hyp_b)
    verdicts = compare_transitions(table_a, table_b)
    payload = {
        "metrics_a": evaluate(samples, hyp_a).to_json_dict(),
        "metrics_b": evaluate(samples, hyp_b).to_json_dict(),
        "transition_wins_a": verdicts["wins_a"],
        "transition_wins_b": verdicts["wins_b"],
        "transition_ties": verdicts["ties"],
        "cells": verdicts["cells"],
    }
    _write_json(args.out, payload)
    print(
        f"compare: A wins {verdicts['wins_a']}, B wins {verdicts['wins_b']}, "
        f"ties {verdicts['ties']} (of 162 cells)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actrecover", description="Activity sequence recovery pipeline."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic recovery dataset")
    gen.add_argument("--out", required=True, help="output dataset (JSONL)")
    gen.add_argument("--config", default=None, help="generator config JSON")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--n-days", type=int, default=None)
    gen.add_argument("--p-remove", type=float, default=None)
    gen.set_defaults(func=cmd_gen)

    tr = sub.add_parser("train", help="train a model on a recovery dataset")
    tr.add_argument("--data", required=True, help="samples JSONL")
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--flavor", choices=("vsnit", "baseline"), default="vsnit")
    tr.add_argument("--config", default=None, help="train/model config JSON")
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--batch-size", type=int, default=None)
    tr.add_argument("--lr", type=float, default=None)
    tr.add_argument("--d-m", type=int, default=None)
    tr.add_argument("--heads", type=int, default=None)
    tr.add_argument("--n-layers", type=int, default=None)
    tr.add_argument("--dropout", type=float, default=None)
    tr.add_argument("--max-len", type=int, default=None)
    tr.add_argument("--max-rounds", type=int, default=None)
    tr.add_argument("--checkpoint-interval", type=int, default=None)
    tr.add_argument("--resume", action="store_true", help="continue from the checkpoint at --out")
    tr.set_defaults(func=cmd_train)

    rec = sub.add_parser("recover", help="recover sequences with a trained model")
    rec.add_argument("--checkpoint", required=True)
    rec.add_argument("--data", required=True, help="samples JSONL (incomplete inputs)")
    rec.add_argument("--out", required=True, help="hypotheses JSONL")
    rec.add_argument("--max-rounds", type=int, default=None)
    rec.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity")
    rec.set_defaults(func=cmd_recover)

    ev = sub.add_parser("eval", help="score hypotheses against their samples")
    ev.add_argument("--data", required=True, help="samples JSONL")
    ev.add_argument("--hyp", required=True, help="hypotheses JSONL")
    ev.add_argument("--out", required=True, help="output prefix")
    ev.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity")
    ev.set_defaults(func=cmd_eval)

    cmp_ = sub.add_parser("compare", help="compare two hypothesis sets")
    cmp_.add_argument("--data", required=True, help="samples JSONL")
    cmp_.add_argument("--hyp-a", required=True)
    cmp_.add_argument("--hyp-b", required=True)
    cmp_.add_argument("--out", required=True, help="comparison JSON")
    cmp_.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
