"""Command-line interface: train, profile, sweep, and scale subcommands.

Single runs emit JSON, sweeps and benchmarks emit CSV; all outputs embed
enough configuration (seeds included) to reproduce the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import DgmlpError
from .nn import save_checkpoint
from .runner import RunConfig, load_run_dataset, run_profile, run_scale, \
    run_sweep, run_train
from .smoothness import write_gsl_csv, write_node_profile_csv


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--dp", type=int, default=2, help="propagation depth K")
    p.add_argument("--dt", type=int, default=1, help="transformation depth (1 = logistic head)")
    p.add_argument("--hidden", type=int, default=64, help="hidden width of the MLP")
    p.add_argument("--temperature", type=float, default=1.0, help="softmax temperature for step weights")
    p.add_argument("--r", type=float, default=0.5, help="normalization exponent in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--weight-decay", type=float, default=5e-6)
    p.add_argument("--bias", action="store_true", help="enable bias terms (off by default)")
    p.add_argument("--feature-norm", choices=("none", "l1", "l2"), default="l1",
                   help="per-row feature normalization applied before propagation")
    p.add_argument("--stack-budget-mb", type=int, default=2048,
                   help="above this, propagation avoids materializing the stack")
    p.add_argument("--out", help="output path (file, or directory for profile)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgmlp",
        description="Node classification via precomputed propagation, "
                    "node-adaptive combination, and a residual MLP.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the full pipeline once")
    _add_common(p)
    p.add_argument("--baseline", choices=("sgc",),
                   help="train the propagate-then-logistic-regression baseline instead")
    p.add_argument("--checkpoint", help="also save the trained model here (.npz)")

    p = sub.add_parser("profile", help="smoothness curves and per-node weights")
    _add_common(p)
    p.add_argument("--caps", type=_int_list,
                   help="comma-separated depth caps for combined-feature GSL")

    p = sub.add_parser("sweep", help="grid sweep with mean/std over seeds")
    _add_common(p)
    p.add_argument("--baseline", choices=("sgc",))
    p.add_argument("--dp-grid", type=_int_list)
    p.add_argument("--dt-grid", type=_int_list)
    p.add_argument("--keep-edges-grid", type=_float_list)
    p.add_argument("--labels-per-class-grid", type=_int_list)
    p.add_argument("--mask-features-grid", type=_float_list)
    p.add_argument("--num-seeds", type=int, default=1)

    p = sub.add_parser("scale", help="synthetic-graph scalability benchmark")
    _add_common(p)
    p.add_argument("--sizes", type=_int_list, default=[10_000],
                   help="comma-separated node counts")
    p.add_argument("--p", type=float, default=1e-4, dest="edge_prob",
                   help="edge probability of the generated graphs")
    p.add_argument("--dim", type=int, default=64, help="synthetic feature width")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--train-nodes", type=int, default=1000)
    p.add_argument("--val-nodes", type=int, default=500)
    p.add_argument("--test-nodes", type=int, default=1000)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = dict(
        dataset=args.dataset, dp=args.dp, dt=args.dt, hidden=args.hidden,
        temperature=args.temperature, r=args.r, lr=args.lr,
        epochs=args.epochs, weight_decay=args.weight_decay,
        dropout=args.dropout, seed=args.seed, use_bias=args.bias,
        feature_norm=args.feature_norm, stack_budget_mb=args.stack_budget_mb,
        out=args.out,
        baseline=getattr(args, "baseline", None),
        caps=getattr(args, "caps", None),
        dp_grid=getattr(args, "dp_grid", None),
        dt_grid=getattr(args, "dt_grid", None),
        keep_edges_grid=getattr(args, "keep_edges_grid", None),
        labels_per_class_grid=getattr(args, "labels_per_class_grid", None),
        mask_features_grid=getattr(args, "mask_features_grid", None),
        num_seeds=getattr(args, "num_seeds", 1),
        sizes=getattr(args, "sizes", None),
        edge_prob=getattr(args, "edge_prob", 1e-4),
        dim=getattr(args, "dim", 64),
        classes=getattr(args, "classes", 10),
        train_nodes=getattr(args, "train_nodes", 1000),
        val_nodes=getattr(args, "val_nodes", 500),
        test_nodes=getattr(args, "test_nodes", 1000),
    )
    return RunConfig(**fields)


def write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_csv(rows: list[dict], path) -> None:
    if not rows:
        raise DgmlpError("no rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _cmd_train(cfg: RunConfig, checkpoint: str | None) -> int:
    dataset = load_run_dataset(cfg)
    result, model, _ = run_train(dataset, cfg)
    if checkpoint and model is not None:
        save_checkpoint(model, checkpoint)
        result["checkpoint"] = checkpoint
    out = cfg.out or "train_result.json"
    write_json(result, out)
    print(f"test_accuracy={result['test_accuracy']:.4f} "
          f"best_epoch={result['best_epoch']} -> {out}")
    return 0


def _cmd_profile(cfg: RunConfig) -> int:
    dataset = load_run_dataset(cfg)
    result = run_profile(dataset, cfg)
    out_dir = Path(cfg.out or "profile_out")
    out_dir.mkdir(parents=True, exist_ok=True)

    profile = result.pop("profile")
    write_gsl_csv(profile, out_dir / "gsl_raw.csv")
    write_node_profile_csv(profile, out_dir / "node_profile.csv")
    write_csv(
        [{"cap": c, "gsl": g} for c, g in zip(result["caps"], result["gsl_combined"])],
        out_dir / "gsl_combined.csv",
    )
    write_csv(
        [
            {
                "step": k,
                "tercile_low": result["tercile_low"][k],
                "tercile_mid": result["tercile_mid"][k],
                "tercile_high": result["tercile_high"][k],
            }
            for k in result["steps"]
        ],
        out_dir / "nsl_by_degree.csv",
    )
    write_json(result, out_dir / "profile.json")
    print(f"wrote smoothness profile to {out_dir}/")
    return 0


def _cmd_sweep(cfg: RunConfig) -> int:
    dataset = load_run_dataset(cfg)
    rows = run_sweep(dataset, cfg)
    out = cfg.out or "sweep_results.csv"
    write_csv(rows, out)
    print(f"{len(rows)} sweep rows -> {out}")
    return 0


def _cmd_scale(cfg: RunConfig) -> int:
    rows = run_scale(cfg)
    out = cfg.out or "scale_results.csv"
    write_csv(rows, out)
    for row in rows:
        print(f"n={row['num_nodes']} preprocess={row['preprocess_seconds']:.2f}s "
              f"train={row['train_seconds']:.2f}s peak={row['peak_traced_mb']:.0f}MB")
    print(f"-> {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "train":
            return _cmd_train(cfg, getattr(args, "checkpoint", None))
        if args.command == "profile":
            return _cmd_profile(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg)
        if args.command == "scale":
            return _cmd_scale(cfg)
        raise DgmlpError(f"unknown command {args.command!r}")
    except DgmlpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
