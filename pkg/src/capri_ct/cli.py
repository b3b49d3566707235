"""Command-line workflows.

Exit codes: 0 success, 1 usage error, 2 data error (bad inputs, missing
files, malformed rows), 3 runtime failure (diverged training, corrupt
checkpoints, internal errors). Errors are reported on stderr as
``error code=<machine_code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .causal import default_scenario_path, export_heatmap, results_to_csv, run_scenarios
from .data import (
    SplitSpec,
    SynthConfig,
    TensorScanSet,
    load_catalog,
    save_catalog_json,
    stratified_split,
    synth_generate,
)
from .errors import DataError, RuntimeFailure
from .model import ModelConfig
from .service import ServiceState, create_app, scenario_payload
from .stats import (
    ScoreMatrix,
    default_variants,
    format_ablation_table,
    friedman_test,
    run_ablation,
    wilcoxon_signed_rank,
)
from .training import TrainConfig, history_ndjson, train_ensemble, evaluate


def _env(name: str, default=None):
    return os.environ.get(f"CAPRI_CT_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capri-ct",
        description="SNR prediction and causal what-if analysis for CT protocols",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="validate a dataset and write a normalized catalog")
    p.add_argument("--root", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate the synthetic oracle dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-records", type=int, default=240)
    p.add_argument("--grid", type=int, default=13)
    p.add_argument("--noise-level", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, default=256)
    p.add_argument("--intensity-gain", type=float, default=0.0015)

    p = sub.add_parser("train", help="train a seed-varied ensemble")
    p.add_argument("--root", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated member seeds")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--input-size", type=int, default=128)
    p.add_argument("--latent-dim", type=int, default=32)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--quantiles", type=int, default=10)
    p.add_argument("--split-seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--split", choices=("val", "train", "all"), default="val")

    p = sub.add_parser("ablate", help="run the metadata-field ablation grid")
    p.add_argument("--root", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-size", type=int, default=64)
    p.add_argument("--latent-dim", type=int, default=16)

    p = sub.add_parser("whatif", help="run a scenario file against a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--scenarios", default="default", help="scenario CSV, or 'default'")
    p.add_argument("--out-csv", default="whatif.csv")
    p.add_argument("--out-heatmap", help="also render the heatmap CSV+PNG stem")

    p = sub.add_parser("stats", help="nonparametric tests over a score matrix")
    stats_sub = p.add_subparsers(dest="stats_command")
    f = stats_sub.add_parser("friedman", help="Friedman rank test over a score CSV")
    f.add_argument("--scores", required=True, help="CSV: header names treatments, one row per subject")
    f.add_argument("--higher-is-better", action="store_true")
    w = stats_sub.add_parser("wilcoxon", help="Wilcoxon signed-rank over two columns")
    w.add_argument("--scores", required=True)
    w.add_argument("--col-a", required=True)
    w.add_argument("--col-b", required=True)
    w.add_argument(
        "--alternative", choices=("two-sided", "greater", "less"), default="two-sided"
    )

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--checkpoint", default=_env("CHECKPOINT_PATH"))
    p.add_argument("--root", default=_env("DATASET_ROOT"))
    p.add_argument("--metadata", default=_env("METADATA_FILE"))
    p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(_env("PORT", "8000")))
    p.add_argument("--assets", default=_env("ASSETS_PATH"))
    p.add_argument("--max-concurrent", type=int, default=int(_env("MAX_CONCURRENT", "8")))
    p.add_argument("--scenarios", default=_env("SCENARIOS"))

    return parser


def _load_sets(args, input_size: int, split_spec: SplitSpec):
    catalog = load_catalog(args.root, args.metadata)
    train_idx, val_idx = stratified_split(catalog, split_spec)
    train_set = TensorScanSet.from_catalog(catalog, train_idx, input_size)
    val_set = TensorScanSet.from_catalog(catalog, val_idx, input_size)
    return catalog, train_set, val_set


def _cmd_ingest(args) -> int:
    catalog = load_catalog(args.root, args.metadata)
    save_catalog_json(catalog, args.out)
    print(json.dumps(catalog.summary(), indent=2))
    return 0


def _cmd_synth(args) -> int:
    config = SynthConfig(
        n_records=args.n_records,
        grid=args.grid,
        noise_level=args.noise_level,
        seed=args.seed,
        image_size=args.image_size,
        intensity_gain=args.intensity_gain,
    )
    catalog = synth_generate(config, args.out)
    print(json.dumps(catalog.summary(), indent=2))
    return 0


def _cmd_train(args) -> int:
    split_spec = SplitSpec(
        train_fraction=args.train_fraction,
        n_quantiles=args.quantiles,
        seed=args.split_seed,
    )
    _, train_set, val_set = _load_sets(args, args.input_size, split_spec)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    base = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        early_stop_patience=args.patience,
        split=split_spec,
    )
    model_config = ModelConfig(latent_dim=args.latent_dim, input_size=args.input_size)
    ensemble = train_ensemble(len(seeds), train_set, val_set, base, seeds, model_config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt.save_ensemble(ensemble, out)
    for i, member in enumerate(ensemble.members):
        (out / f"history_{i:02d}.ndjson").write_text(history_ndjson(member.history))
    summary = {
        "best_index": ensemble.best_index,
        "members": [m.metrics.as_dict() for m in ensemble.members],
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    loaded = ckpt.load_checkpoint(args.checkpoint)
    reference = loaded.members[loaded.best_index] if hasattr(loaded, "members") else loaded
    catalog = load_catalog(args.root, args.metadata)
    input_size = reference.model_config.input_size
    if args.split == "all":
        dataset = TensorScanSet.from_catalog(catalog, None, input_size)
    else:
        train_idx, val_idx = stratified_split(catalog, reference.train_config.split)
        indices = train_idx if args.split == "train" else val_idx
        dataset = TensorScanSet.from_catalog(catalog, indices, input_size)
    if hasattr(loaded, "members"):
        from .training import aggregate

        _, _, pooled = aggregate(loaded, dataset)
        per_member = [evaluate(m.net, dataset).as_dict() for m in loaded.members]
        print(json.dumps({"ensemble": pooled.as_dict(), "members": per_member}, indent=2))
    else:
        print(json.dumps(evaluate(loaded.net, dataset).as_dict(), indent=2))
    return 0


def _cmd_ablate(args) -> int:
    split_spec = SplitSpec(seed=args.seed)
    _, train_set, val_set = _load_sets(args, args.input_size, split_spec)
    model_config = ModelConfig(latent_dim=args.latent_dim, input_size=args.input_size)
    train_config = TrainConfig(epochs=args.epochs, seed=args.seed, split=split_spec)
    rows = run_ablation(default_variants(), train_set, val_set, model_config, train_config)
    print(format_ablation_table(rows))
    if args.out:
        import csv as _csv

        with open(args.out, "w", newline="") as fh:
            writer = _csv.DictWriter(
                fh, fieldnames=["name", "fields", "noise_field", "mae", "rmse", "r2"]
            )
            writer.writeheader()
            for row in rows:
                writer.writerow({**row, "fields": "+".join(row["fields"])})
    return 0


def _cmd_whatif(args) -> int:
    loaded = ckpt.load_checkpoint(args.checkpoint)
    catalog = load_catalog(args.root, args.metadata)
    scenario_file = (
        default_scenario_path() if args.scenarios == "default" else args.scenarios
    )
    results = run_scenarios(loaded, catalog, scenario_file)
    results_to_csv(results, args.out_csv)
    print(f"wrote {len(results)} scenarios to {args.out_csv}")
    if args.out_heatmap:
        stem = Path(args.out_heatmap)
        csv_path = stem.with_suffix(".csv")
        png_path = stem.with_suffix(".png")
        export_heatmap(results, csv_path, png_path)
        print(f"wrote heatmap to {csv_path} and {png_path}")
    return 0


def _read_score_csv(path):
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        names = list(reader.fieldnames or [])
        rows = [[float(row[name]) for name in names] for row in reader]
    return names, np.asarray(rows, dtype=float)


def _cmd_stats(args) -> int:
    if args.stats_command == "friedman":
        names, values = _read_score_csv(args.scores)
        matrix = ScoreMatrix(values, names, lower_is_better=not args.higher_is_better)
        result = friedman_test(matrix)
        print(
            json.dumps(
                {
                    "chi2": result.chi2,
                    "p": result.p,
                    "dof": result.dof,
                    "mean_ranks": dict(zip(names, result.mean_ranks.tolist())),
                },
                indent=2,
            )
        )
        return 0
    if args.stats_command == "wilcoxon":
        names, values = _read_score_csv(args.scores)
        for col in (args.col_a, args.col_b):
            if col not in names:
                raise DataError(f"column {col!r} not in {names}")
        a = values[:, names.index(args.col_a)]
        b = values[:, names.index(args.col_b)]
        result = wilcoxon_signed_rank(a, b, alternative=args.alternative)
        print(
            json.dumps(
                {
                    "statistic": result.statistic,
                    "p": result.p,
                    "n_used": result.n_used,
                    "exact": result.exact,
                },
                indent=2,
            )
        )
        return 0
    print("usage: capri-ct stats {friedman,wilcoxon} ...", file=sys.stderr)
    return 1


def _cmd_serve(args) -> int:
    for flag, value in (("--checkpoint", args.checkpoint), ("--root", args.root), ("--metadata", args.metadata)):
        if not value:
            print(f"error code=usage: {flag} is required (or its CAPRI_CT_* env var)", file=sys.stderr)
            return 1
    loaded = ckpt.load_checkpoint(args.checkpoint)
    catalog = load_catalog(args.root, args.metadata)
    state = ServiceState(
        model=loaded,
        catalog=catalog,
        checkpoint_hash=ckpt.checkpoint_hash(args.checkpoint),
        scenarios=scenario_payload(args.scenarios),
        assets_path=args.assets,
        max_concurrent=args.max_concurrent,
    )
    app = create_app(state)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "whatif": _cmd_whatif,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except DataError as exc:
        print(f"error code={exc.code}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error code=missing_file: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"error code={exc.code}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(f"error code=internal: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
