"""Command-line entry point exposing every pipeline stage.

Exit codes: 0 success, 2 user/config error, 3 partial failure, 1 internal
error. Diagnostics go to stderr; data goes to files under ``--out``. Every
run writes its resolved configuration beside its outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import correlation, mos, training
from .errors import PartialFailureError, UserInputError
from .manifest import load_manifest, make_folds
from .metrics import (FarnebackFlowBackend, FeatureStore, HashEmbeddingBackend,
                      MetricEngine, PixelDistanceBackend, ZeroFlowBackend,
                      resolve_metric_names, write_metrics_csv)
from .qa.config import ModelConfig
from .qa.model import EditQaModel
from .video import default_decoder

MIN_PARTICIPANTS = 15


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _write_resolved_config(out_dir: Path, subcommand: str, args: argparse.Namespace,
                           extra: dict | None = None) -> None:
    resolved = {"subcommand": subcommand}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        resolved[key] = str(value) if isinstance(value, Path) else value
    if extra:
        resolved.update(extra)
    (out_dir / "resolved_config.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def _prepare_out(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_json_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UserInputError(f"cannot read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise UserInputError(f"config file {path} must hold a JSON object")
    return data


def _seed_everything(seed: int) -> None:
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        raise UserInputError(
            "missing required option(s): " + ", ".join(f"--{n}" for n in missing))


# -- mos ----------------------------------------------------------------------

def cmd_mos(args: argparse.Namespace) -> int:
    _require(args, "ratings")
    out = _prepare_out(args)
    records = mos.load_ratings_csv(args.ratings)
    annotators = {r.annotator_id for r in records}
    if len(annotators) < MIN_PARTICIPANTS:
        _log(f"warning: {len(annotators)} annotators is below the recommended "
             f"minimum of {MIN_PARTICIPANTS} (ITU-R BT.500)")
    table = mos.compute_mos(records)
    table.write_csv(out / "mos.csv")
    mos.write_rejected_json(table.rejected_annotators, out / "rejected.json")
    if args.rescale:
        lo, hi = args.rescale
        mos.rescale_mos(table, lo, hi).write_csv(out / "mos_rescaled.csv")
    _write_resolved_config(out, "mos", args)
    _log(f"wrote MOS for {len(table)} triplets "
         f"({len(table.rejected_annotators)} annotator(s) rejected)")
    return 0


# -- metrics ------------------------------------------------------------------

def _build_engine(args: argparse.Namespace) -> MetricEngine:
    features = None
    embedder = None
    if args.embedder.startswith("features:"):
        features = FeatureStore(args.embedder.split(":", 1)[1])
    elif args.embedder == "stub":
        embedder = HashEmbeddingBackend(dim=args.embed_dim, seed=args.seed)
    else:
        raise UserInputError(
            f"unknown embedder {args.embedder!r}; use 'stub' or 'features:<path>'")
    if args.flow == "zero":
        flow = ZeroFlowBackend()
    elif args.flow == "farneback":
        flow = FarnebackFlowBackend()
    else:
        raise UserInputError(f"unknown flow backend {args.flow!r}; use 'zero' or 'farneback'")
    if args.perceptual != "pixel":
        raise UserInputError(f"unknown perceptual backend {args.perceptual!r}; use 'pixel'")
    return MetricEngine(decoder=default_decoder(), embedder=embedder,
                        perceptual=PixelDistanceBackend(), flow=flow,
                        features=features)


def cmd_metrics(args: argparse.Namespace) -> int:
    _require(args, "manifest")
    out = _prepare_out(args)
    names: list[str] = []
    for chunk in args.metric:
        names.extend(n.strip() for n in chunk.split(",") if n.strip())
    if not names:
        raise UserInputError("no metrics requested; pass --metric")
    resolve_metric_names(names)  # validate before any work
    triplets = load_manifest(args.manifest)
    engine = _build_engine(args)
    rows: list[tuple[str, str, float]] = []
    failures: list[tuple[str, str, str]] = []
    for triplet in triplets:
        try:
            values = engine.compute(triplet, names)
        except UserInputError as exc:
            failures.append((triplet.triplet_id, ",".join(names), str(exc)))
            _log(f"error: triplet {triplet.triplet_id}: {exc}")
            continue
        for name in names:
            rows.append((triplet.triplet_id, name, values[name]))
    write_metrics_csv(rows, out / "metrics.csv")
    if failures:
        with open(out / "metric_errors.csv", "w", newline="") as fh:
            fh.write("triplet_id,metric,error\n")
            for tid, metric, err in failures:
                fh.write(f"{tid},{metric},{json.dumps(err)}\n")
    _write_resolved_config(out, "metrics", args, {"resolved_metrics": names})
    _log(f"computed {len(rows)} metric values over {len(triplets)} triplets; "
         f"{len(failures)} failure(s)")
    if failures and rows:
        return 3
    if failures:
        raise PartialFailureError("every triplet failed", [f[2] for f in failures])
    return 0


# -- train --------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    _require(args, "manifest", "mos")
    out = _prepare_out(args)
    _seed_everything(args.seed)
    model_config = ModelConfig.from_dict(
        {**_load_json_config(args.model_config), "seed": args.seed})
    train_config = training.TrainConfig.from_dict(
        {**_load_json_config(args.train_config), "seed": args.seed})
    triplets = load_manifest(args.manifest)
    table = mos.MosTable.read_csv(args.mos)
    examples = training.load_examples(triplets, table, default_decoder())
    model = EditQaModel(model_config)
    log_path = out / "train_log.jsonl"
    log_fh = open(log_path, "a" if args.resume else "w")

    def log_entry(entry: dict) -> None:
        log_fh.write(json.dumps(entry, sort_keys=True) + "\n")
        log_fh.flush()

    state = None
    start_stage = 1
    if args.resume:
        state, done_stage = training.load_checkpoint(args.resume, model, train_config)
        start_stage = done_stage + 1
        _log(f"resumed from {args.resume} (stage {done_stage} complete)")
    try:
        if start_stage <= 1:
            state = training.train_stage1(model, examples, train_config,
                                          state=state, log=log_entry)
            training.save_checkpoint(out / "stage1.pt", model, state, 1, train_config)
        if start_stage <= 2:
            state = training.train_stage2(model, examples, train_config,
                                          state=state, log=log_entry)
            training.save_checkpoint(out / "stage2.pt", model, state, 2, train_config)
    finally:
        log_fh.close()
    model_config.save(out / "model_config.json")
    train_config.save(out / "train_config.json")
    predictions = training.predict(model, examples)
    correlation.write_predictions_csv(predictions, out / "predictions.csv")
    _write_resolved_config(out, "train", args, {
        "model_config_hash": model_config.canonical_hash(),
        "train_config_hash": train_config.canonical_hash(),
    })
    _log(f"trained on {len(examples)} triplets; checkpoints in {out}")
    return 0


# -- eval ---------------------------------------------------------------------

def cmd_eval(args: argparse.Namespace) -> int:
    _require(args, "predictions", "mos")
    out = _prepare_out(args)
    predictions = correlation.load_predictions_csv(args.predictions)
    table = mos.MosTable.read_csv(args.mos)
    report = correlation.correlate_report(predictions, table.scores(),
                                          mos_source=args.mos_kind)
    report.write_json(out / "report.json")
    if report.n >= 5:
        correlation.write_scatter_csv(predictions, table.scores(), out / "scatter.csv")
    _write_resolved_config(out, "eval", args)
    _log(f"report over {report.n} triplets: srocc={report.srocc:.4f} "
         f"plcc={report.plcc:.4f} krcc={report.krcc:.4f} rmse={report.rmse:.4f}")
    return 0


# -- tenfold ------------------------------------------------------------------

def cmd_tenfold(args: argparse.Namespace) -> int:
    _require(args, "manifest", "mos")
    out = _prepare_out(args)
    _seed_everything(args.seed)
    model_config = ModelConfig.from_dict(
        {**_load_json_config(args.model_config), "seed": args.seed})
    train_config = training.TrainConfig.from_dict(
        {**_load_json_config(args.train_config), "seed": args.seed})
    triplets = load_manifest(args.manifest)
    table = mos.MosTable.read_csv(args.mos)
    folds = make_folds(triplets, args.k, args.seed)
    folds.save(out / "folds.json")
    result = training.run_kfold(triplets, table, model_config, train_config,
                                k=args.k, decoder=default_decoder(), folds=folds)
    for fold in result.folds:
        fold_dir = out / f"fold_{fold.fold_index:02d}"
        fold_dir.mkdir(exist_ok=True)
        fold.report.write_json(fold_dir / "report.json")
        correlation.write_predictions_csv(fold.predictions, fold_dir / "predictions.csv")
        (fold_dir / "train_triplets.json").write_text(
            json.dumps(sorted(fold.train_triplet_ids)) + "\n")
    (out / "summary.json").write_text(
        json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    _write_resolved_config(out, "tenfold", args, {
        "model_config_hash": model_config.canonical_hash(),
        "train_config_hash": train_config.canonical_hash(),
    })
    _log(f"{args.k}-fold run complete: mean srocc="
         f"{result.summary['mean']['srocc']:.4f}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="editqa",
        description="Benchmark tooling for text-driven video editing quality.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None,
                       help="optional JSON config file merged under the flags")

    p_mos = sub.add_parser("mos", help="ratings CSV -> screened, normalized MOS")
    common(p_mos)
    p_mos.add_argument("--ratings", default=None)
    p_mos.add_argument("--rescale", nargs=2, type=float, metavar=("LO", "HI"),
                       default=None, help="also write an [LO, HI] display-scaled table")
    p_mos.set_defaults(func=cmd_mos)

    p_met = sub.add_parser("metrics", help="objective metrics over a manifest")
    common(p_met)
    p_met.add_argument("--manifest", default=None)
    p_met.add_argument("--metric", action="append", default=[],
                       help="metric name(s), repeatable or comma-separated")
    p_met.add_argument("--embedder", default="stub",
                       help="'stub' or 'features:<jsonl>'")
    p_met.add_argument("--embed-dim", type=int, default=32)
    p_met.add_argument("--perceptual", default="pixel")
    p_met.add_argument("--flow", default="zero", help="'zero' or 'farneback'")
    p_met.set_defaults(func=cmd_metrics)

    p_train = sub.add_parser("train", help="two-stage training on a manifest + MOS")
    common(p_train)
    p_train.add_argument("--manifest", default=None)
    p_train.add_argument("--mos", default=None)
    p_train.add_argument("--model-config", default=None)
    p_train.add_argument("--train-config", default=None)
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="correlation report for stored predictions")
    common(p_eval)
    p_eval.add_argument("--predictions", default=None)
    p_eval.add_argument("--mos", default=None)
    p_eval.add_argument("--mos-kind", default="zscore",
                        help="which MOS table the report consumed (zscore/rescaled)")
    p_eval.set_defaults(func=cmd_eval)

    p_ten = sub.add_parser("tenfold", help="k-fold cross-validated training")
    common(p_ten)
    p_ten.add_argument("--manifest", default=None)
    p_ten.add_argument("--mos", default=None)
    p_ten.add_argument("--model-config", default=None)
    p_ten.add_argument("--train-config", default=None)
    p_ten.add_argument("--k", type=int, default=10)
    p_ten.set_defaults(func=cmd_tenfold)

    return parser, {"mos": p_mos, "metrics": p_met, "train": p_train,
                    "eval": p_eval, "tenfold": p_ten}


def main(argv: list[str] | None = None) -> int:
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            # Config-file values become the subcommand's defaults, then the
            # command line is re-parsed so explicit flags still win.
            file_config = _load_json_config(args.config)
            sub = subparsers[args.subcommand]
            valid = {action.dest for action in sub._actions}
            unknown = [k for k in file_config if k.replace("-", "_") not in valid]
            if unknown:
                raise UserInputError(
                    f"config file {args.config} has unknown key(s) {unknown}")
            sub.set_defaults(**{k.replace("-", "_"): v for k, v in file_config.items()})
            args = parser.parse_args(argv)
    except UserInputError as exc:
        _log(f"error: {exc}")
        return 2
    try:
        return args.func(args)
    except PartialFailureError as exc:
        _log(f"partial failure: {exc}")
        return 3
    except UserInputError as exc:
        _log(f"error: {exc}")
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        _log(f"internal error: {type(exc).__name__}: {exc}")
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
