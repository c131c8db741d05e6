"""Command-line driver: data generation through training, triage, and serving.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.
Success paths write machine-readable JSON (or CSV) to stdout; anything meant
for humans goes to stderr. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .attribution import kernel_shap
from .bnn.model import predict_batch, predictive_mean_fn
from .bnn.training import TrainConfig, loss, split_indices, train
from .domain import (
    HEADS,
    BridgeParams,
    Dataset,
    dataset_to_csv,
    default_schema,
    generate_dataset,
    read_dataset,
    validate_params,
    write_dataset,
)
from .inference import Query, predict_full, predict_reduced
from .sampling import adaptive_resample, lhs_sample, scale_to_schema
from .triage import batch_to_csv, batch_triage, parse_portfolio_csv, triage

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="bridgetriage")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a labeled dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", choices=("lhs", "adaptive"), default="lhs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("train", help="train head model(s)")
    p.add_argument("--data", required=True)
    p.add_argument("--head", choices=(*HEADS, "all"), default="all")
    p.add_argument("--config", help="TrainConfig JSON file")
    p.add_argument("--epochs", type=int, help="override config epochs")
    p.add_argument("--batch-size", type=int, help="override config batch size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model directory")

    p = sub.add_parser("calibrate", help="fit posterior scales on validation")
    p.add_argument("--models", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the calibration JSON here as well")

    p = sub.add_parser("evaluate", help="metrics and calibration on the test split")
    p.add_argument("--models", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="write the report JSON here as well")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="report", help="alias for --report")

    p = sub.add_parser("predict", help="predict and triage one structure")
    p.add_argument("--models", required=True)
    p.add_argument("--features", required=True, help="JSON file {name: value}")
    p.add_argument("--reduced", action="store_true",
                   help="allow missing features (marginalized)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write response JSON here as well")

    p = sub.add_parser("explain", help="feature attribution at one input")
    p.add_argument("--models", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--head", choices=HEADS, required=True)
    p.add_argument("--n-coalitions", type=int, default=2048)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write attribution JSON here as well")

    p = sub.add_parser("triage", help="batch triage a portfolio CSV")
    p.add_argument("--models", required=True)
    p.add_argument("--portfolio", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="results CSV path (default: stdout)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="unused; accepted for interface uniformity")

    return parser


def _emit(obj, out_path: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_generate(args) -> int:
    if args.n < 1:
        raise ValidationError("--n must be >= 1")
    schema = default_schema()
    if args.strategy == "lhs":
        params = scale_to_schema(lhs_sample(args.n, schema.k, args.seed), schema)
        ds = generate_dataset(schema, params)
    else:
        n_seed = (args.n + 1) // 2
        seed_params = scale_to_schema(lhs_sample(n_seed, schema.k, args.seed), schema)
        seed_ds = generate_dataset(schema, seed_params)
        n_adaptive = args.n - n_seed
        if n_adaptive > 0:
            extra = adaptive_resample(seed_ds, n_adaptive, args.seed + 1, schema)
            extra_ds = generate_dataset(schema, extra)
            ds = Dataset(np.vstack([seed_ds.x, extra_ds.x]),
                         np.vstack([seed_ds.y, extra_ds.y]))
        else:
            ds = seed_ds
    if args.out:
        write_dataset(args.out, ds)
        print(json.dumps({"rows": len(ds), "strategy": args.strategy,
                          "seed": args.seed, "out": args.out}))
    else:
        sys.stdout.write(dataset_to_csv(ds))
    return EXIT_OK


def _load_train_config(args) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    # flags override file values
    if args.epochs is not None:
        values["epochs"] = args.epochs
    if args.batch_size is not None:
        values["batch_size"] = args.batch_size
    values["seed"] = args.seed
    return TrainConfig.from_dict(values)


def cmd_train(args) -> int:
    data = read_dataset(args.data)
    base_cfg = _load_train_config(args)
    heads = list(HEADS) if args.head == "all" else [args.head]
    schema = default_schema()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = {"heads": {}, "seed": args.seed, "config": base_cfg.fingerprint()}
    models = {}
    for offset, head in enumerate(heads):
        seed = base_cfg.seed + (offset if args.head == "all" else 0)
        cfg = dataclasses.replace(base_cfg, seed=seed)
        print(f"training head {head} (seed {cfg.seed}, {cfg.epochs} epochs)",
              file=sys.stderr)
        model = train(data, head, cfg, split_seed=args.seed,
                      on_epoch=lambda e, l: print(f"  epoch {e:4d} loss {l:.5f}",
                                                  file=sys.stderr)
                      if (e + 1) % 50 == 0 else None)
        models[head] = model
        pipeline.save_models(out_dir, {head: model}, schema)

        # held-out metrics on the internal test split
        tr_idx, _, te_idx = split_indices(len(data), args.seed)
        col = HEADS.index(head)
        eps = np.random.default_rng([cfg.seed, 2]).standard_normal(
            (cfg.train_mc_passes, model.n_params))
        x_std = model.standardize(data.x[tr_idx])
        final_loss = loss(model, x_std, data.y[tr_idx, col], cfg, eps)
        mu, _ = predict_batch(model, data.x[te_idx],
                              n_passes=pipeline.EVAL_MC_PASSES,
                              seed=pipeline.EVAL_SEED)
        entry = pipeline.head_metrics(mu, data.y[te_idx, col])
        entry["final_train_loss"] = final_loss
        summary["heads"][head] = entry

    if args.head == "all":
        background = pipeline.background_points(schema, args.seed, n=100)
        pipeline.write_background(out_dir, background, args.seed)
        print("computing feature importance ranking", file=sys.stderr)
        ranking = pipeline.compute_ranking(models, schema, background, args.seed)
        pipeline.write_ranking(out_dir, ranking)
        summary["ranking"] = ranking["ranking"]

    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    models, schema = pipeline.load_models(args.models)
    data = read_dataset(args.data)
    kappas, before, after = pipeline.fit_kappas_on_validation(models, data, args.seed)
    for h in HEADS:
        print(f"head {h} before:\n{before[h].table()}", file=sys.stderr)
        print(f"head {h} after:\n{after[h].table()}", file=sys.stderr)
        models[h] = models[h].with_kappa(kappas[h])
    pipeline.save_models(args.models, models, schema)
    _emit({
        "kappas": kappas,
        "before": {h: before[h].to_json_dict() for h in HEADS},
        "after": {h: after[h].to_json_dict() for h in HEADS},
    }, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    models, _ = pipeline.load_models(args.models)
    data = read_dataset(args.data)
    report = pipeline.evaluate_on_test_split(models, data, args.seed)
    _emit(report, args.report)
    return EXIT_OK


def _load_features(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValidationError("features file must hold a JSON object {name: value}")
    return {str(k): float(v) for k, v in raw.items()}


def cmd_predict(args) -> int:
    models, schema = pipeline.load_models(args.models)
    features = _load_features(args.features)
    unknown = sorted(set(features) - set(schema.names))
    if unknown:
        raise ValidationError(f"unknown features: {', '.join(unknown)}")
    missing = sorted(set(schema.names) - set(features))
    if missing and not args.reduced:
        raise ValidationError(
            "missing features (pass --reduced to marginalize them): "
            + ", ".join(missing))
    try:
        if missing:
            q = Query(known=features, seed=args.seed, schema=schema)
            preds, diagnostics = predict_reduced(models, q)
            input_mode = "reduced"
        else:
            p = BridgeParams.from_dict(features)
            violations = validate_params(p, schema)
            if violations:
                raise ValidationError("; ".join(str(v) for v in violations))
            preds = predict_full(models, p, seed=args.seed)
            diagnostics = {h: {"between_share": 0.0} for h in HEADS}
            input_mode = "full"
    except ValueError as e:
        raise ValidationError(str(e)) from e
    result = triage(preds)
    _emit({
        "heads": {h: preds[h].to_json_dict() for h in HEADS},
        "triage": result.to_json_dict(),
        "input_mode": input_mode,
        "diagnostics": diagnostics,
    }, args.out)
    return EXIT_OK


def cmd_explain(args) -> int:
    models, schema = pipeline.load_models(args.models)
    features = _load_features(args.features)
    missing = sorted(set(schema.names) - set(features))
    if missing:
        raise ValidationError("explain requires all features; missing: "
                              + ", ".join(missing))
    p = BridgeParams.from_dict(features)
    background = pipeline.load_background(args.models)
    if background is None:
        background = pipeline.background_points(schema, seed=0, n=100)
    f = predictive_mean_fn(models[args.head], seed=args.seed)
    attr = kernel_shap(f, p, background, n_coalitions=args.n_coalitions,
                       seed=args.seed, head=args.head,
                       feature_names=schema.names)
    _emit(attr.to_json_dict(), args.out)
    return EXIT_OK


def cmd_triage(args) -> int:
    models, schema = pipeline.load_models(args.models)
    text = Path(args.portfolio).read_text(encoding="utf-8")
    try:
        rows = parse_portfolio_csv(text, schema)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    params = [BridgeParams.from_dict(r) for r in rows]
    results, counts = batch_triage(params, models, schema=schema, seed=args.seed)
    csv_text = batch_to_csv(results)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(json.dumps({"summary": counts, "out": args.out}, indent=2))
    else:
        sys.stdout.write(csv_text)
        print(json.dumps({"summary": counts}, indent=2), file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import load_service_config, run
    config = load_service_config(args.config)
    run(config)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "explain": cmd_explain,
    "triage": cmd_triage,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, KeyError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
