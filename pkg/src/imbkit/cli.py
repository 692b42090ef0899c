"""Command-line front end: prepare, resample, train, evaluate, benchmark."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from . import data as D
from .config import ConfigError, RunConfig
from .evaluation import REPORT_HEADER, run_experiment, score, stratified_split
from .models import fit_model, load_model, save_model
from .preprocess import fit_pipeline
from .samplers import ORIGIN_NAMES, resample

log = logging.getLogger("imbkit")


def _path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


def _load_raw(cfg: RunConfig) -> D.Dataset:
    if not cfg.dataset:
        raise ConfigError("config has no 'dataset' path")
    header = None
    if cfg.schema == "numeric" and not cfg.columns and os.path.exists(cfg.dataset):
        with open(cfg.dataset, newline="") as fh:
            header = next(csv.reader(fh), None)
    return D.load_csv(cfg.dataset, cfg.schema_columns(header), cfg.drop_missing_target)


def cmd_prepare(cfg: RunConfig) -> int:
    """Encode the raw CSV; write train.csv, test.csv and pipeline.json."""
    seed = cfg.require_seed()
    raw = _load_raw(cfg)
    spec = cfg.pipeline_spec()
    train_idx, test_idx = stratified_split(raw.y, cfg.test_fraction, seed)
    fit_rows = raw if spec.paper_compat_full_fit else raw.take(train_idx)
    fitted = fit_pipeline(spec, fit_rows)
    os.makedirs(cfg.out, exist_ok=True)
    fitted.save(_path(cfg, "pipeline.json"))
    D.write_dataset(fitted.transform_dataset(raw.take(train_idx)), _path(cfg, "train.csv"))
    D.write_dataset(fitted.transform_dataset(raw.take(test_idx)), _path(cfg, "test.csv"))
    print(
        f"prepared {len(train_idx)} train / {len(test_idx)} test rows, "
        f"{len(fitted.selected)} features (of {len(fitted.encoded_names)} encoded)"
    )
    return 0


def cmd_resample(cfg: RunConfig, input_path: str | None = None) -> int:
    """Resample a prepared file; write resampled.csv and provenance.csv."""
    seed = cfg.require_seed()
    ds = D.read_dataset(input_path or _path(cfg, "train.csv"))
    sampler = cfg.sampler_config()
    res = resample(ds.X, ds.y, sampler)
    os.makedirs(cfg.out, exist_ok=True)
    target = ds.target_column.name if ds.target_column else "target"
    D.write_dataset(D.from_arrays(res.X, res.y, ds.feature_names, target), _path(cfg, "resampled.csv"))
    with open(_path(cfg, "provenance.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "origin", "source", "partner", "gap"])
        for i in range(len(res)):
            gap = "" if np.isnan(res.gap[i]) else repr(float(res.gap[i]))
            partner = "" if res.partner[i] < 0 else int(res.partner[i])
            w.writerow([i, ORIGIN_NAMES[int(res.origin[i])], int(res.source[i]), partner, gap])
        for src in res.removed:
            w.writerow(["", "removed", int(src), "", ""])
    pos, neg = D.class_counts(res.y)
    print(f"{sampler.kind} (seed {seed}): {len(res)} rows, positive={pos} negative={neg}, removed={res.n_removed}")
    return 0


def cmd_train(cfg: RunConfig, input_path: str | None = None) -> int:
    """Fit the first configured model; write model.npz."""
    cfg.require_seed()
    if input_path is None:
        input_path = _path(cfg, "resampled.csv")
        if not os.path.exists(input_path):
            input_path = _path(cfg, "train.csv")
    ds = D.read_dataset(input_path)
    spec = cfg.model_specs()[0]
    model = fit_model(ds.X, ds.y, spec)
    os.makedirs(cfg.out, exist_ok=True)
    save_model(model, _path(cfg, "model.npz"))
    print(f"trained {spec.kind} on {ds.n_rows} rows x {len(ds.feature_names)} features")
    return 0


def cmd_evaluate(cfg: RunConfig, input_path: str | None = None, model_path: str | None = None) -> int:
    """Score a saved model on a prepared file; write evaluation.csv."""
    model = load_model(model_path or _path(cfg, "model.npz"))
    ds = D.read_dataset(input_path or _path(cfg, "test.csv"))
    if len(ds.feature_names) != model.n_features:
        raise D.SchemaError(f"model expects {model.n_features} features, file has {len(ds.feature_names)}")
    m = score(ds.y, model.predict(ds.X))
    os.makedirs(cfg.out, exist_ok=True)
    with open(_path(cfg, "evaluation.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerow([model.kind, "", "eval", repr(m.f1), repr(m.precision), repr(m.recall)])
    print(f"f1={m.f1:.4f} precision={m.precision:.4f} recall={m.recall:.4f}")
    return 0


def cmd_benchmark(cfg: RunConfig) -> int:
    """Run every (model, balancer) cell; stream report.csv, then report.json."""
    seed = cfg.require_seed()
    raw = _load_raw(cfg)
    samplers = [cfg.sampler_config(code) for code in cfg.balancers]
    os.makedirs(cfg.out, exist_ok=True)
    csv_path = _path(cfg, "report.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        fh.flush()

        def flush_cell(cell):
            w.writerows(cell.csv_rows())
            fh.flush()
            log.info("cell %s/%s cv_f1=%.4f test_f1=%.4f", cell.model, cell.sampler, cell.cv_mean_f1, cell.test.f1)

        report = run_experiment(
            cfg.model_specs(),
            samplers,
            cfg.pipeline_spec(),
            raw,
            k=cfg.k_folds,
            test_fraction=cfg.test_fraction,
            seed=seed,
            jobs=cfg.jobs,
            on_cell=flush_cell,
        )
    with open(_path(cfg, "report.json"), "w") as fh:
        fh.write(report.to_json())
    print(report.summary())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imbkit", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="override the config seed (u64)")
    common.add_argument("--jobs", type=int, help="worker threads; never changes results")
    common.add_argument("--out", help="output directory")
    common.add_argument("--paper-compat", action="store_true", help="fit preprocessing on all rows before splitting")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", parents=[common], help="encode and split the raw CSV")
    for name in ("resample", "train"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--input", help="prepared dataset file")
    p = sub.add_parser("evaluate", parents=[common])
    p.add_argument("--input", help="prepared dataset file to score")
    p.add_argument("--model", help="model file")
    sub.add_parser("benchmark", parents=[common], help="sampler x model cross-validated comparison")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    started = time.time()
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 1 << 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        if args.jobs is not None:
            cfg.jobs = max(1, args.jobs)
        if args.out is not None:
            cfg.out = args.out
        if args.paper_compat:
            cfg.paper_compat_full_fit = True
        if args.command == "prepare":
            code = cmd_prepare(cfg)
        elif args.command == "resample":
            code = cmd_resample(cfg, args.input)
        elif args.command == "train":
            code = cmd_train(cfg, args.input)
        elif args.command == "evaluate":
            code = cmd_evaluate(cfg, args.input, args.model)
        else:
            code = cmd_benchmark(cfg)
    except (OSError, ValueError, KeyError) as exc:
        print(f"imbkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.1fs", args.command, time.time() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
