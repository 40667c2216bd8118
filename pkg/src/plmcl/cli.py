"""Command line entry point: ``plmcl gen-data | mask | train | eval | sweep``.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, load_synthetic_spec, load_sweep_config, load_train_config
from .datagen import DataFormatError, generate, load_csv, save_csv
from .harness import (evaluate_dataset, load_data_dir, load_model, run_training, save_model,
                      sweep, write_run, write_sweep)
from .labelsettings import SETTINGS, make_mask
from .training import NumericalAbort

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("plmcl")


def cmd_gen_data(args) -> int:
    spec = load_synthetic_spec(args.spec)
    train_set, test_set, teacher = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(train_set, out / "train.csv")
    save_csv(test_set, out / "test.csv")
    save_model(teacher, out / "teacher.json")
    log.info("wrote %d train / %d test rows to %s", len(train_set), len(test_set), out)
    return EXIT_OK


def cmd_mask(args) -> int:
    dataset = load_csv(args.input, kind="dataset")
    obs = make_mask(args.setting, dataset.gt, args.fraction, args.seed)
    save_csv(obs, args.out, features=dataset.features, ids=dataset.ids)
    log.info("%s: %d observed labels over %d images", args.setting, obs.n_observed(),
             obs.shape[0])
    return EXIT_OK


def cmd_train(args) -> int:
    config = load_train_config(args.config)
    train_set, test_set = load_data_dir(args.data)
    obs = load_csv(args.obs, kind="observations")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = run_training(config, train_set, obs, test_set,
                          trace_path=out / "pseudo_trace.jsonl" if args.trace_pseudo else None)
    write_run(out, config, result, time.perf_counter() - start)
    log.info("best mAP %.4f at epoch %d", result.best_map, result.best_epoch)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        params = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise DataFormatError(f"{args.model}: cannot read model ({exc})") from exc
    train_set, test_set = load_data_dir(args.data)
    dataset = test_set if args.split == "test" else train_set
    if dataset is None:
        raise DataFormatError(f"{args.data} has no {args.split}.csv")
    if dataset.features.shape[1] != params.n_features or dataset.n_classes != params.n_classes:
        raise DataFormatError("model and dataset dimensions differ")
    print(json.dumps(evaluate_dataset(params, dataset), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    base, axes, spec = load_sweep_config(args.config)
    start = time.perf_counter()
    rows = sweep(base, axes["settings"], axes["losses"], axes["seeds"], data_spec=spec)
    write_sweep(args.out, rows, time.perf_counter() - start)
    failed = sum(r["status"] != "ok" for r in rows)
    log.info("%d runs, %d failed", len(rows), failed)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plmcl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic train/test dataset")
    p.add_argument("--spec", required=True, help="key = value file of SyntheticSpec fields")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("mask", help="derive an observation file from ground truth")
    p.add_argument("--setting", required=True, choices=SETTINGS)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="directory with train.csv and test.csv")
    p.add_argument("--obs", required=True, help="observation CSV for train.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-pseudo", action="store_true",
                   help="write pseudo_trace.jsonl with per-epoch pseudo-label state")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="mAP of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("test", "train"), default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid of settings x losses x seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
