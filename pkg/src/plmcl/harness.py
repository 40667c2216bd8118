"""Run directories, model files and grid sweeps on top of :func:`~plmcl.training.train`."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import time
from pathlib import Path

import numpy as np

from .datagen import Dataset, SyntheticSpec, generate, load_csv
from .labelsettings import ObservationMatrix, make_mask
from .ndcore import MlpParams
from .training import TrainConfig, TrainResult, evaluate, train

log = logging.getLogger(__name__)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def save_model(params: MlpParams, path) -> None:
    Path(path).write_text(_json(params.to_dict()), encoding="utf-8")


def load_model(path) -> MlpParams:
    return MlpParams.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_data_dir(data_dir):
    """``(train, test)`` datasets from a directory made by ``gen-data``."""
    data_dir = Path(data_dir)
    train_set = load_csv(data_dir / "train.csv", split="train")
    test_path = data_dir / "test.csv"
    test_set = load_csv(test_path, split="test") if test_path.exists() else None
    return train_set, test_set


def run_training(config: TrainConfig, train_set: Dataset, observations: ObservationMatrix,
                 test_set: Dataset | None = None, trace_path=None) -> TrainResult:
    """:func:`train` on datasets, optionally streaming pseudo-label snapshots to JSON lines."""
    if observations.shape != train_set.gt.shape:
        raise ValueError(
            f"observations have shape {observations.shape}, dataset labels {train_set.gt.shape}"
        )
    callback = None
    trace = None
    if trace_path is not None and config.loss == "plmcl":
        trace = open(trace_path, "w", encoding="utf-8", newline="\n")

        def callback(epoch, state):
            for i, image_id in enumerate(train_set.ids):
                trace.write(json.dumps({
                    "epoch": epoch, "id": int(image_id),
                    "latent": state.latent[i].tolist(), "soft": state.soft[i].tolist(),
                    "momentum": state.momentum[i].tolist()}) + "\n")
    try:
        return train(config, train_set.features, observations, train_set.gt,
                     None if test_set is None else test_set.features,
                     None if test_set is None else test_set.gt, callback=callback)
    finally:
        if trace is not None:
            trace.close()


def summarize(config: TrainConfig, result: TrainResult) -> dict:
    return {
        "best_epoch": result.best_epoch,
        "best_map": _finite_or_none(result.best_map),
        "final_map": _finite_or_none(result.final_map),
        "final_train_map": _finite_or_none(result.report.rows[-1]["train_map"]),
        "config": config.to_dict(),
    }


def write_run(out_dir, config: TrainConfig, result: TrainResult, wall_time: float) -> None:
    """Write ``metrics.csv``, ``summary.json``, the models and ``timing.json``.

    Wall time lives in its own file so the other outputs are reproducible
    byte for byte.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.report.write_csv(out_dir / "metrics.csv")
    (out_dir / "summary.json").write_text(_json(summarize(config, result)), encoding="utf-8")
    save_model(result.params, out_dir / "model.json")
    save_model(result.final_params, out_dir / "model_final.json")
    (out_dir / "timing.json").write_text(_json({"wall_time_s": wall_time}), encoding="utf-8")


def evaluate_dataset(params: MlpParams, dataset: Dataset) -> dict:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    score, aps = evaluate(params, dataset.features, dataset.gt)
    return {"map": score, "per_class_ap": [_finite_or_none(a) for a in aps]}


SWEEP_COLUMNS = ("setting", "fraction", "loss", "seed", "status", "best_map", "final_map",
                 "best_epoch", "error")


def sweep(base: TrainConfig, settings, losses, seeds, data_spec: SyntheticSpec | None = None,
          data=None):
    """Train every (setting, loss, seed) combination.

    Each seed gets its own synthetic dataset (``data_spec`` with that seed)
    unless ``data=(train, test)`` is given.  The mask and the training run
    use the same seed.  A failing run is recorded and the sweep moves on.
    Returns the list of per-run rows.
    """
    data_spec = data_spec or SyntheticSpec()
    cache = {}
    rows = []
    for setting, fraction in settings:
        for loss in losses:
            for seed in seeds:
                row = {"setting": setting, "fraction": fraction, "loss": loss, "seed": seed,
                       "status": "ok", "best_map": None, "final_map": None,
                       "best_epoch": None, "error": ""}
                try:
                    if data is not None:
                        train_set, test_set = data
                    else:
                        if seed not in cache:
                            cache[seed] = generate(dataclasses.replace(data_spec, seed=seed))[:2]
                        train_set, test_set = cache[seed]
                    config = dataclasses.replace(base, loss=loss, setting=setting,
                                                 fraction=fraction, seed=seed)
                    obs = make_mask(setting, train_set.gt, fraction, seed)
                    result = run_training(config, train_set, obs, test_set)
                    row.update(best_map=result.best_map, final_map=result.final_map,
                               best_epoch=result.best_epoch)
                except Exception as exc:  # noqa: BLE001 - recorded per run
                    log.warning("run %s/%s/%s/%s failed: %s", setting, fraction, loss, seed, exc)
                    row.update(status="error", error=f"{type(exc).__name__}: {exc}")
                rows.append(row)
    return rows


def pivot(rows) -> list[dict]:
    """Median best mAP over seeds for every (loss, setting, fraction) cell."""
    cells = {}
    for row in rows:
        key = (row["loss"], row["setting"], row["fraction"])
        cells.setdefault(key, [])
        if row["status"] == "ok":
            cells[key].append(row["best_map"])
    out = []
    for (loss, setting, fraction), values in cells.items():
        out.append({"loss": loss, "setting": setting, "fraction": fraction,
                    "n_ok": len(values),
                    "median_best_map": float(np.median(values)) if values else None})
    return out


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        writer.writerow(cells)
    return buf.getvalue()


def write_sweep(out_dir, rows, wall_time: float | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "runs.csv").write_text(_csv_text(rows, SWEEP_COLUMNS), encoding="utf-8")
    (out_dir / "summary.csv").write_text(
        _csv_text(pivot(rows), ("loss", "setting", "fraction", "n_ok", "median_best_map")),
        encoding="utf-8")
    if wall_time is not None:
        (out_dir / "timing.json").write_text(_json({"wall_time_s": wall_time}),
                                             encoding="utf-8")


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start
