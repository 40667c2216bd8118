"""Synthetic multi-label data from a random linear teacher, and the CSV format.

CSV layout: header ``id,f0,...,f{d-1},y0,...,y{L-1}``; features are decimal
reals written with shortest round-trip repr; label columns hold 1/0 for
ground truth and 1/0/-1 for observation files.  UTF-8, ``\\n`` line
endings, no quoting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .labelsettings import ObservationMatrix
from .ndcore import MlpParams


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_images: int = 2000
    n_features: int = 20
    n_classes: int = 10
    target_label_cardinality: float = 2.5
    noise_std: float = 0.1
    seed: int = 0
    n_test: int | None = None
    margin_scale: float = 1.0

    def __post_init__(self):
        for name in ("n_images", "n_features", "n_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.margin_scale > 0:
            raise ValueError("margin_scale must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if not 1.0 <= self.target_label_cardinality <= self.n_classes:
            raise ValueError(
                f"target_label_cardinality must lie in [1, {self.n_classes}], "
                f"got {self.target_label_cardinality}"
            )


@dataclass
class Dataset:
    features: np.ndarray
    gt: np.ndarray
    split: str = "train"
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.gt = np.asarray(self.gt).astype(np.int8)
        if self.features.ndim != 2 or self.gt.ndim != 2:
            raise ValueError("features and labels must be 2-D")
        if self.features.shape[0] != self.gt.shape[0]:
            raise ValueError("features and labels disagree on the number of rows")
        if self.ids is None:
            self.ids = np.arange(self.features.shape[0])
        self.ids = np.asarray(self.ids, dtype=np.int64)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return self.gt.shape[1]


def _class_rates(cardinality: float, n_classes: int) -> np.ndarray:
    """Per-class positive rates summing to ``cardinality``, mildly imbalanced."""
    weights = np.exp(np.linspace(0.0, -1.0, n_classes))
    rates = cardinality * weights / weights.sum()
    # push mass off saturated classes onto the rest
    for _ in range(n_classes):
        over = rates > 0.95
        if not over.any():
            break
        excess = (rates[over] - 0.95).sum()
        rates[over] = 0.95
        room = ~over
        if not room.any():
            break
        rates[room] += excess * rates[room] / rates[room].sum()
    return np.minimum(rates, 1.0)


def generate(spec: SyntheticSpec):
    """Draw ``(train, test, teacher)``.

    Class biases are set from quantiles of the training margins so the mean
    number of positives per image tracks ``target_label_cardinality``.
    Rows left with no positive get their highest-margin class switched on.
    """
    rng = np.random.default_rng(spec.seed)
    d, n_classes = spec.n_features, spec.n_classes
    weights = spec.margin_scale * rng.normal(size=(n_classes, d)) / math.sqrt(d)
    n_test = spec.n_images if spec.n_test is None else spec.n_test

    x_train = rng.normal(size=(spec.n_images, d))
    noise_train = spec.noise_std * rng.normal(size=(spec.n_images, n_classes))
    x_test = rng.normal(size=(n_test, d))
    noise_test = spec.noise_std * rng.normal(size=(n_test, n_classes))

    # the max-margin repair adds positives, so aim a little low
    raw = x_train @ weights.T + noise_train
    target = spec.target_label_cardinality
    lo, hi = max(target - 1.0, 0.0), target
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        bias = _calibrate(raw, _class_rates(mid, n_classes))
        card = _labels(raw + bias).sum(axis=1).mean()
        if card > target:
            hi = mid
        else:
            lo = mid
    bias = _calibrate(raw, _class_rates(0.5 * (lo + hi), n_classes))
    card = _labels(raw + bias).sum(axis=1).mean()
    if abs(card - target) > 0.1 * target:
        raise ValueError(f"cannot reach label cardinality {target} (got {card:.3f})")

    teacher = MlpParams(w1=np.zeros((0, d)), b1=np.zeros(0), w2=weights, b2=bias)
    train = Dataset(x_train, _labels(raw + bias), "train", np.arange(spec.n_images))
    test_margin = x_test @ weights.T + bias + noise_test
    test = Dataset(x_test, _labels(test_margin), "test",
                   np.arange(spec.n_images, spec.n_images + n_test))
    return train, test, teacher


def _calibrate(raw: np.ndarray, rates: np.ndarray) -> np.ndarray:
    bias = np.empty(raw.shape[1])
    for j, rate in enumerate(rates):
        if rate >= 1.0:
            bias[j] = 1.0 - raw[:, j].min()
        else:
            bias[j] = -np.quantile(raw[:, j], 1.0 - rate)
    return bias


def _labels(margin: np.ndarray) -> np.ndarray:
    labels = (margin > 0).astype(np.int8)
    empty = labels.sum(axis=1) == 0
    labels[empty, margin[empty].argmax(axis=1)] = 1
    return labels


def _format(value: float) -> str:
    return repr(float(value))


def _write(path, ids, features, labels) -> None:
    n_rows, d = features.shape
    n_classes = labels.shape[1]
    header = ["id"] + [f"f{k}" for k in range(d)] + [f"y{k}" for k in range(n_classes)]
    lines = [",".join(header)]
    for i in range(n_rows):
        row = [str(int(ids[i]))]
        row += [_format(v) for v in features[i]]
        row += [str(int(v)) for v in labels[i]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def save_csv(data, path, features=None, ids=None) -> None:
    """Write a :class:`Dataset`, or an :class:`ObservationMatrix` plus its features."""
    if isinstance(data, Dataset):
        _write(path, data.ids, data.features, data.gt)
        return
    if isinstance(data, ObservationMatrix):
        if features is None:
            raise ValueError("observation files carry features; pass features=")
        features = np.asarray(features, dtype=np.float64)
        if ids is None:
            ids = np.arange(features.shape[0])
        _write(path, ids, features, data.obs)
        return
    raise TypeError(f"cannot save {type(data).__name__}")


def read_table(path, allow_unobserved: bool = True):
    """Parse a dataset CSV into ``(ids, features, labels)``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    feat_cols = [c for c in header if c.startswith("f")]
    label_cols = [c for c in header if c.startswith("y")]
    expected = (["id"] + [f"f{k}" for k in range(len(feat_cols))]
                + [f"y{k}" for k in range(len(label_cols))])
    if header != expected or not label_cols:
        raise DataFormatError(f"{path}: malformed header on line 1")
    d, n_cols = len(feat_cols), len(header)
    allowed = {"1", "0", "-1"} if allow_unobserved else {"1", "0"}
    ids, feats, labels = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != n_cols:
            raise DataFormatError(
                f"{path}: line {lineno} has {len(cells)} fields, expected {n_cols}"
            )
        bad = [c for c in cells[1 + d:] if c not in allowed]
        if bad:
            raise DataFormatError(f"{path}: line {lineno} has label value {bad[0]!r}")
        try:
            ids.append(int(cells[0]))
            row = [float(c) for c in cells[1:1 + d]]
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in row):
            raise DataFormatError(f"{path}: line {lineno} has a non-finite feature")
        feats.append(row)
        labels.append([int(c) for c in cells[1 + d:]])
    features = np.asarray(feats, dtype=np.float64).reshape(len(ids), d)
    return (np.asarray(ids, dtype=np.int64), features,
            np.asarray(labels, dtype=np.int8).reshape(len(ids), len(label_cols)))


def load_csv(path, kind: str = "dataset", split: str | None = None):
    """Read a file written by :func:`save_csv`.

    ``kind="dataset"`` returns a :class:`Dataset`; ``kind="observations"``
    returns an :class:`ObservationMatrix`.
    """
    if kind == "dataset":
        ids, features, labels = read_table(path, allow_unobserved=False)
        if split is None:
            split = Path(path).stem
        return Dataset(features, labels, split, ids)
    if kind == "observations":
        _, _, labels = read_table(path, allow_unobserved=True)
        return ObservationMatrix(labels)
    raise ValueError(f"unknown kind {kind!r}")
