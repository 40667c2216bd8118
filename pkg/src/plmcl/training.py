"""Mini-batch training with momentum-updated pseudo labels or a baseline loss."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .labelsettings import SETTINGS, ObservationMatrix
from .losses import LOSSES, LossBreakdown, objective
from .metrics import mean_of_aps, per_class_ap
from .ndcore import MlpParams, backward, forward, init_params, sgd_step
from .pseudo import PseudoHyper, PseudoState, epoch_update, init_pseudo


class NumericalAbort(FloatingPointError):
    def __init__(self, epoch: int, batch: int, detail: str):
        super().__init__(f"epoch {epoch}, batch {batch}: {detail}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainConfig:
    loss: str = "plmcl"
    setting: str = "fspl"
    fraction: float = 1.0
    epochs: int = 10
    batch_size: int = 16
    lr: float = 0.1
    beta1: float = 0.7
    beta2: float = 0.6
    alpha: float = 1.0
    lam: float = 4.0
    n: int = 2
    reg_weight: float = 0.1
    expected_positives: float = 1.0
    hidden_width: int = 64
    seed: int = 0
    two_phase: bool = False
    head_epochs: int = 5
    finetune_epochs: int = 5
    ls_eps: float = 0.1
    wan_gamma: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")
        for name in ("epochs", "batch_size", "n"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("lr", "alpha", "lam", "beta2", "expected_positives"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if self.reg_weight < 0 or self.hidden_width < 0:
            raise ValueError("reg_weight and hidden_width must be non-negative")
        if not 0.0 <= self.ls_eps < 1.0:
            raise ValueError(f"ls_eps must lie in [0, 1), got {self.ls_eps}")
        if self.two_phase and (self.head_epochs < 0 or self.finetune_epochs < 0
                               or self.head_epochs + self.finetune_epochs < 1):
            raise ValueError("two-phase training needs non-negative epoch counts summing to >= 1")

    @property
    def total_epochs(self) -> int:
        if self.two_phase:
            return self.head_epochs + self.finetune_epochs
        return self.epochs

    @property
    def hyper(self) -> PseudoHyper:
        return PseudoHyper(beta1=self.beta1, alpha=self.alpha, lam=self.lam, n=self.n)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class MetricsReport:
    rows: list = field(default_factory=list)

    COLUMNS = ("epoch", "phi", "loss_obs", "loss_unobs", "loss_reg", "loss_total",
               "train_map", "test_map", "pseudo_confidence", "pseudo_agreement")

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows],
                        dtype=np.float64)

    def to_csv(self) -> str:
        n_classes = len(self.rows[0]["test_ap"]) if self.rows else 0
        header = list(self.COLUMNS) + [f"test_ap_{j}" for j in range(n_classes)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in self.rows:
            cells = [_cell(row[c]) for c in self.COLUMNS]
            cells += [_cell(v) for v in row["test_ap"]]
            writer.writerow(cells)
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


@dataclass
class TrainResult:
    params: MlpParams
    final_params: MlpParams
    pseudo: PseudoState | None
    report: MetricsReport
    best_epoch: int
    best_map: float

    @property
    def final_map(self) -> float:
        return self.report.rows[-1]["test_map"] if self.report.rows else float("nan")


def _safe_map(scores, truth):
    aps = per_class_ap(scores, truth)
    return mean_of_aps(aps), aps


def evaluate(params: MlpParams, features, truth):
    """``(mAP, per-class AP)`` of ``params`` on a labelled set."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    probs, _ = forward(params, features)
    aps = per_class_ap(probs, truth)
    if np.isnan(aps).all():
        raise ValueError("no class has a positive example")
    return mean_of_aps(aps), aps


def train(config: TrainConfig, features, observations, truth=None,
          test_features=None, test_truth=None, callback=None) -> TrainResult:
    """Fit the classifier on partially observed labels.

    Per mini-batch: forward pass, pseudo-label update for the batch's
    images (plmcl only), loss on the soft labels held before the update,
    backprop and an SGD step.  Each image appears in exactly one batch
    per epoch, so its pseudo labels move once per epoch.  ``phi`` is the
    number of completed epochs over the total.

    ``truth`` (training ground truth) only feeds the report.  The returned
    ``params`` are those of the epoch with the best test mAP, or the best
    train mAP when no test set is given.  ``callback(epoch, pseudo_state)``
    runs after every epoch.
    """
    config.validate()
    features = np.asarray(features, dtype=np.float64)
    obs = observations.obs if isinstance(observations, ObservationMatrix) else np.asarray(observations)
    n, d = features.shape
    if obs.shape[0] != n:
        raise ValueError(f"{n} feature rows but {obs.shape[0]} observation rows")
    n_classes = obs.shape[1]
    if truth is not None and np.shape(truth) != obs.shape:
        raise ValueError("ground truth shape does not match the observations")
    if test_features is not None and np.shape(test_features)[1] != d:
        raise ValueError("test features have a different dimension")

    rng = np.random.default_rng(config.seed)
    params = init_params(d, n_classes, config.hidden_width, rng)
    state = init_pseudo(obs) if config.loss == "plmcl" else None
    hyper = config.hyper
    total = config.total_epochs
    report = MetricsReport()
    best_score, best_epoch, best_params = -np.inf, -1, params

    for epoch in range(total):
        phi = epoch / total
        head_only = config.two_phase and epoch < config.head_epochs
        order = rng.permutation(n)
        running = LossBreakdown(0.0, 0.0, 0.0)
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            probs, cache = forward(params, features[idx])
            sub = updated = None
            if state is not None:
                sub = state.rows(idx)
                try:
                    updated = epoch_update(sub, probs, hyper)
                except FloatingPointError as exc:
                    raise NumericalAbort(epoch, b, str(exc)) from exc
            # overflow is caught by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                breakdown, grad = objective(
                    config.loss, probs, obs[idx], sub, phi, beta2=config.beta2,
                    reg_weight=config.reg_weight, expected_positives=config.expected_positives,
                    ls_eps=config.ls_eps, wan_gamma=config.wan_gamma)
            if not math.isfinite(breakdown.total):
                raise NumericalAbort(epoch, b, "non-finite loss")
            grads = backward(params, cache, grad)
            if head_only:
                grads.w1[...] = 0.0
                grads.b1[...] = 0.0
            try:
                params = sgd_step(params, grads, config.lr)
            except FloatingPointError as exc:
                raise NumericalAbort(epoch, b, str(exc)) from exc
            if state is not None:
                state.assign_rows(idx, updated)
            running = running + breakdown.scaled(len(idx))
        running = running.scaled(1.0 / n)

        row = {"epoch": epoch, "phi": phi, "loss_obs": running.obs_term,
               "loss_unobs": running.unobs_term, "loss_reg": running.regularizer,
               "loss_total": running.total, "train_map": None, "test_map": None,
               "pseudo_confidence": None, "pseudo_agreement": None, "test_ap": []}
        if truth is not None:
            row["train_map"], _ = _safe_map(forward(params, features)[0], truth)
        if test_features is not None:
            row["test_map"], aps = _safe_map(forward(params, test_features)[0], test_truth)
            row["test_ap"] = list(aps)
        if state is not None:
            row["pseudo_confidence"] = state.confidence()
            if truth is not None and state.free.any():
                guess = state.soft > 0.5
                row["pseudo_agreement"] = float(
                    (guess[state.free] == np.asarray(truth, dtype=bool)[state.free]).mean())
        report.rows.append(row)

        score = row["test_map"] if test_features is not None else row["train_map"]
        if score is None:
            score = -running.total
        if score > best_score:
            best_score, best_epoch, best_params = score, epoch, params
        if callback is not None:
            callback(epoch, state)

    has_map = truth is not None or test_features is not None
    return TrainResult(params=best_params, final_params=params, pseudo=state, report=report,
                       best_epoch=best_epoch,
                       best_map=float(best_score) if has_map else float("nan"))
