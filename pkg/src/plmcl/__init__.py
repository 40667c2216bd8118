"""Partial-label multi-label classification with momentum-updated pseudo labels."""

from .datagen import Dataset, SyntheticSpec, generate, load_csv, save_csv
from .estimator import PartialLabelClassifier
from .labelsettings import (Obs, ObservationMatrix, make_mask, mask_ffl, mask_fpl, mask_fspl,
                            mask_sfl, mask_sspl)
from .losses import (LossBreakdown, loss_an, loss_an_ls, loss_obs, loss_plmcl, loss_unobs,
                     loss_wan, scheduler_xi)
from .metrics import average_precision, mean_average_precision
from .ndcore import MlpParams, backward, bce, forward, sgd_step, sigmoid
from .pseudo import (PseudoHyper, PseudoState, epoch_update, grad_lcs, init_pseudo,
                     latent_update, momentum_step, self_guided_factor)
from .training import MetricsReport, TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SyntheticSpec", "generate", "load_csv", "save_csv",
    "PartialLabelClassifier",
    "Obs", "ObservationMatrix", "make_mask", "mask_ffl", "mask_fpl", "mask_fspl", "mask_sfl",
    "mask_sspl",
    "LossBreakdown", "loss_an", "loss_an_ls", "loss_obs", "loss_plmcl", "loss_unobs", "loss_wan",
    "scheduler_xi",
    "average_precision", "mean_average_precision",
    "MlpParams", "backward", "bce", "forward", "sgd_step", "sigmoid",
    "PseudoHyper", "PseudoState", "epoch_update", "grad_lcs", "init_pseudo", "latent_update",
    "momentum_step", "self_guided_factor",
    "MetricsReport", "TrainConfig", "evaluate", "train",
]
