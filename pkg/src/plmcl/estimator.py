"""scikit-learn front end for partial-label training."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .metrics import mean_average_precision
from .ndcore import forward
from .training import TrainConfig, train
from .validation import check_observations, check_truth


class PartialLabelClassifier(ClassifierMixin, BaseEstimator):
    """Multi-label classifier trained from partially observed labels.

    ``fit`` takes observations coded 1 (positive), 0 (negative) and -1
    (unobserved).  ``loss="plmcl"`` trains against momentum-updated soft
    pseudo labels; ``"an"``, ``"an_ls"`` and ``"wan"`` are the
    assume-negative baselines.

    Examples
    --------
    >>> clf = PartialLabelClassifier(epochs=3).fit(X, Y_obs)   # doctest: +SKIP
    >>> clf.score(X_test, Y_test)                               # doctest: +SKIP
    """

    def __init__(self, loss="plmcl", epochs=10, batch_size=16, lr=0.1, beta1=0.7, beta2=0.6,
                 alpha=1.0, lam=4.0, n=2, reg_weight=0.1, expected_positives=1.0,
                 hidden_width=64, two_phase=False, head_epochs=5, finetune_epochs=5,
                 ls_eps=0.1, wan_gamma=None, random_state=0):
        self.loss = loss
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.alpha = alpha
        self.lam = lam
        self.n = n
        self.reg_weight = reg_weight
        self.expected_positives = expected_positives
        self.hidden_width = hidden_width
        self.two_phase = two_phase
        self.head_epochs = head_epochs
        self.finetune_epochs = finetune_epochs
        self.ls_eps = ls_eps
        self.wan_gamma = wan_gamma
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        params = self.get_params()
        seed = params.pop("random_state")
        return TrainConfig(seed=0 if seed is None else int(seed), **params)

    def fit(self, X, Y, X_val=None, Y_val=None, Y_true=None):
        """Train on features ``X`` and observations ``Y``.

        ``X_val``/``Y_val`` (fully labelled) select the best epoch by mAP;
        ``Y_true`` is the training ground truth, used only for reporting.
        """
        X = check_array(X, dtype=np.float64)
        Y = check_observations(Y, n_rows=X.shape[0])
        if Y_true is not None:
            Y_true = check_truth(Y_true, shape=Y.shape)
        if (X_val is None) != (Y_val is None):
            raise ValueError("X_val and Y_val must be given together")
        if X_val is not None:
            X_val = check_array(X_val, dtype=np.float64)
            Y_val = check_truth(Y_val, shape=(X_val.shape[0], Y.shape[1]))
        result = train(self._config(), X, Y, Y_true, X_val, Y_val)
        self.params_ = result.params
        self.final_params_ = result.final_params
        self.pseudo_state_ = result.pseudo
        self.report_ = result.report
        self.best_epoch_ = result.best_epoch
        self.n_features_in_ = X.shape[1]
        self.n_classes_ = Y.shape[1]
        return self

    def _check_X(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict_proba(self, X):
        X = self._check_X(X)
        return forward(self.params_, X)[0]

    def decision_function(self, X):
        X = self._check_X(X)
        return forward(self.params_, X)[1].logits

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int8)

    def score(self, X, Y, sample_weight=None):
        """mAP of the predicted probabilities against fully labelled ``Y``."""
        if sample_weight is not None:
            raise ValueError("sample weights are not supported")
        Y = check_truth(Y, shape=(np.shape(X)[0], self.n_classes_))
        return mean_average_precision(self.predict_proba(X), Y)
