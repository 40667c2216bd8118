import numpy as np
import pytest
from sklearn.base import clone

from plmcl import PartialLabelClassifier
from plmcl.labelsettings import make_mask


@pytest.fixture(scope="module")
def fitted(small_data):
    train_set, test_set, _ = small_data
    obs = make_mask("sspl", train_set.gt, 0.5, 0)
    clf = PartialLabelClassifier(epochs=3, hidden_width=8).fit(
        train_set.features, obs.obs, test_set.features, test_set.gt, Y_true=train_set.gt)
    return clf, test_set


class TestEstimator:
    def test_outputs(self, fitted):
        clf, test_set = fitted
        proba = clf.predict_proba(test_set.features)
        assert proba.shape == test_set.gt.shape
        assert ((proba >= 0) & (proba <= 1)).all()
        np.testing.assert_array_equal(clf.predict(test_set.features), proba >= 0.5)
        assert clf.decision_function(test_set.features).shape == proba.shape

    def test_score_is_best_epoch_map(self, fitted):
        clf, test_set = fitted
        assert clf.score(test_set.features, test_set.gt) == \
            np.nanmax(clf.report_.column("test_map"))
        assert clf.n_features_in_ == 8 and clf.n_classes_ == 5
        assert len(clf.report_) == 3

    def test_params_and_clone(self):
        clf = PartialLabelClassifier(loss="wan", alpha=2.0, random_state=4)
        params = clf.get_params()
        assert params["loss"] == "wan" and params["random_state"] == 4
        twin = clone(clf)
        assert twin.get_params() == params
        assert not hasattr(twin, "params_")

    def test_set_params(self):
        clf = PartialLabelClassifier().set_params(lam=2.0)
        assert clf.lam == 2.0

    def test_random_state_determinism(self, small_data):
        train_set = small_data[0]
        obs = make_mask("fspl", train_set.gt)
        a = PartialLabelClassifier(epochs=2, hidden_width=4, random_state=1).fit(
            train_set.features, obs.obs)
        b = PartialLabelClassifier(epochs=2, hidden_width=4, random_state=1).fit(
            train_set.features, obs.obs)
        np.testing.assert_array_equal(a.predict_proba(train_set.features),
                                      b.predict_proba(train_set.features))

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            PartialLabelClassifier().predict(np.zeros((2, 3)))

    def test_bad_inputs(self, fitted, small_data):
        clf, test_set = fitted
        with pytest.raises(ValueError):
            clf.predict(test_set.features[:, :3])
        with pytest.raises(ValueError):
            PartialLabelClassifier().fit(np.zeros((3, 2)), np.full((3, 2), 2))
        with pytest.raises(ValueError):
            PartialLabelClassifier().fit(np.zeros((3, 2)), np.full((4, 2), -1))
        with pytest.raises(ValueError):
            PartialLabelClassifier(loss="bogus").fit(np.zeros((3, 2)), np.full((3, 2), 1))
