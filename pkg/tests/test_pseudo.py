import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_difference, scalar_pseudo_recurrence
from plmcl.ndcore import bce, sigmoid
from plmcl.pseudo import (PseudoHyper, epoch_update, grad_lcs, init_pseudo, latent_update,
                          momentum_step, self_guided_factor)

HYPER = PseudoHyper(beta1=0.7, alpha=1.0, lam=4.0, n=2)


def free_state(n_classes, latent=None):
    s = init_pseudo(np.full(n_classes, -1))
    if latent is not None:
        s.latent[...] = latent
        s.soft[...] = sigmoid(np.asarray(latent, dtype=float))
    return s


class TestInit:
    def test_all_unobserved(self):
        s = init_pseudo(np.full(4, -1))
        np.testing.assert_array_equal(s.soft, 0.5)
        np.testing.assert_array_equal(s.latent, 0.0)
        np.testing.assert_array_equal(s.momentum, 0.0)
        assert not s.observed_mask.any()

    def test_single_positive_pinned(self):
        s = init_pseudo(np.array([-1, -1, 1, -1]))
        np.testing.assert_array_equal(s.soft, [0.5, 0.5, 1.0, 0.5])
        assert s.observed_mask.tolist() == [False, False, True, False]

    def test_fully_observed(self):
        s = init_pseudo(np.array([1, 0, 0, 1]))
        assert s.observed_mask.all()
        np.testing.assert_array_equal(s.soft, [1, 0, 0, 1])


def lcs(latent, pred):
    """Mean BCE between predictions and sigmoid(latent), evaluated directly."""
    return float(np.mean(bce(pred, sigmoid(latent))))


class TestGradLcs:
    def test_stationary(self):
        s = free_state(3, [0.3, -1.0, 2.0])
        np.testing.assert_allclose(grad_lcs(s.soft.copy(), s), 0.0, atol=1e-16)

    def test_scalar_example(self):
        # central differences of the loss w.r.t. the latent at 0, step 1e-6
        assert grad_lcs(np.array([0.8]), free_state(1))[0] == pytest.approx(-0.3, abs=1e-9)

    def test_four_class_example(self):
        g = grad_lcs(np.array([0.9, 0.1, 0.5, 0.5]), free_state(4))
        np.testing.assert_allclose(g, [-0.1, 0.1, 0.0, 0.0], atol=1e-12)

    def test_zero_on_observed(self):
        s = init_pseudo(np.array([1, -1, 0]))
        g = grad_lcs(np.array([0.2, 0.9, 0.7]), s)
        assert g[0] == 0.0 and g[2] == 0.0 and g[1] != 0.0

    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            n_classes = int(rng.integers(1, 6))
            latent = rng.normal(scale=2.0, size=n_classes)
            pred = rng.uniform(0.01, 0.99, size=n_classes)
            fd = central_difference(lambda y: lcs(y, pred), latent, 1e-6)
            np.testing.assert_allclose(grad_lcs(pred, free_state(n_classes, latent)), fd,
                                       rtol=1e-5, atol=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            grad_lcs(np.zeros(3), free_state(2))


class TestMomentum:
    def test_first_step(self):
        g = np.array([0.4, -0.2])
        s = momentum_step(free_state(2), g, 0.7)
        np.testing.assert_allclose(s.momentum, 0.3 * g)

    def test_decay_without_gradient(self):
        s = momentum_step(free_state(1), np.array([1.0]), 0.5)
        values = []
        for _ in range(5):
            s = momentum_step(s, np.zeros(1), 0.5)
            values.append(s.momentum[0])
        np.testing.assert_allclose(values, 0.5 * 0.5 ** np.arange(1, 6))

    def test_no_memory(self):
        s = free_state(2)
        s.momentum[...] = [3.0, -3.0]
        np.testing.assert_array_equal(momentum_step(s, np.array([0.1, 0.2]), 0.0).momentum,
                                      [0.1, 0.2])

    def test_observed_stays_zero(self):
        s = momentum_step(init_pseudo(np.array([1, -1])), np.array([5.0, 5.0]), 0.5)
        assert s.momentum[0] == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(FloatingPointError):
            momentum_step(free_state(1), np.array([np.inf]), 0.5)


class TestSelfGuidedFactor:
    def test_maximum_at_half(self):
        assert self_guided_factor(0.5, PseudoHyper(alpha=2.5)) == 2.5

    def test_minimum_at_ends(self):
        h = PseudoHyper(alpha=2.0, lam=3.0)
        assert self_guided_factor(0.0, h) == 2.0 * math.exp(-3.0)
        assert self_guided_factor(1.0, h) == 2.0 * math.exp(-3.0)

    def test_example(self):
        assert self_guided_factor(0.75, HYPER) == pytest.approx(0.36787944117144233, rel=1e-15)

    @given(st.floats(0.0, 0.5))
    def test_symmetric(self, delta):
        a = self_guided_factor(0.5 + delta, HYPER)
        b = self_guided_factor(0.5 - delta, HYPER)
        assert abs(a - b) <= 1e-15

    def test_decreasing_in_confidence(self):
        s = np.linspace(0.5, 1.0, 501)
        assert np.all(np.diff(self_guided_factor(s, HYPER)) < 0)


class TestLatentUpdate:
    def test_zero_momentum_fixed_point(self):
        s = free_state(3, [0.2, -0.4, 1.0])
        out = latent_update(s, HYPER)
        np.testing.assert_array_equal(out.latent, s.latent)
        np.testing.assert_array_equal(out.soft, s.soft)

    def test_example(self):
        s = free_state(1)
        s.momentum[0] = 0.2
        out = latent_update(s, HYPER)
        assert out.latent[0] == pytest.approx(-0.2, abs=1e-15)
        assert out.soft[0] == pytest.approx(0.45016600268752216, abs=1e-15)

    def test_pinned_entry_ignores_momentum(self):
        s = init_pseudo(np.array([1, -1]))
        s.momentum[...] = 0.7
        out = latent_update(s, HYPER)
        assert out.soft[0] == 1.0 and out.latent[0] == 0.0

    def test_uses_previous_soft_in_factor(self):
        s = free_state(1, [1.5])
        s.momentum[0] = -0.1
        expected = 1.5 + self_guided_factor(sigmoid(1.5), HYPER) * 0.1
        assert latent_update(s, HYPER).latent[0] == pytest.approx(expected, rel=1e-15)


class TestEpochUpdate:
    def test_identity_at_rest(self):
        s = free_state(3, [0.5, -2.0, 0.1])
        out = epoch_update(s, s.soft.copy(), HYPER)
        np.testing.assert_allclose(out.soft, s.soft, atol=1e-15)

    def test_half_stays_half(self):
        s = free_state(2)
        for _ in range(100):
            s = epoch_update(s, np.full(2, 0.5), HYPER)
        np.testing.assert_array_equal(s.soft, 0.5)

    def test_follows_scalar_recurrence(self):
        hyper = PseudoHyper(beta1=0.5, alpha=1.0, lam=4.0)
        s = free_state(1)
        softs = []
        for _ in range(30):
            s = epoch_update(s, np.array([0.9]), hyper)
            softs.append(s.soft[0])
        oracle = [v[1] for v in scalar_pseudo_recurrence(0.9, 30, 0.5, 1.0, 4.0)]
        np.testing.assert_allclose(softs, oracle, rtol=1e-12)
        assert softs[1] > 0.5
        assert np.all(np.diff(softs[:10]) > 0)

    def test_composition_order(self, rng):
        s = free_state(4, rng.normal(size=4))
        s.momentum[...] = rng.normal(scale=0.1, size=4)
        pred = rng.uniform(size=4)
        manual = latent_update(momentum_step(s, grad_lcs(pred, s), HYPER.beta1), HYPER)
        out = epoch_update(s, pred, HYPER)
        np.testing.assert_array_equal(out.latent, manual.latent)

    def test_batched_rows_independent(self, rng):
        obs = np.where(rng.random((6, 4)) < 0.3, 1, -1)
        batch = init_pseudo(obs)
        pred = rng.uniform(size=(6, 4))
        out = epoch_update(batch, pred, HYPER)
        for i in range(6):
            row = epoch_update(init_pseudo(obs[i]), pred[i], HYPER)
            np.testing.assert_array_equal(out.soft[i], row.soft)


class TestInvariants:
    def test_soft_tracks_latent_and_pins_hold(self, rng):
        obs = np.where(rng.random((20, 5)) < 0.3, (rng.random((20, 5)) < 0.5).astype(int), -1)
        s = init_pseudo(obs)
        pinned = s.soft[s.observed_mask].copy()
        for _ in range(50):
            s = epoch_update(s, rng.uniform(size=(20, 5)), PseudoHyper(alpha=5.0))
            assert np.all((s.soft >= 0) & (s.soft <= 1))
            np.testing.assert_allclose(s.soft[s.free], sigmoid(s.latent[s.free]), atol=1e-12)
            np.testing.assert_array_equal(s.soft[s.observed_mask], pinned)
            assert not s.momentum[s.observed_mask].any()

    @pytest.mark.parametrize("pred", [0.05, 0.3, 0.9, 0.99])
    def test_velocity_converges(self, pred):
        s = free_state(1)
        prev, momenta = 0.5, []
        for _ in range(200):
            s = epoch_update(s, np.array([pred]), PseudoHyper())
            step, prev = abs(s.soft[0] - prev), s.soft[0]
            momenta.append(abs(s.momentum[0]))
        assert step < 1e-3
        assert max(momenta[100:]) <= max(momenta[:100])
        assert momenta[-1] <= momenta[100]


def test_hyper_validation():
    for bad in (dict(beta1=1.0), dict(alpha=0.0), dict(lam=-1.0), dict(n=0)):
        with pytest.raises(ValueError):
            PseudoHyper(**bad)
