"""Tests for the operator reliance dynamics, priors, and choice policy."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adasim.games import Gamble, Game
from adasim.reliance import (
    AGREE,
    DISAGREE,
    INFO_CAPABILITY_HIDDEN,
    INFO_CAPABILITY_VISIBLE,
    ChoicePolicyParams,
    OperatorParams,
    PriorSpec,
    RelianceState,
    belief_fixed_point,
    initial_selection,
    reliance_decision,
    sample_operator_params,
    selection_probability_a,
    step_belief,
    step_preference,
    step_state,
)


def det_params(**kw):
    base = dict(b0=0.025, b1=0.025, b2=0.025, s=0.5, theta=0.6, noise_sigma=0.0)
    base.update(kw)
    return OperatorParams(**base)


class TestDecisionRule:
    def test_boundary_is_inclusive(self):
        assert reliance_decision(0.6, 0.6) == 1

    def test_below_threshold(self):
        assert reliance_decision(0.599999, 0.6) == 0

    def test_above_threshold(self):
        assert reliance_decision(0.75, 0.6) == 1


class TestBeliefUpdate:
    def test_visible_agree_single_step(self):
        params = det_params(b1=0.03, b2=0.02)
        state = RelianceState(preference=0.5, belief=0.5, reliance=0)
        # 0.5 + 0.03*(0.8-0.5) + 0.02*(1-0.5)
        assert step_belief(state, params, 0.8, AGREE) == pytest.approx(0.519, abs=1e-12)

    def test_visible_disagree_single_step(self):
        params = det_params(b1=0.03, b2=0.02)
        state = RelianceState(preference=0.5, belief=0.5, reliance=0)
        assert step_belief(state, params, 0.8, DISAGREE) == pytest.approx(0.499, abs=1e-12)

    def test_hidden_mode_decays_to_initial(self):
        params = det_params(b0=0.1, info_mode=INFO_CAPABILITY_HIDDEN)
        state = RelianceState(preference=0.5, belief=0.7, reliance=0)
        assert step_belief(state, params, 0.8, AGREE) == pytest.approx(0.68, abs=1e-12)

    def test_hidden_mode_ignores_agreement(self):
        params = det_params(b0=0.1, info_mode=INFO_CAPABILITY_HIDDEN)
        state = RelianceState(preference=0.5, belief=0.7, reliance=0)
        assert step_belief(state, params, 0.1, AGREE) == step_belief(
            state, params, 0.9, DISAGREE)

    def test_rejects_bad_capability(self):
        state = RelianceState(preference=0.5, belief=0.5, reliance=0)
        with pytest.raises(ValueError):
            step_belief(state, det_params(), 1.5, AGREE)

    def test_rejects_bad_agreement(self):
        state = RelianceState(preference=0.5, belief=0.5, reliance=0)
        with pytest.raises(ValueError):
            step_belief(state, det_params(), 0.5, 0)

    def test_belief_not_clamped_under_repeated_disagreement(self):
        params = det_params(b1=0.01, b2=0.3)
        state = RelianceState.initial(params)
        for _ in range(200):
            state = step_state(state, params, 0.0, DISAGREE, None)
        assert state.belief < 0.0

    def test_fixed_point_is_stationary_and_attracting(self):
        params = det_params(b1=0.03, b2=0.02)
        fp = belief_fixed_point(params, capability=0.7, agreement=AGREE)
        state = RelianceState(preference=0.5, belief=fp, reliance=0)
        assert step_belief(state, params, 0.7, AGREE) == pytest.approx(fp, abs=1e-12)
        state = RelianceState(preference=0.5, belief=0.0, reliance=0)
        for _ in range(2000):
            state = step_state(state, params, 0.7, AGREE, None)
        assert state.belief == pytest.approx(fp, abs=1e-9)


class TestPreferenceUpdate:
    def test_deterministic_mixing(self):
        params = det_params(s=0.4)
        state = RelianceState(preference=0.5, belief=0.5, reliance=0)
        nxt = step_preference(state, params, 0.519, None)
        assert nxt.preference == pytest.approx(0.5076, abs=1e-12)
        assert nxt.belief == 0.519
        assert nxt.step_index == 1

    def test_noise_requires_rng(self):
        params = det_params(noise_sigma=0.02)
        state = RelianceState.initial(params)
        with pytest.raises(ValueError, match="rng"):
            step_preference(state, params, 0.5, None)

    def test_noise_stream_reproducible(self):
        params = det_params(noise_sigma=0.02)
        state = RelianceState.initial(params)
        a = step_preference(state, params, 0.5, np.random.default_rng(11)).preference
        b = step_preference(state, params, 0.5, np.random.default_rng(11)).preference
        assert a == b

    def test_three_step_frozen_trace(self):
        """Deterministic trace frozen from an independent hand recurrence."""
        params = det_params()
        state = RelianceState.initial(params)
        expected = [
            (0.5225, 0.51125, 0),
            (0.543875, 0.5275624999999999, 0),
            (0.5238750000000001, 0.52571875, 0),
        ]
        for (cap, agr), (eb, ep, ed) in zip(
                [(0.9, AGREE), (0.9, AGREE), (0.2, DISAGREE)], expected):
            state = step_state(state, params, cap, agr, None)
            assert state.belief == pytest.approx(eb, abs=1e-12)
            assert state.preference == pytest.approx(ep, abs=1e-12)
            assert state.reliance == ed

    @given(
        st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
        st.floats(0.0, 1.0), st.floats(0.0, 1.0),
    )
    def test_noiseless_preference_stays_in_hull(self, pref, belief, s, cap, b1):
        """Without noise, preference stays in the convex hull of itself and
        the new belief; with belief in [0,1] and agreeing aid it stays in
        a bounded envelope."""
        params = det_params(s=s, b1=b1, b2=0.0)
        state = RelianceState(preference=pref, belief=belief, reliance=0)
        nxt = step_state(state, params, cap, AGREE, None)
        lo = min(pref, nxt.belief) - 1e-12
        hi = max(pref, nxt.belief) + 1e-12
        assert lo <= nxt.preference <= hi


class TestParamValidation:
    def test_rejects_out_of_range_s(self):
        with pytest.raises(ValueError):
            det_params(s=1.5)

    def test_rejects_negative_theta(self):
        with pytest.raises(ValueError):
            det_params(theta=-0.1)

    def test_rejects_unknown_info_mode(self):
        with pytest.raises(ValueError):
            det_params(info_mode="telepathy")

    def test_initial_state_applies_threshold(self):
        params = det_params(theta=0.5, preference_initial=0.5)
        assert RelianceState.initial(params).reliance == 1
        params = det_params(theta=0.6, preference_initial=0.5)
        assert RelianceState.initial(params).reliance == 0


class TestPriors:
    def test_default_theta_support(self):
        priors = PriorSpec()
        assert priors.bounds("theta") == (0.50, pytest.approx(0.70))
        assert priors.mean("theta") == pytest.approx(0.60)
        assert priors.std("theta") == pytest.approx(0.20 / math.sqrt(12))

    def test_default_s_support(self):
        priors = PriorSpec()
        assert priors.bounds("s") == (0.10, pytest.approx(0.90))

    def test_samples_stay_in_support(self):
        priors = PriorSpec()
        rng = np.random.default_rng(0)
        for _ in range(500):
            for name in priors.ranges:
                lo, hi = priors.bounds(name)
                assert lo <= priors.sample_value(name, rng) <= hi

    def test_centered_priors(self):
        priors = PriorSpec.centered(width=0.01, theta=0.65)
        lo, hi = priors.bounds("theta")
        assert lo == pytest.approx(0.645)
        assert hi == pytest.approx(0.655)
        # unspecified parameters center on the default prior mean
        assert priors.mean("s") == pytest.approx(0.5)

    def test_escaping_support_rejected(self):
        with pytest.raises(ValueError, match="legal range"):
            PriorSpec(ranges={"s": (0.9, 0.2)})

    def test_clamp(self):
        priors = PriorSpec()
        assert priors.clamp("theta", 0.95) == pytest.approx(0.70)
        assert priors.clamp("theta", 0.30) == pytest.approx(0.50)

    def test_sampled_operator_within_priors(self):
        priors = PriorSpec()
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = sample_operator_params(priors, rng)
            for name in ("b0", "b1", "b2", "s", "theta"):
                lo, hi = priors.bounds(name)
                assert lo <= getattr(p, name) <= hi


class TestChoicePolicy:
    def game(self, a=(3, 0, 0.25), b=(4, 0, 0.20)):
        return Game(id="g", option_a=Gamble(*a), option_b=Gamble(*b))

    def test_equal_values_give_half(self):
        game = self.game(a=(2, 0, 0.5), b=(2, 0, 0.5))
        assert selection_probability_a([], game, ChoicePolicyParams()) == pytest.approx(0.5)

    def test_higher_ev_is_favored(self):
        game = self.game(a=(4, 0, 0.9), b=(4, 0, 0.1))
        assert selection_probability_a([], game, ChoicePolicyParams()) > 0.9

    def test_recent_payoffs_shift_preference(self):
        game = self.game(a=(2, 0, 0.5), b=(2, 0, 0.5))
        policy = ChoicePolicyParams()
        hist = [("A", 2.0, 0.0)]  # A paid out, B did not
        assert selection_probability_a(hist, game, policy) > 0.5

    def test_low_temperature_is_nearly_deterministic(self):
        game = self.game(a=(4, 0, 0.6), b=(4, 0, 0.4))
        policy = ChoicePolicyParams(temperature=0.001)
        assert selection_probability_a([], game, policy) > 0.999

    def test_selection_stream_reproducible(self):
        game = self.game()
        policy = ChoicePolicyParams()
        r1 = [initial_selection([], game, policy, np.random.default_rng(9)) for _ in range(1)]
        r2 = [initial_selection([], game, policy, np.random.default_rng(9)) for _ in range(1)]
        assert r1 == r2

    def test_probabilities_are_probabilities(self):
        game = self.game()
        p = selection_probability_a([], game, ChoicePolicyParams())
        assert 0.0 <= p <= 1.0
