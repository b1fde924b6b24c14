"""Operator reliance dynamics based on decision field theory.

The operator carries a continuous preference accumulator driven by their
belief in the aid's capability; preference crossing a threshold flips the
binary reliance state. Belief moves toward observed capability and gets a
boost or penalty when the aid agrees or disagrees with the operator's own
initial pick. Belief is deliberately NOT clamped: the update equations can
leave [0,1] under repeated disagreement and we let them, so the dynamics
stay exactly as defined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .games import SELECTION_A, SELECTION_B, Game

INFO_CAPABILITY_VISIBLE = "capability-visible"
INFO_CAPABILITY_HIDDEN = "capability-hidden"

AGREE = 1
DISAGREE = -1


@dataclass(frozen=True)
class OperatorParams:
    """Reliance-model parameters for one simulated operator."""

    b0: float = 0.025
    b1: float = 0.025
    b2: float = 0.025
    s: float = 0.5
    theta: float = 0.6
    noise_sigma: float = 0.02
    belief_initial: float = 0.5
    preference_initial: float = 0.5
    info_mode: str = INFO_CAPABILITY_VISIBLE

    def __post_init__(self):
        for name in ("b0", "b1", "b2", "s"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.theta < 0.0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.info_mode not in (INFO_CAPABILITY_VISIBLE, INFO_CAPABILITY_HIDDEN):
            raise ValueError(f"unknown info_mode {self.info_mode!r}")


@dataclass(frozen=True)
class RelianceState:
    """Evolving operator state: preference, belief, binary reliance."""

    preference: float
    belief: float
    reliance: int
    step_index: int = 0

    @classmethod
    def initial(cls, params: OperatorParams) -> "RelianceState":
        return cls(
            preference=params.preference_initial,
            belief=params.belief_initial,
            reliance=reliance_decision(params.preference_initial, params.theta),
            step_index=0,
        )


def reliance_decision(preference: float, theta: float) -> int:
    """Threshold rule: rely (1) iff preference >= theta, boundary inclusive."""
    return 1 if preference >= theta else 0


def step_belief(
    state: RelianceState,
    params: OperatorParams,
    capability: float,
    agreement: int,
) -> float:
    """Advance the capability belief one step.

    Capability-visible mode applies the agreement-adjusted update
    B' = B + b1*(C - B) + A*b2*(1 - B); capability-hidden mode decays
    toward the initial belief, B' = B + b0*(B_ini - B), ignoring agreement.
    """
    if not (0.0 <= capability <= 1.0):
        raise ValueError(f"capability must be in [0,1], got {capability}")
    if agreement not in (AGREE, DISAGREE):
        raise ValueError(f"agreement must be +1 or -1, got {agreement}")
    b = state.belief
    if params.info_mode == INFO_CAPABILITY_VISIBLE:
        return b + params.b1 * (capability - b) + agreement * params.b2 * (1.0 - b)
    return b + params.b0 * (params.belief_initial - b)


def step_preference(
    state: RelianceState,
    params: OperatorParams,
    new_belief: float,
    rng: np.random.Generator | None,
) -> RelianceState:
    """Advance preference with inertia s plus Gaussian noise, update reliance."""
    noise = 0.0
    if params.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("rng required when noise_sigma > 0")
        noise = rng.normal(0.0, params.noise_sigma)
    pref = (1.0 - params.s) * state.preference + params.s * new_belief + noise
    return RelianceState(
        preference=pref,
        belief=new_belief,
        reliance=reliance_decision(pref, params.theta),
        step_index=state.step_index + 1,
    )


def step_state(
    state: RelianceState,
    params: OperatorParams,
    capability: float,
    agreement: int,
    rng: np.random.Generator | None,
) -> RelianceState:
    """Full per-trial update: belief then preference."""
    return step_preference(state, params, step_belief(state, params, capability, agreement), rng)


# -- Parameter priors -------------------------------------------------------

# Uniform priors given as (lower_bound, width); the reliance threshold's
# prior U(0.50, width 0.20) spans [0.50, 0.70].
DEFAULT_PRIOR_RANGES = {
    "b0": (0.01, 0.04),
    "b1": (0.01, 0.04),
    "b2": (0.01, 0.04),
    "s": (0.10, 0.80),
    "theta": (0.50, 0.20),
}

PARAM_LEGAL_RANGES = {
    "b0": (0.0, 1.0),
    "b1": (0.0, 1.0),
    "b2": (0.0, 1.0),
    "s": (0.0, 1.0),
    "theta": (0.0, math.inf),
}


@dataclass(frozen=True)
class PriorSpec:
    """Per-parameter uniform priors, each given as (lower_bound, width)."""

    ranges: dict = field(default_factory=lambda: dict(DEFAULT_PRIOR_RANGES))

    def __post_init__(self):
        for name, (lo, width) in self.ranges.items():
            if width < 0:
                raise ValueError(f"prior width for {name} must be >= 0, got {width}")
            legal_lo, legal_hi = PARAM_LEGAL_RANGES[name]
            if lo < legal_lo or lo + width > legal_hi:
                raise ValueError(
                    f"prior support for {name} [{lo}, {lo + width}] escapes "
                    f"legal range [{legal_lo}, {legal_hi}]"
                )

    @classmethod
    def centered(cls, width: float = 0.005, **centers) -> "PriorSpec":
        """Priors of the given width centered on per-parameter values."""
        ranges = {}
        for name, (lo, w) in DEFAULT_PRIOR_RANGES.items():
            center = centers.get(name, lo + w / 2.0)
            ranges[name] = (center - width / 2.0, width)
        return cls(ranges=ranges)

    def bounds(self, name: str) -> tuple:
        lo, width = self.ranges[name]
        return lo, lo + width

    def mean(self, name: str) -> float:
        lo, width = self.ranges[name]
        return lo + width / 2.0

    def std(self, name: str) -> float:
        _, width = self.ranges[name]
        return width / math.sqrt(12.0)

    def sample_value(self, name: str, rng: np.random.Generator) -> float:
        lo, width = self.ranges[name]
        return lo + width * rng.random()

    def clamp(self, name: str, value: float) -> float:
        lo, hi = self.bounds(name)
        return min(max(value, lo), hi)


def sample_operator_params(
    priors: PriorSpec,
    rng: np.random.Generator,
    noise_sigma: float = 0.02,
    belief_initial: float = 0.5,
    preference_initial: float = 0.5,
    info_mode: str = INFO_CAPABILITY_VISIBLE,
) -> OperatorParams:
    """Draw operator parameters from uniform priors."""
    return OperatorParams(
        b0=priors.sample_value("b0", rng),
        b1=priors.sample_value("b1", rng),
        b2=priors.sample_value("b2", rng),
        s=priors.sample_value("s", rng),
        theta=priors.sample_value("theta", rng),
        noise_sigma=noise_sigma,
        belief_initial=belief_initial,
        preference_initial=preference_initial,
        info_mode=info_mode,
    )


# -- Synthetic initial-selection policy -------------------------------------

@dataclass(frozen=True)
class ChoicePolicyParams:
    """Softmax-over-value-estimates policy standing in for human picks.

    Value estimates start at the described expected values and are updated
    with exponential recency from experienced and foregone payoffs, so the
    previous trial's rewards bias the next pick.
    """

    temperature: float = 0.3
    recency_weight: float = 0.3

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not (0.0 <= self.recency_weight <= 1.0):
            raise ValueError(f"recency_weight must be in [0,1], got {self.recency_weight}")


def _value_estimates(history, game: Game, recency_weight: float) -> tuple:
    va = game.option_a.expected_value()
    vb = game.option_b.expected_value()
    for selection, payoff, foregone in history:
        if selection == SELECTION_A:
            pa, pb = payoff, foregone
        else:
            pa, pb = foregone, payoff
        va = (1.0 - recency_weight) * va + recency_weight * pa
        vb = (1.0 - recency_weight) * vb + recency_weight * pb
    return va, vb


def selection_probability_a(history, game: Game, policy: ChoicePolicyParams) -> float:
    """Softmax probability of picking option A given the trial history."""
    va, vb = _value_estimates(history, game, policy.recency_weight)
    # stable two-way softmax
    z = (vb - va) / policy.temperature
    if z > 500.0:
        return 0.0
    if z < -500.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(z))


def initial_selection(
    history,
    game: Game,
    policy: ChoicePolicyParams,
    rng: np.random.Generator,
) -> str:
    """Sample the operator's unaided pick from the softmax policy."""
    pa = selection_probability_a(history, game, policy)
    return SELECTION_A if rng.random() < pa else SELECTION_B


def belief_fixed_point(params: OperatorParams, capability: float, agreement: int) -> float:
    """Fixed point of the capability-visible belief update under constant inputs."""
    denom = params.b1 + agreement * params.b2
    if denom == 0.0:
        raise ValueError("belief update has no fixed point (b1 + A*b2 == 0)")
    return (params.b1 * capability + agreement * params.b2) / denom
