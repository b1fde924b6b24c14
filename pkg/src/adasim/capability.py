"""Exact autonomy-capability computation for paired binomial gambles.

Capability is the probability that the better option's cumulative reward
over the remaining trials strictly exceeds the other option's. Computed two
ways: an exact double sum over the joint high-count support, and a 2^(2n)
sequence-enumeration oracle used for verification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import SELECTION_A, SELECTION_B, Game

ORACLE_MAX_TRIALS = 12

# Ties in cumulative reward count as "not exceeding" for both options, so
# win_a + win_b + tie = 1 and capability is the larger win probability.
_REL_TOL = 1e-9


@dataclass(frozen=True)
class CapabilityResult:
    capability: float
    optimal_option: str
    win_prob_a: float
    win_prob_b: float
    tie_prob: float


def binomial_pmf(n: int, p: float, k: int) -> float:
    """Exact binomial point mass C(n,k) p^k (1-p)^(n-k)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not (0 <= k <= n):
        raise ValueError(f"k must be in [0, {n}], got {k}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must be in [0,1], got {p}")
    # math.comb is exact; powers of degenerate p handled by 0**0 == 1
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def _pmf_vector(n: int, p: float) -> list:
    return [binomial_pmf(n, p, k) for k in range(n + 1)]


def _reward_compare(ra: float, rb: float, scale: float) -> int:
    """Sign of ra - rb with an absolute tolerance for float-equal rewards."""
    tol = _REL_TOL * max(1.0, scale)
    diff = ra - rb
    if diff > tol:
        return 1
    if diff < -tol:
        return -1
    return 0


def _reward_scale(game: Game, n_c: int) -> float:
    return n_c * max(
        abs(game.option_a.high_payoff), abs(game.option_a.low_payoff),
        abs(game.option_b.high_payoff), abs(game.option_b.low_payoff), 1.0,
    )


def _build_result(win_a: float, win_b: float, tie: float, game: Game) -> CapabilityResult:
    # float summation can overshoot 1 by a few ulps; renormalize so the
    # probabilities close exactly and capability stays within [0,1]
    total = win_a + win_b + tie
    win_a, win_b, tie = win_a / total, win_b / total, tie / total
    if win_a > win_b:
        opt = SELECTION_A
    elif win_b > win_a:
        opt = SELECTION_B
    else:
        # tie-break: higher expected value, then option A
        ev_a = game.option_a.expected_value()
        ev_b = game.option_b.expected_value()
        opt = SELECTION_A if ev_a >= ev_b else SELECTION_B
    return CapabilityResult(
        capability=max(win_a, win_b),
        optimal_option=opt,
        win_prob_a=win_a,
        win_prob_b=win_b,
        tie_prob=tie,
    )


def capability(game: Game, n_c: int) -> CapabilityResult:
    """Exact win/tie probabilities via the (n_c+1)^2 joint count support.

    With g_A ~ Binomial(n_c, p_A) counting high outcomes, the cumulative
    reward of A is g_A*(H_A - L_A) + n_c*L_A, and likewise for B; the double
    sum weighs every (g_A, g_B) pair by its exact joint probability.
    """
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    a, b = game.option_a, game.option_b
    pmf_a = _pmf_vector(n_c, a.p_high)
    pmf_b = _pmf_vector(n_c, b.p_high)
    scale = _reward_scale(game, n_c)
    win_a = win_b = tie = 0.0
    for ka in range(n_c + 1):
        ra = ka * a.spread + n_c * a.low_payoff
        for kb in range(n_c + 1):
            rb = kb * b.spread + n_c * b.low_payoff
            w = pmf_a[ka] * pmf_b[kb]
            cmp = _reward_compare(ra, rb, scale)
            if cmp > 0:
                win_a += w
            elif cmp < 0:
                win_b += w
            else:
                tie += w
    return _build_result(win_a, win_b, tie, game)


def _sequence_table(gamble, n_c: int):
    """Per-sequence probability and cumulative reward over all 2^n_c
    high/low outcome sequences, rewards summed trial by trial."""
    bits = ((np.arange(2**n_c)[:, None] >> np.arange(n_c)) & 1).astype(bool)
    probs = np.prod(np.where(bits, gamble.p_high, 1.0 - gamble.p_high), axis=1)
    rewards = np.sum(np.where(bits, gamble.high_payoff, gamble.low_payoff), axis=1)
    return probs, rewards


def capability_oracle(game: Game, n_c: int) -> CapabilityResult:
    """Brute-force check: enumerate all 2^(2 n_c) joint high/low sequences."""
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    if n_c > ORACLE_MAX_TRIALS:
        raise ValueError(f"oracle limited to n_c <= {ORACLE_MAX_TRIALS}, got {n_c}")
    a, b = game.option_a, game.option_b
    tol = _REL_TOL * max(1.0, _reward_scale(game, n_c))
    probs_a, rewards_a = _sequence_table(a, n_c)
    probs_b, rewards_b = _sequence_table(b, n_c)
    joint = np.outer(probs_a, probs_b)
    diff = rewards_a[:, None] - rewards_b[None, :]
    win_a = float(joint[diff > tol].sum())
    win_b = float(joint[diff < -tol].sum())
    tie = float(joint[np.abs(diff) <= tol].sum())
    return _build_result(win_a, win_b, tie, game)
