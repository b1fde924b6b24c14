"""Gambles, games, trial outcome sampling, and trial-record ingestion.

A game pairs two two-outcome gambles (options A and B) played for a fixed
number of trials. Every trial realizes BOTH options independently so the
unchosen option's payoff can be shown as the foregone reward.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SELECTION_A = "A"
SELECTION_B = "B"
VALID_SELECTIONS = (SELECTION_A, SELECTION_B)

TRIAL_CSV_HEADER = [
    "participant_id", "game_id", "trial_index",
    "ha", "la", "pha", "hb", "lb", "phb",
    "selection", "payoff", "foregone",
]


class TrialRecordError(ValueError):
    """Raised when a trial-record file fails validation."""


@dataclass(frozen=True)
class Gamble:
    """Two-outcome lottery paying ``high_payoff`` with probability ``p_high``.

    Construction canonicalizes so that high_payoff >= low_payoff; if the
    caller passes them reversed, payoffs are swapped and p_high is
    complemented so the distribution is unchanged.
    """

    high_payoff: float
    low_payoff: float
    p_high: float

    def __post_init__(self):
        hi, lo, p = float(self.high_payoff), float(self.low_payoff), float(self.p_high)
        if hi < lo:
            hi, lo, p = lo, hi, 1.0 - p
        object.__setattr__(self, "high_payoff", hi)
        object.__setattr__(self, "low_payoff", lo)
        object.__setattr__(self, "p_high", p)
        if not (0.0 <= self.p_high <= 1.0):
            raise ValueError(f"p_high must be in [0,1], got {self.p_high}")
        if not (np.isfinite(self.high_payoff) and np.isfinite(self.low_payoff)):
            raise ValueError("gamble payoffs must be finite")

    @property
    def spread(self) -> float:
        return self.high_payoff - self.low_payoff

    def expected_value(self) -> float:
        return self.p_high * self.high_payoff + (1.0 - self.p_high) * self.low_payoff

    def sample(self, rng: np.random.Generator) -> float:
        return self.high_payoff if rng.random() < self.p_high else self.low_payoff


@dataclass(frozen=True)
class Game:
    """A paired-gamble choice problem played over ``trials`` trials."""

    id: str
    option_a: Gamble
    option_b: Gamble
    trials: int = 25

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    def option(self, selection: str) -> Gamble:
        if selection == SELECTION_A:
            return self.option_a
        if selection == SELECTION_B:
            return self.option_b
        raise ValueError(f"unknown selection {selection!r}")


@dataclass(frozen=True)
class TrialOutcome:
    """One trial's realized payoffs for both options."""

    payoff_a: float
    payoff_b: float

    def payoff_for(self, selection: str) -> float:
        return self.payoff_a if selection == SELECTION_A else self.payoff_b

    def foregone_for(self, selection: str) -> float:
        return self.payoff_b if selection == SELECTION_A else self.payoff_a


@dataclass(frozen=True)
class PayoffBounds:
    """Affine normalization bounds spanning all payoffs in a game bank."""

    low: float
    high: float

    def __post_init__(self):
        if self.high <= self.low:
            raise ValueError(
                f"degenerate payoff bounds [{self.low}, {self.high}]: "
                "game bank has no payoff spread"
            )

    def normalize(self, payoff: float) -> float:
        return (payoff - self.low) / (self.high - self.low)

    def denormalize(self, value: float) -> float:
        return self.low + value * (self.high - self.low)

    @classmethod
    def from_games(cls, games) -> "PayoffBounds":
        payoffs = [
            p
            for g in games
            for p in (g.option_a.high_payoff, g.option_a.low_payoff,
                      g.option_b.high_payoff, g.option_b.low_payoff)
        ]
        if not payoffs:
            raise ValueError("empty game bank")
        return cls(min(payoffs), max(payoffs))


@dataclass(frozen=True)
class ContextVector:
    """Length-6 per-game context: (H_A, L_A, p_A, H_B, L_B, p_B).

    Payoff entries are normalized to [0,1]; probabilities pass through.
    """

    values: tuple

    def __post_init__(self):
        if len(self.values) != 6:
            raise ValueError(f"context vector must have 6 entries, got {len(self.values)}")
        for i in (0, 1, 3, 4):
            if not (0.0 <= self.values[i] <= 1.0):
                raise ValueError(f"normalized payoff entry {i} out of [0,1]: {self.values[i]}")
        for i in (2, 5):
            if not (0.0 <= self.values[i] <= 1.0):
                raise ValueError(f"probability entry {i} out of [0,1]: {self.values[i]}")

    def as_list(self) -> list:
        return list(self.values)


@dataclass(frozen=True)
class TrialRecordRow:
    """One row of a simplified trial-record CSV (replay mode)."""

    participant_id: str
    game_id: str
    trial_index: int
    ha: float
    la: float
    pha: float
    hb: float
    lb: float
    phb: float
    selection: str
    payoff: float
    foregone: float

    def game(self, trials: int = 25) -> Game:
        return Game(
            id=self.game_id,
            option_a=Gamble(self.ha, self.la, self.pha),
            option_b=Gamble(self.hb, self.lb, self.phb),
            trials=trials,
        )


def sample_trial_outcome(game: Game, rng: np.random.Generator) -> TrialOutcome:
    """Realize both options independently, one draw each."""
    return TrialOutcome(
        payoff_a=game.option_a.sample(rng),
        payoff_b=game.option_b.sample(rng),
    )


def make_context_vector(game: Game, bounds: PayoffBounds) -> ContextVector:
    """Build the normalized (H_A, L_A, p_A, H_B, L_B, p_B) context."""
    a, b = game.option_a, game.option_b
    return ContextVector(values=(
        bounds.normalize(a.high_payoff),
        bounds.normalize(a.low_payoff),
        a.p_high,
        bounds.normalize(b.high_payoff),
        bounds.normalize(b.low_payoff),
        b.p_high,
    ))


def generate_game_bank(
    count: int,
    payoff_range: tuple,
    probability_range: tuple,
    rng: np.random.Generator,
    trials: int = 25,
) -> list:
    """Generate ``count`` games with independently sampled gamble parameters."""
    pay_lo, pay_hi = payoff_range
    prob_lo, prob_hi = probability_range
    if pay_hi < pay_lo or prob_hi < prob_lo:
        raise ValueError("empty payoff or probability range")
    if not (0.0 <= prob_lo and prob_hi <= 1.0):
        raise ValueError("probability range must lie within [0,1]")
    games = []
    for i in range(count):
        def draw_gamble():
            p1 = rng.uniform(pay_lo, pay_hi)
            p2 = rng.uniform(pay_lo, pay_hi)
            ph = rng.uniform(prob_lo, prob_hi)
            return Gamble(max(p1, p2), min(p1, p2), ph)
        games.append(Game(
            id=f"g{i:04d}",
            option_a=draw_gamble(),
            option_b=draw_gamble(),
            trials=trials,
        ))
    return games


def generate_matched_game_bank(
    count: int,
    payoff_range: tuple,
    probability_range: tuple,
    rng: np.random.Generator,
    trials: int = 25,
    ev_spread: float = 0.1,
    max_attempts: int = 1000,
) -> list:
    """Generate games whose two options have closely matched expected values.

    Option B's EV is drawn within a relative ``ev_spread`` of option A's, the
    usual structure of paired-gamble banks; independently sampled options
    would make one side dominant in almost every game and leave the aid's
    capability pinned at 1.
    """
    pay_lo, pay_hi = payoff_range
    prob_lo, prob_hi = probability_range
    if pay_hi <= pay_lo or prob_hi < prob_lo:
        raise ValueError("empty payoff or probability range")
    games = []
    for i in range(count):
        for _ in range(max_attempts):
            pa = rng.uniform(prob_lo, prob_hi)
            ha = rng.uniform(pay_lo, pay_hi)
            la = rng.uniform(pay_lo, ha)
            option_a = Gamble(ha, la, pa)
            target = option_a.expected_value() * (1.0 + rng.uniform(-ev_spread, ev_spread))
            target = max(target, pay_lo)
            pb = rng.uniform(prob_lo, prob_hi)
            lb = rng.uniform(pay_lo, target)
            hb = lb + (target - lb) / pb if pb > 0 else lb
            if lb <= hb <= pay_hi:
                games.append(Game(
                    id=f"g{i:04d}",
                    option_a=option_a,
                    option_b=Gamble(hb, lb, pb),
                    trials=trials,
                ))
                break
        else:
            raise RuntimeError(
                f"could not construct an EV-matched game within {max_attempts} attempts"
            )
    return games


def load_trials(path) -> list:
    """Load and validate a trial-record CSV (schema in TRIAL_CSV_HEADER)."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrialRecordError(f"{path}: empty file, expected header")
        if header != TRIAL_CSV_HEADER:
            raise TrialRecordError(
                f"{path}: bad header {header!r}, expected {TRIAL_CSV_HEADER!r}"
            )
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(TRIAL_CSV_HEADER):
                raise TrialRecordError(f"{path}:{lineno}: expected {len(TRIAL_CSV_HEADER)} fields")
            try:
                row = TrialRecordRow(
                    participant_id=raw[0],
                    game_id=raw[1],
                    trial_index=int(raw[2]),
                    ha=float(raw[3]),
                    la=float(raw[4]),
                    pha=float(raw[5]),
                    hb=float(raw[6]),
                    lb=float(raw[7]),
                    phb=float(raw[8]),
                    selection=raw[9],
                    payoff=float(raw[10]),
                    foregone=float(raw[11]),
                )
            except ValueError as exc:
                raise TrialRecordError(f"{path}:{lineno}: {exc}") from exc
            if row.selection not in VALID_SELECTIONS:
                raise TrialRecordError(
                    f"{path}:{lineno}: unknown selection {row.selection!r}"
                )
            if row.trial_index < 0:
                raise TrialRecordError(f"{path}:{lineno}: negative trial_index")
            rows.append(row)
    return rows


def group_trials(rows):
    """Group rows by (participant_id, game_id) preserving file order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.participant_id, row.game_id), []).append(row)
    return groups
