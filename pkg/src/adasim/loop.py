"""Per-trial suggestion loop, Monte Carlo populations, and method comparison.

One session walks an operator through a bank of games. Each trial: the
operator picks unaided, the aid suggests (the optimal option when reliance
is indicated or when running myopically, otherwise the predicted pick),
the operator keeps or switches according to their reliance state, payoffs
realize, and both the true and indicator models step. The indicator's
parameters are refit by ABC at configured game boundaries.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np

from .capability import CapabilityResult, capability
from .games import (
    Game,
    PayoffBounds,
    generate_game_bank,
    generate_matched_game_bank,
    make_context_vector,
    sample_trial_outcome,
)
from .indicator import (
    AbcConfig,
    INIT_PERTURB,
    IndicatorState,
    ObservationLog,
    abc_rejection,
    init_indicator,
    point_estimate,
)
from .predictor import DEFAULT_WINDOW, HistoryEntry, make_backend, make_input, predict
from .reliance import (
    AGREE,
    DISAGREE,
    ChoicePolicyParams,
    OperatorParams,
    PriorSpec,
    RelianceState,
    initial_selection,
    sample_operator_params,
    step_state,
)

AID_PREDICTIVE = "predictive"
AID_MYOPIC = "myopic"
AID_MODES = (AID_PREDICTIVE, AID_MYOPIC)


@dataclass(frozen=True)
class SessionConfig:
    """Experiment configuration for one operator population."""

    aid_mode: str = AID_PREDICTIVE
    games_per_operator: int = 30
    trials_per_game: int = 25
    abc_update_interval_games: int = 10
    priors: PriorSpec = field(default_factory=PriorSpec)
    predictor_backend: str = "sticky"
    indicator_init_mode: str = INIT_PERTURB
    master_seed: int = 0
    abc: AbcConfig = field(default_factory=AbcConfig)
    choice_policy: ChoicePolicyParams = field(default_factory=ChoicePolicyParams)
    noise_sigma: float = 0.02
    perturb_sigma: float = 0.05
    predictor_window: int = DEFAULT_WINDOW
    payoff_range: tuple = (0.0, 4.0)
    probability_range: tuple = (0.2, 0.8)
    # relative EV spread between the paired options; None draws both options
    # independently (which makes one side dominant in nearly every game)
    ev_spread: float | None = 0.05

    def __post_init__(self):
        if self.aid_mode not in AID_MODES:
            raise ValueError(f"unknown aid mode {self.aid_mode!r}")
        if self.games_per_operator < 1 or self.trials_per_game < 1:
            raise ValueError("games_per_operator and trials_per_game must be >= 1")
        if not (1 <= self.abc_update_interval_games <= self.games_per_operator):
            raise ValueError("abc_update_interval_games must be in [1, games_per_operator]")


@dataclass(frozen=True)
class InteractionRecord:
    """Full transcript of one trial."""

    game_id: str
    game_index: int
    trial: int
    context: tuple
    initial_selection: str          # operator's unaided pick
    predicted_selection: str        # aid's point prediction
    suggestion: str                 # what the aid suggested
    optimal_option: str
    agreement: int                  # +1 if suggestion matches the unaided pick
    reliance: int                   # true operator d
    reliance_indicated: int         # indicator d_ind
    final_selection: str
    payoff: float
    foregone: float
    capability: float
    rho: int
    preference_true: float
    preference_ind: float


@dataclass
class Trace:
    """Ordered records for one operator plus per-game summaries."""

    operator_params: OperatorParams
    records: list = field(default_factory=list)
    per_game_mean_d: list = field(default_factory=list)
    per_game_mean_rho: list = field(default_factory=list)
    cumulative_reward: float = 0.0
    abc_update_games: list = field(default_factory=list)

    @property
    def overall_mean_d(self) -> float:
        return float(np.mean([r.reliance for r in self.records]))

    @property
    def overall_mean_rho(self) -> float:
        return float(np.mean([r.rho for r in self.records]))


def performance_metric(d_ind: int, d: int, a_i: str, h_i: str) -> int:
    """Joint indicator-and-prediction correctness for one trial."""
    if d_ind == d == 1:
        return 1
    if d_ind == d == 0 and a_i == h_i:
        return 1
    return 0


@functools.lru_cache(maxsize=65536)
def _capability_cached(key, n_c) -> CapabilityResult:
    ha, la, pa, hb, lb, pb = key
    from .games import Gamble
    game = Game(id="cache", option_a=Gamble(ha, la, pa), option_b=Gamble(hb, lb, pb))
    return capability(game, n_c)


def capability_for(game: Game, n_c: int) -> CapabilityResult:
    a, b = game.option_a, game.option_b
    key = (a.high_payoff, a.low_payoff, a.p_high,
           b.high_payoff, b.low_payoff, b.p_high)
    return _capability_cached(key, n_c)


def run_trial(
    game: Game,
    game_index: int,
    trial_n: int,
    context,
    op_params: OperatorParams,
    op_state: RelianceState,
    indicator: IndicatorState,
    backend,
    aid_mode: str,
    policy: ChoicePolicyParams,
    history: list,
    log: ObservationLog,
    rng: np.random.Generator,
    window: int = DEFAULT_WINDOW,
):
    """Execute one trial; returns (record, new operator state).

    Mutates ``history`` (choice/predictor window), ``indicator``, and ``log``.
    Reliance decisions for this trial come from the states as they stand;
    both models step afterwards with this trial's capability and agreement.
    """
    cap = capability_for(game, game.trials - trial_n)
    d = op_state.reliance
    d_ind = indicator.reliance

    h_i = initial_selection(history, game, policy, rng)
    pred = predict(make_input([HistoryEntry(*h) for h in history], context, window), backend)
    h_hat = pred.point

    if aid_mode == AID_MYOPIC or d_ind == 1:
        a_i = cap.optimal_option
    else:
        a_i = h_hat

    agreement = AGREE if h_i == a_i else DISAGREE
    h_star = a_i if d == 1 else h_i

    outcome = sample_trial_outcome(game, rng)
    payoff = outcome.payoff_for(h_star)
    foregone = outcome.foregone_for(h_star)

    rho = performance_metric(d_ind, d, a_i, h_i)
    log.append(d, agreement, cap.capability)

    pref_ind = indicator.state.preference
    new_op_state = step_state(op_state, op_params, cap.capability, agreement, rng)
    indicator.step(cap.capability, agreement)
    history.append((h_star, payoff, foregone))

    record = InteractionRecord(
        game_id=game.id,
        game_index=game_index,
        trial=trial_n,
        context=tuple(context.values),
        initial_selection=h_i,
        predicted_selection=h_hat,
        suggestion=a_i,
        optimal_option=cap.optimal_option,
        agreement=agreement,
        reliance=d,
        reliance_indicated=d_ind,
        final_selection=h_star,
        payoff=payoff,
        foregone=foregone,
        capability=cap.capability,
        rho=rho,
        preference_true=op_state.preference,
        preference_ind=pref_ind,
    )
    return record, new_op_state


def run_operator_session(
    config: SessionConfig,
    op_params: OperatorParams,
    games: list,
    rng: np.random.Generator,
    indicator: IndicatorState | None = None,
    bounds: PayoffBounds | None = None,
) -> Trace:
    """Run one operator through all games, with scheduled ABC refits."""
    if len(games) != config.games_per_operator:
        raise ValueError(
            f"expected {config.games_per_operator} games, got {len(games)}"
        )
    bounds = bounds or PayoffBounds.from_games(games)
    if indicator is None:
        indicator = init_indicator(
            op_params, config.indicator_init_mode, config.priors, rng,
            perturb_sigma=config.perturb_sigma,
        )
    backend = make_backend(config.predictor_backend)
    log = ObservationLog()
    op_state = RelianceState.initial(op_params)
    trace = Trace(operator_params=op_params)

    for g_idx, game in enumerate(games):
        context = make_context_vector(game, bounds)
        history: list = []
        game_d = []
        game_rho = []
        for n in range(config.trials_per_game):
            record, op_state = run_trial(
                game, g_idx, n, context, op_params, op_state, indicator,
                backend, config.aid_mode, config.choice_policy, history,
                log, rng, config.predictor_window,
            )
            trace.records.append(record)
            trace.cumulative_reward += record.payoff
            game_d.append(record.reliance)
            game_rho.append(record.rho)
        trace.per_game_mean_d.append(float(np.mean(game_d)))
        trace.per_game_mean_rho.append(float(np.mean(game_rho)))

        games_done = g_idx + 1
        if (games_done % config.abc_update_interval_games == 0
                and games_done < config.games_per_operator):
            posterior = abc_rejection(
                log, config.priors, config.abc, rng, template=indicator.params,
            )
            indicator.install(point_estimate(posterior))
            trace.abc_update_games.append(games_done)

    return trace


@dataclass
class MonteCarloResult:
    """Population aggregate over independently sampled operators."""

    config: SessionConfig
    n_operators: int
    per_game_mean_d: np.ndarray      # (games,)
    per_game_std_d: np.ndarray
    per_game_mean_rho: np.ndarray
    per_game_std_rho: np.ndarray
    overall_mean_d: float
    overall_mean_rho: float
    mean_cumulative_reward: float
    traces: list = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "n_operators": self.n_operators,
            "aid_mode": self.config.aid_mode,
            "games_per_operator": self.config.games_per_operator,
            "trials_per_game": self.config.trials_per_game,
            "per_game_mean_d": [float(x) for x in self.per_game_mean_d],
            "per_game_std_d": [float(x) for x in self.per_game_std_d],
            "per_game_mean_rho": [float(x) for x in self.per_game_mean_rho],
            "per_game_std_rho": [float(x) for x in self.per_game_std_rho],
            "overall_mean_d": self.overall_mean_d,
            "overall_mean_rho": self.overall_mean_rho,
            "mean_cumulative_reward": self.mean_cumulative_reward,
        }


def make_game_bank(config: SessionConfig, seed_seq: np.random.SeedSequence) -> list:
    rng = np.random.default_rng(seed_seq)
    if config.ev_spread is None:
        return generate_game_bank(
            config.games_per_operator,
            config.payoff_range,
            config.probability_range,
            rng,
            trials=config.trials_per_game,
        )
    return generate_matched_game_bank(
        config.games_per_operator,
        config.payoff_range,
        config.probability_range,
        rng,
        trials=config.trials_per_game,
        ev_spread=config.ev_spread,
    )


def run_monte_carlo(
    config: SessionConfig,
    n_operators: int,
    keep_traces: bool = True,
) -> MonteCarloResult:
    """Simulate a fresh operator population, one RNG stream per operator.

    The game bank is shared across operators (and, via the master seed,
    across aid modes), so method comparisons see common random numbers.
    """
    if n_operators < 1:
        raise ValueError("n_operators must be >= 1")
    root = np.random.SeedSequence(config.master_seed)
    bank_seq, *op_seqs = root.spawn(n_operators + 1)
    games = make_game_bank(config, bank_seq)
    bounds = PayoffBounds.from_games(games)

    d_matrix = np.zeros((n_operators, config.games_per_operator))
    rho_matrix = np.zeros_like(d_matrix)
    rewards = np.zeros(n_operators)
    traces = []
    for i, seq in enumerate(op_seqs):
        rng = np.random.default_rng(seq)
        op_params = sample_operator_params(
            config.priors, rng, noise_sigma=config.noise_sigma,
        )
        trace = run_operator_session(config, op_params, games, rng, bounds=bounds)
        d_matrix[i] = trace.per_game_mean_d
        rho_matrix[i] = trace.per_game_mean_rho
        rewards[i] = trace.cumulative_reward
        if keep_traces:
            traces.append(trace)

    return MonteCarloResult(
        config=config,
        n_operators=n_operators,
        per_game_mean_d=d_matrix.mean(axis=0),
        per_game_std_d=d_matrix.std(axis=0),
        per_game_mean_rho=rho_matrix.mean(axis=0),
        per_game_std_rho=rho_matrix.std(axis=0),
        overall_mean_d=float(d_matrix.mean()),
        overall_mean_rho=float(rho_matrix.mean()),
        mean_cumulative_reward=float(rewards.mean()),
        traces=traces,
    )


@dataclass(frozen=True)
class ComparisonCell:
    theta: float
    s: float
    b2: float
    mean_d_predictive: float
    mean_d_myopic: float
    percent_difference: float | None  # None when the myopic mean is zero


def compare_methods(
    base_config: SessionConfig,
    theta_centers,
    s_centers,
    b2_centers,
    n_operators: int,
    prior_width: float = 0.005,
) -> list:
    """Predictive-vs-myopic percent difference in overall mean reliance.

    Both modes run on identical operator populations and game banks (same
    master seed drives both).
    """
    cells = []
    for theta_c in theta_centers:
        for s_c in s_centers:
            for b2_c in b2_centers:
                priors = PriorSpec.centered(
                    width=prior_width, theta=theta_c, s=s_c, b2=b2_c,
                )
                results = {}
                for mode in (AID_PREDICTIVE, AID_MYOPIC):
                    cfg = replace(base_config, aid_mode=mode, priors=priors)
                    results[mode] = run_monte_carlo(cfg, n_operators, keep_traces=False)
                mean_pred = results[AID_PREDICTIVE].overall_mean_d
                mean_myo = results[AID_MYOPIC].overall_mean_d
                pct = (
                    100.0 * (mean_pred - mean_myo) / mean_myo
                    if mean_myo != 0.0 else None
                )
                cells.append(ComparisonCell(
                    theta=theta_c, s=s_c, b2=b2_c,
                    mean_d_predictive=mean_pred,
                    mean_d_myopic=mean_myo,
                    percent_difference=pct,
                ))
    return cells
