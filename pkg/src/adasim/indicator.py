"""Indicator model and ABC rejection sampling over reliance parameters.

The aid keeps a disturbed copy of the operator's reliance model (the
indicator) and periodically refits (b1, b2, s, theta) from the observed
(d, agreement, capability) log: candidates are drawn from the uniform
priors, each candidate replays the logged inputs through the same belief
and preference updates as the operator, and a candidate is accepted when
the summary statistics of its simulated reliance sequence land within a
Euclidean threshold of the observed ones.

b0 and the preference noise are held at the indicator's initialized values;
they do not drive the capability-visible dynamics being fit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .reliance import (
    INFO_CAPABILITY_VISIBLE,
    OperatorParams,
    PriorSpec,
    RelianceState,
    step_state,
)

ABC_PARAM_NAMES = ("b1", "b2", "s", "theta")

INIT_PERTURB = "perturb"
INIT_PRIOR_DRAW = "prior-draw"

POSTERIOR_CSV_HEADER = ["b1", "b2", "s", "theta", "distance"]


@dataclass
class ObservationLog:
    """Append-only chronological log of (d, agreement, capability) per trial."""

    _entries: list

    def __init__(self):
        self._entries = []

    def append(self, d: int, agreement: int, capability: float) -> None:
        if d not in (0, 1):
            raise ValueError(f"d must be 0 or 1, got {d}")
        if agreement not in (-1, 1):
            raise ValueError(f"agreement must be -1 or +1, got {agreement}")
        self._entries.append((d, agreement, capability))

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple:
        return tuple(self._entries)

    def arrays(self):
        """Snapshot as (d, agreement, capability) numpy arrays."""
        if not self._entries:
            return (np.zeros(0, dtype=np.int8), np.zeros(0, dtype=np.int8),
                    np.zeros(0))
        d, a, c = zip(*self._entries)
        return (np.asarray(d, dtype=np.int8), np.asarray(a, dtype=np.int8),
                np.asarray(c, dtype=float))


@dataclass(frozen=True)
class SummaryStats:
    """Population mean, variance, and skew of a reliance sequence."""

    mean: float
    variance: float
    skew: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mean, self.variance, self.skew])


def summary_stats(sequence) -> SummaryStats:
    """Population moments; skew is 0 by convention for zero-variance input."""
    x = np.asarray(sequence, dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty sequence")
    m = float(x.mean())
    centered = x - m
    var = float(np.mean(centered**2))
    if var <= 0.0:
        return SummaryStats(mean=m, variance=0.0, skew=0.0)
    skew = float(np.mean(centered**3) / var**1.5)
    return SummaryStats(mean=m, variance=var, skew=skew)


@dataclass(frozen=True)
class PosteriorSample:
    b1: float
    b2: float
    s: float
    theta: float
    distance: float

    def value(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class AbcConfig:
    accepted_target: int = 10_000
    batch_size: int = 100_000
    threshold: float = 0.5
    max_batches: int = 50
    # simulate candidates without preference noise by default: deterministic
    # distances keep rejection stable at the default threshold
    candidate_noise_sigma: float = 0.0
    # extended statistics (agreement-conditioned means, switch rate) improve
    # identifiability for binary sequences; off by default
    extended_stats: bool = False

    def __post_init__(self):
        if self.accepted_target <= 0 or self.batch_size <= 0 or self.max_batches <= 0:
            raise ValueError("accepted_target, batch_size, max_batches must be positive")


def simulate_trace(candidate: OperatorParams, log: ObservationLog,
                   rng: np.random.Generator | None = None) -> list:
    """Replay logged (capability, agreement) inputs under candidate params.

    Emits the reliance state BEFORE each step, matching how the live loop
    reads d at a trial and steps the model afterwards.
    """
    if len(log) == 0:
        raise ValueError("observation log is empty")
    state = RelianceState.initial(candidate)
    out = []
    for _, agreement, cap in log.entries():
        out.append(state.reliance)
        state = step_state(state, candidate, cap, agreement, rng)
    return out


def _stat_vector_observed(log: ObservationLog, config: AbcConfig) -> np.ndarray:
    d, a, _ = log.arrays()
    base = summary_stats(d).as_array()
    if not config.extended_stats:
        return base
    return np.concatenate([base, _extended_stats_single(d, a)])


def _extended_stats_single(d: np.ndarray, a: np.ndarray) -> np.ndarray:
    agree = a > 0
    mean_agree = float(d[agree].mean()) if agree.any() else 0.5
    mean_disagree = float(d[~agree].mean()) if (~agree).any() else 0.5
    switch = float(np.abs(np.diff(d.astype(float))).mean()) if d.size > 1 else 0.0
    return np.array([mean_agree, mean_disagree, switch])


def _simulate_batch_stats(
    b1: np.ndarray, b2: np.ndarray, s: np.ndarray, theta: np.ndarray,
    log: ObservationLog,
    template: OperatorParams,
    config: AbcConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized replay of the log for a whole candidate batch.

    Returns the per-candidate summary-statistic matrix. Binary reliance makes
    all raw moments equal the mean, so the base statistics reduce to running
    sums of d.
    """
    _, agreement, cap = log.arrays()
    n = agreement.size
    m = b1.size
    belief = np.full(m, template.belief_initial)
    pref = np.full(m, template.preference_initial)
    sigma = config.candidate_noise_sigma

    d_sum = np.zeros(m)
    ext = config.extended_stats
    if ext:
        agree_mask = agreement > 0
        n_agree = int(agree_mask.sum())
        d_sum_agree = np.zeros(m)
        switch_sum = np.zeros(m)
        prev_d = None

    for t in range(n):
        d_t = pref >= theta
        d_sum += d_t
        if ext:
            if agree_mask[t]:
                d_sum_agree += d_t
            if prev_d is not None:
                switch_sum += d_t != prev_d
            prev_d = d_t
        # belief then preference, capability-visible branch
        belief = belief + b1 * (cap[t] - belief) + agreement[t] * b2 * (1.0 - belief)
        pref = (1.0 - s) * pref + s * belief
        if sigma > 0.0:
            pref = pref + rng.normal(0.0, sigma, size=m)

    mean = d_sum / n
    var = mean - mean**2
    m3 = mean - 3.0 * mean**2 + 2.0 * mean**3
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(var > 0.0, m3 / np.maximum(var, 1e-300) ** 1.5, 0.0)
    stats = [mean, var, skew]
    if ext:
        mean_agree = d_sum_agree / n_agree if n_agree else np.full(m, 0.5)
        n_dis = n - n_agree
        mean_dis = (d_sum - d_sum_agree) / n_dis if n_dis else np.full(m, 0.5)
        switch = switch_sum / (n - 1) if n > 1 else np.zeros(m)
        stats += [mean_agree, mean_dis, switch]
    return np.column_stack(stats)


@dataclass(frozen=True)
class AbcResult:
    """Accepted samples plus diagnostics for one rejection-sampling run."""

    samples: list
    candidates_seen: int
    accepted_count: int
    fallback_used: bool

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_count / self.candidates_seen


def abc_rejection(
    log: ObservationLog,
    priors: PriorSpec,
    config: AbcConfig,
    rng: np.random.Generator,
    template: OperatorParams | None = None,
) -> list:
    """ABC rejection sampling; returns the accepted samples only."""
    return abc_rejection_result(log, priors, config, rng, template).samples


def abc_rejection_result(
    log: ObservationLog,
    priors: PriorSpec,
    config: AbcConfig,
    rng: np.random.Generator,
    template: OperatorParams | None = None,
) -> AbcResult:
    """ABC rejection sampling of (b1, b2, s, theta) against the observed log.

    Accepts candidates whose summary-statistic distance is strictly below the
    threshold, in draw order, until ``accepted_target`` are collected or
    ``max_batches`` are exhausted; in the latter case falls back to the
    ``accepted_target`` closest candidates seen. Output is sorted by
    (distance, draw index).
    """
    if len(log) == 0:
        raise ValueError("observation log is empty")
    template = template or OperatorParams(noise_sigma=0.0)
    observed = _stat_vector_observed(log, config)

    accepted_parts = []  # (params matrix, distances, global indices)
    accepted_count = 0
    pool = None  # fallback pool of the closest candidates seen
    global_index = 0

    for _ in range(config.max_batches):
        m = config.batch_size
        cols = []
        for name in ABC_PARAM_NAMES:
            lo, hi = priors.bounds(name)
            cols.append(lo + (hi - lo) * rng.random(m))
        cand = np.column_stack(cols)
        stats = _simulate_batch_stats(
            cand[:, 0], cand[:, 1], cand[:, 2], cand[:, 3],
            log, template, config, rng,
        )
        dist = np.linalg.norm(stats - observed[None, :], axis=1)
        idx = np.arange(global_index, global_index + m)
        global_index += m

        mask = dist < config.threshold
        if mask.any():
            take = np.nonzero(mask)[0]
            room = config.accepted_target - accepted_count
            take = take[:room]
            accepted_parts.append((cand[take], dist[take], idx[take]))
            accepted_count += take.size

        # maintain the fallback pool of globally closest candidates
        k = min(config.accepted_target, m)
        part = np.argpartition(dist, k - 1)[:k]
        batch_pool = (cand[part], dist[part], idx[part])
        if pool is None:
            pool = batch_pool
        else:
            pc = np.vstack([pool[0], batch_pool[0]])
            pd = np.concatenate([pool[1], batch_pool[1]])
            pi = np.concatenate([pool[2], batch_pool[2]])
            order = np.lexsort((pi, pd))[: config.accepted_target]
            pool = (pc[order], pd[order], pi[order])

        if accepted_count >= config.accepted_target:
            break

    if accepted_count >= config.accepted_target:
        cand = np.vstack([p[0] for p in accepted_parts])
        dist = np.concatenate([p[1] for p in accepted_parts])
        idx = np.concatenate([p[2] for p in accepted_parts])
    else:
        # quantile fallback: the closest candidates seen; every genuinely
        # accepted candidate sorts ahead of any rejected one, so none is lost
        cand, dist, idx = pool
    order = np.lexsort((idx, dist))
    samples = [
        PosteriorSample(
            b1=float(cand[i, 0]), b2=float(cand[i, 1]),
            s=float(cand[i, 2]), theta=float(cand[i, 3]),
            distance=float(dist[i]),
        )
        for i in order
    ]
    return AbcResult(
        samples=samples,
        candidates_seen=global_index,
        accepted_count=accepted_count,
        fallback_used=accepted_count < config.accepted_target,
    )


def point_estimate(posterior, priors: PriorSpec | None = None) -> dict:
    """Component-wise posterior mean, clamped into the legal ranges."""
    if not posterior:
        raise ValueError("empty posterior")
    out = {}
    for name in ABC_PARAM_NAMES:
        mean = float(np.mean([s.value(name) for s in posterior]))
        if name in ("b1", "b2", "s"):
            mean = min(max(mean, 0.0), 1.0)
        else:
            mean = max(mean, 0.0)
        out[name] = mean
    return out


def dump_posterior(posterior, path) -> None:
    """Write accepted samples as a diagnostics CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POSTERIOR_CSV_HEADER)
        for s in posterior:
            writer.writerow([repr(s.b1), repr(s.b2), repr(s.s),
                             repr(s.theta), repr(s.distance)])


@dataclass
class IndicatorState:
    """The aid's working copy of the operator model: params plus live state."""

    params: OperatorParams
    state: RelianceState

    @property
    def reliance(self) -> int:
        return self.state.reliance

    def step(self, capability: float, agreement: int,
             rng: np.random.Generator | None = None) -> None:
        self.state = step_state(self.state, self.params, capability, agreement, rng)

    def install(self, estimate: dict) -> None:
        """Replace the fitted parameters; the live state persists."""
        self.params = replace(self.params, **estimate)


def init_indicator(
    truth: OperatorParams | None,
    mode: str,
    priors: PriorSpec,
    rng: np.random.Generator,
    perturb_sigma: float = 0.05,
) -> IndicatorState:
    """Initialize the indicator as a disturbed copy or a fresh prior draw.

    The indicator itself runs without preference noise so d_ind is a
    deterministic function of the interaction history.
    """
    if mode == INIT_PERTURB:
        if truth is None:
            raise ValueError("perturb mode requires the true operator params")
        def perturbed(v, lo=0.0, hi=1.0):
            return float(min(max(v + rng.normal(0.0, perturb_sigma), lo), hi))
        params = OperatorParams(
            b0=perturbed(truth.b0),
            b1=perturbed(truth.b1),
            b2=perturbed(truth.b2),
            s=perturbed(truth.s),
            theta=perturbed(truth.theta, 0.0, np.inf),
            noise_sigma=0.0,
            belief_initial=truth.belief_initial,
            preference_initial=truth.preference_initial,
            info_mode=INFO_CAPABILITY_VISIBLE,
        )
    elif mode == INIT_PRIOR_DRAW:
        params = OperatorParams(
            b0=priors.sample_value("b0", rng),
            b1=priors.sample_value("b1", rng),
            b2=priors.sample_value("b2", rng),
            s=priors.sample_value("s", rng),
            theta=priors.sample_value("theta", rng),
            noise_sigma=0.0,
            info_mode=INFO_CAPABILITY_VISIBLE,
        )
    else:
        raise ValueError(f"unknown indicator init mode {mode!r}")
    return IndicatorState(params=params, state=RelianceState.initial(params))
