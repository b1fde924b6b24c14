"""HTTP+JSON session service: a human plays the operator against the aid.

Unlike the simulated loop, there is no synthetic operator model here: the
human decides reliance themselves, revealed by keeping or switching their
selection. The aid side (predictor, indicator model, ABC refits) runs
exactly as in the offline loop. Each completed trial is appended to a
JSON-lines transcript and flushed before the payoff is revealed.
"""
from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .games import (
    PayoffBounds,
    VALID_SELECTIONS,
    make_context_vector,
    sample_trial_outcome,
)
from .indicator import (
    AbcConfig,
    INIT_PRIOR_DRAW,
    ObservationLog,
    abc_rejection,
    init_indicator,
    point_estimate,
)
from .loop import AID_MODES, AID_MYOPIC, SessionConfig, capability_for, performance_metric
from .predictor import HistoryEntry, make_backend, make_input, predict
from .reliance import AGREE, DISAGREE, PriorSpec

TRANSCRIPT_SCHEMA_VERSION = 1

STATE_AWAITING_INITIAL = "awaiting-initial"
STATE_AWAITING_FINAL = "awaiting-final"
STATE_FINISHED = "finished"


class CreateSessionRequest(BaseModel):
    aid_mode: str = Field(default="predictive")
    games_per_operator: int = Field(default=30, ge=1)
    trials_per_game: int = Field(default=25, ge=1)
    abc_update_interval_games: int = Field(default=10, ge=1)
    predictor_backend: str = Field(default="sticky")
    seed: int = Field(default=0)
    abc_accepted_target: int = Field(default=2000, ge=1)
    abc_batch_size: int = Field(default=20000, ge=1)
    abc_threshold: float = Field(default=0.5)
    abc_max_batches: int = Field(default=5, ge=1)


class SelectionRequest(BaseModel):
    selection: str


def _game_payload(game, game_index: int, trial: int) -> dict:
    return {
        "game_id": game.id,
        "game_index": game_index,
        "trial": trial,
        "trials_per_game": game.trials,
        "option_a": {
            "high": game.option_a.high_payoff,
            "low": game.option_a.low_payoff,
            "p_high": game.option_a.p_high,
        },
        "option_b": {
            "high": game.option_b.high_payoff,
            "low": game.option_b.low_payoff,
            "p_high": game.option_b.p_high,
        },
    }


@dataclass
class LiveSession:
    """Server-side state for one interactive session."""

    id: str
    config: SessionConfig
    games: list
    bounds: PayoffBounds
    indicator: object
    backend: object
    rng: np.random.Generator
    transcript_path: Path
    state: str = STATE_AWAITING_INITIAL
    game_index: int = 0
    trial: int = 0
    abc_log: ObservationLog = field(default_factory=ObservationLog)
    history: list = field(default_factory=list)   # within-game window
    records: list = field(default_factory=list)
    abc_update_games: list = field(default_factory=list)
    cumulative_reward: float = 0.0
    pending: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current_game(self):
        return self.games[self.game_index]

    def snapshot(self) -> dict:
        payload = {
            "session_id": self.id,
            "state": self.state,
            "aid_mode": self.config.aid_mode,
            "game_index": self.game_index,
            "trial": self.trial,
            "games_per_operator": self.config.games_per_operator,
            "trials_per_game": self.config.trials_per_game,
            "trials_completed": len(self.records),
            "cumulative_reward": self.cumulative_reward,
            "abc_update_games": list(self.abc_update_games),
        }
        if self.state != STATE_FINISHED:
            payload["game"] = _game_payload(self.current_game, self.game_index, self.trial)
        if self.state == STATE_AWAITING_FINAL and self.pending:
            payload["suggestion"] = self.pending["suggestion"]
            payload["agrees"] = self.pending["agreement"] == AGREE
            payload["initial_selection"] = self.pending["initial_selection"]
        return payload


class SessionStore:
    def __init__(self, storage_dir):
        self.storage_dir = Path(storage_dir)
        self.storage_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict = {}
        self._lock = threading.Lock()

    def create(self, req: CreateSessionRequest) -> LiveSession:
        from .loop import make_game_bank

        if req.aid_mode not in AID_MODES:
            raise HTTPException(status_code=422, detail=[{
                "loc": ["aid_mode"],
                "msg": f"must be one of {list(AID_MODES)}",
            }])
        try:
            config = SessionConfig(
                aid_mode=req.aid_mode,
                games_per_operator=req.games_per_operator,
                trials_per_game=req.trials_per_game,
                abc_update_interval_games=min(
                    req.abc_update_interval_games, req.games_per_operator),
                predictor_backend=req.predictor_backend,
                indicator_init_mode=INIT_PRIOR_DRAW,
                master_seed=req.seed,
                abc=AbcConfig(
                    accepted_target=req.abc_accepted_target,
                    batch_size=req.abc_batch_size,
                    threshold=req.abc_threshold,
                    max_batches=req.abc_max_batches,
                ),
            )
            backend = make_backend(config.predictor_backend)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=[{"msg": str(exc)}])

        root = np.random.SeedSequence(config.master_seed)
        bank_seq, session_seq = root.spawn(2)
        games = make_game_bank(config, bank_seq)
        rng = np.random.default_rng(session_seq)
        # human sessions have no synthetic truth to perturb: prior draw only
        indicator = init_indicator(None, INIT_PRIOR_DRAW, config.priors, rng)

        session_id = uuid.uuid4().hex
        session = LiveSession(
            id=session_id,
            config=config,
            games=games,
            bounds=PayoffBounds.from_games(games),
            indicator=indicator,
            backend=backend,
            rng=rng,
            transcript_path=self.storage_dir / f"session-{session_id}.jsonl",
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session id")
        return session

    def flush_all(self) -> None:
        # transcripts are flushed per trial; nothing buffered to drain
        pass


def _persist_trial(session: LiveSession, record: dict) -> None:
    line = json.dumps(record, sort_keys=True)
    with session.transcript_path.open("a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def create_app(storage_dir="./sessions") -> FastAPI:
    app = FastAPI(title="adasim session service")
    store = SessionStore(storage_dir)
    app.state.store = store

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        session = store.create(req)
        return session.snapshot()

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get(session_id).snapshot()

    @app.post("/api/sessions/{session_id}/initial")
    def post_initial(session_id: str, req: SelectionRequest):
        session = store.get(session_id)
        if req.selection not in VALID_SELECTIONS:
            raise HTTPException(status_code=422, detail="selection must be A or B")
        with session.lock:
            if session.state != STATE_AWAITING_INITIAL:
                raise HTTPException(
                    status_code=409,
                    detail=f"session is {session.state}, expected {STATE_AWAITING_INITIAL}",
                )
            game = session.current_game
            cap = capability_for(game, game.trials - session.trial)
            context = make_context_vector(game, session.bounds)
            pred = predict(
                make_input(
                    [HistoryEntry(*h) for h in session.history],
                    context,
                    session.config.predictor_window,
                ),
                session.backend,
            )
            d_ind = session.indicator.reliance
            if session.config.aid_mode == AID_MYOPIC or d_ind == 1:
                suggestion = cap.optimal_option
            else:
                suggestion = pred.point
            agreement = AGREE if req.selection == suggestion else DISAGREE
            session.pending = {
                "initial_selection": req.selection,
                "predicted_selection": pred.point,
                "suggestion": suggestion,
                "optimal_option": cap.optimal_option,
                "capability": cap.capability,
                "agreement": agreement,
                "reliance_indicated": d_ind,
                "context": context,
            }
            session.state = STATE_AWAITING_FINAL
            return {
                "session_id": session.id,
                "state": session.state,
                "suggestion": suggestion,
                "agrees": agreement == AGREE,
                "reliance_indicated": d_ind,
            }

    @app.post("/api/sessions/{session_id}/final")
    def post_final(session_id: str, req: SelectionRequest):
        session = store.get(session_id)
        if req.selection not in VALID_SELECTIONS:
            raise HTTPException(status_code=422, detail="selection must be A or B")
        with session.lock:
            if session.state != STATE_AWAITING_FINAL:
                raise HTTPException(
                    status_code=409,
                    detail=f"session is {session.state}, expected {STATE_AWAITING_FINAL}",
                )
            pending = session.pending
            h_i = pending["initial_selection"]
            a_i = pending["suggestion"]
            final = req.selection

            # Infer reliance from the keep-or-switch choice. When the
            # suggestion already agreed with the pick the choice reveals
            # nothing, so d falls back to the indicator and the trial is
            # flagged ambiguous (and excluded from ABC observed data).
            ambiguous = False
            if h_i != a_i:
                d = 1 if final == a_i else 0
            elif final == h_i:
                d = pending["reliance_indicated"]
                ambiguous = True
            else:
                d = 0

            game = session.current_game
            outcome = sample_trial_outcome(game, session.rng)
            payoff = outcome.payoff_for(final)
            foregone = outcome.foregone_for(final)
            rho = performance_metric(
                pending["reliance_indicated"], d, a_i, h_i)

            if not ambiguous:
                session.abc_log.append(d, pending["agreement"], pending["capability"])
            session.indicator.step(pending["capability"], pending["agreement"])
            session.history.append((final, payoff, foregone))
            session.cumulative_reward += payoff

            record = {
                "schema_version": TRANSCRIPT_SCHEMA_VERSION,
                "session_id": session.id,
                "game_id": game.id,
                "game_index": session.game_index,
                "trial": session.trial,
                "initial_selection": h_i,
                "predicted_selection": pending["predicted_selection"],
                "suggestion": a_i,
                "optimal_option": pending["optimal_option"],
                "agreement": pending["agreement"],
                "reliance": d,
                "reliance_indicated": pending["reliance_indicated"],
                "ambiguous_reliance": ambiguous,
                "final_selection": final,
                "payoff": payoff,
                "foregone": foregone,
                "capability": pending["capability"],
                "rho": rho,
            }
            # persist before the response reveals the payoff
            _persist_trial(session, record)
            session.records.append(record)
            session.pending = None

            # advance the cursor
            session.trial += 1
            game_finished = session.trial >= session.config.trials_per_game
            session_finished = False
            if game_finished:
                session.trial = 0
                session.game_index += 1
                session.history = []
                games_done = session.game_index
                if (games_done % session.config.abc_update_interval_games == 0
                        and games_done < session.config.games_per_operator
                        and len(session.abc_log) > 0):
                    posterior = abc_rejection(
                        session.abc_log, session.config.priors,
                        session.config.abc, session.rng,
                        template=session.indicator.params,
                    )
                    session.indicator.install(point_estimate(posterior))
                    session.abc_update_games.append(games_done)
                if session.game_index >= session.config.games_per_operator:
                    session.state = STATE_FINISHED
                    session_finished = True
            if not session_finished:
                session.state = STATE_AWAITING_INITIAL

            response = {
                "session_id": session.id,
                "state": session.state,
                "payoff": payoff,
                "foregone": foregone,
                "trial_summary": record,
                "cumulative_reward": session.cumulative_reward,
            }
            if session_finished:
                mean_rho = float(np.mean([r["rho"] for r in session.records]))
                response["session_summary"] = {
                    "trials": len(session.records),
                    "cumulative_reward": session.cumulative_reward,
                    "mean_rho": mean_rho,
                }
            else:
                response["next"] = _game_payload(
                    session.current_game, session.game_index, session.trial)
            return response

    @app.get("/api/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "session_id": session.id,
                "schema_version": TRANSCRIPT_SCHEMA_VERSION,
                "records": list(session.records),
            }

    return app
