"""Next-selection predictors over a sliding window of recent picks.

Backends consume the last k selections (with payoffs and foregone payoffs)
plus the game context and emit a distribution over {A, B}. Deterministic
baselines keep the simulator self-contained; the line-JSON bridge lets an
externally trained model plug in as a child process.
"""
from __future__ import annotations

import json
import selectors
import subprocess
from dataclasses import dataclass

from .games import SELECTION_A, SELECTION_B, ContextVector, group_trials

DEFAULT_WINDOW = 5
BRIDGE_PROTO = "pred-v1"


class BridgeError(RuntimeError):
    """Base class for external-predictor failures."""


class BridgeTransportError(BridgeError):
    """Child process unreachable, dead, or silent past the timeout."""


class BridgeProtocolError(BridgeError):
    """Child responded, but the payload violates the bridge schema."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class HistoryEntry:
    selection: str
    payoff: float
    foregone: float


@dataclass(frozen=True)
class PredictionInput:
    """Sliding window of recent trials plus the game context."""

    history: tuple
    context: ContextVector
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if len(self.history) > self.window:
            raise ValueError(
                f"history length {len(self.history)} exceeds window {self.window}"
            )


@dataclass(frozen=True)
class Prediction:
    prob_a: float
    prob_b: float

    def __post_init__(self):
        if abs(self.prob_a + self.prob_b - 1.0) > 1e-9:
            raise ValueError(
                f"probabilities must sum to 1 within 1e-9, got "
                f"{self.prob_a} + {self.prob_b}"
            )
        if self.prob_a < 0.0 or self.prob_b < 0.0:
            raise ValueError("probabilities must be non-negative")

    @property
    def point(self) -> str:
        # deterministic tie-break: A
        return SELECTION_A if self.prob_a >= self.prob_b else SELECTION_B


def make_input(history, context: ContextVector, window: int = DEFAULT_WINDOW) -> PredictionInput:
    """Trim history to the last ``window`` entries."""
    return PredictionInput(history=tuple(history[-window:]), context=context, window=window)


class UniformBackend:
    """Always 50/50; the cold-start floor every other backend falls back to."""

    name = "uniform"

    def predict(self, inp: PredictionInput) -> Prediction:
        return Prediction(0.5, 0.5)


class StickyBackend:
    """Predicts the most recent selection with full confidence."""

    name = "sticky"

    def predict(self, inp: PredictionInput) -> Prediction:
        if not inp.history:
            return Prediction(0.5, 0.5)
        last = inp.history[-1].selection
        return Prediction(1.0, 0.0) if last == SELECTION_A else Prediction(0.0, 1.0)


class FrequencyBackend:
    """Recency-weighted selection frequencies within the window.

    decay=1.0 reduces to plain counting; decay<1 downweights older picks.
    """

    name = "frequency"

    def __init__(self, decay: float = 1.0):
        if not (0.0 < decay <= 1.0):
            raise ValueError(f"decay must be in (0,1], got {decay}")
        self.decay = decay

    def predict(self, inp: PredictionInput) -> Prediction:
        if not inp.history:
            return Prediction(0.5, 0.5)
        wa = wb = 0.0
        weight = 1.0
        for entry in reversed(inp.history):
            if entry.selection == SELECTION_A:
                wa += weight
            else:
                wb += weight
            weight *= self.decay
        total = wa + wb
        return Prediction(wa / total, wb / total)


BACKENDS = {
    "uniform": UniformBackend,
    "sticky": StickyBackend,
    "frequency": FrequencyBackend,
}


def make_backend(name: str, **kwargs):
    if name not in BACKENDS:
        raise ValueError(f"unknown predictor backend {name!r}; known: {sorted(BACKENDS)}")
    return BACKENDS[name](**kwargs)


def predict(inp: PredictionInput, backend) -> Prediction:
    """Run a backend and enforce the Prediction invariants."""
    pred = backend.predict(inp)
    if not isinstance(pred, Prediction):
        pred = Prediction(*pred)
    return pred


def evaluate_predictor(backend, trials, window: int = DEFAULT_WINDOW) -> float:
    """Causal point-prediction accuracy over grouped trial records.

    Predictions for trial t see only trials < t of the same participant-game
    group; groups must be chronological within themselves.
    """
    if not trials:
        raise ValueError("no trials to evaluate")
    from .games import Gamble, Game, PayoffBounds, make_context_vector

    games = [row.game() for row in trials]
    bounds = PayoffBounds.from_games(games)
    correct = 0
    total = 0
    for (_, _), rows in group_trials(trials).items():
        indices = [r.trial_index for r in rows]
        if indices != sorted(indices):
            raise ValueError("trials within a participant-game group must be chronological")
        context = make_context_vector(rows[0].game(), bounds)
        history: list = []
        for row in rows:
            pred = predict(make_input(history, context, window), backend)
            if pred.point == row.selection:
                correct += 1
            total += 1
            history.append(HistoryEntry(row.selection, row.payoff, row.foregone))
    return correct / total


class ExternalBridge:
    """Line-delimited JSON predictor living in a child process.

    The child prints a handshake line ``{"proto": "pred-v1"}`` on startup,
    then answers one request line with one response line. Requests carry the
    window history and the 6-float context; responses carry prob_a/prob_b.
    """

    name = "external"

    def __init__(self, argv, timeout: float = 1.0):
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BridgeTransportError(f"failed to launch predictor child: {exc}") from exc
        handshake = self._read_line()
        try:
            hello = json.loads(handshake)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"bad handshake: {exc}", raw=handshake)
        if hello.get("proto") != BRIDGE_PROTO:
            raise BridgeProtocolError(
                f"unexpected protocol {hello.get('proto')!r}", raw=handshake
            )

    def _read_line(self) -> str:
        stdout = self._proc.stdout
        sel = selectors.DefaultSelector()
        sel.register(stdout, selectors.EVENT_READ)
        ready = sel.select(self.timeout)
        sel.close()
        if not ready:
            raise BridgeTransportError(f"no response within {self.timeout}s")
        line = stdout.readline()
        if not line:
            raise BridgeTransportError("predictor child closed its stdout")
        return line

    def predict(self, inp: PredictionInput) -> Prediction:
        if self._proc.poll() is not None:
            raise BridgeTransportError("predictor child has exited")
        request = {
            "history": [
                {"sel": e.selection, "payoff": e.payoff, "foregone": e.foregone}
                for e in inp.history
            ],
            "context": [float(v) for v in inp.context.values],
        }
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeTransportError(f"write to predictor child failed: {exc}") from exc
        raw = self._read_line()
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"unparseable response: {exc}", raw=raw)
        if not isinstance(payload, dict) or "prob_a" not in payload or "prob_b" not in payload:
            raise BridgeProtocolError("response missing prob_a/prob_b", raw=raw)
        try:
            return Prediction(float(payload["prob_a"]), float(payload["prob_b"]))
        except (TypeError, ValueError) as exc:
            raise BridgeProtocolError(f"invalid probabilities: {exc}", raw=raw)

    def close(self):
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
