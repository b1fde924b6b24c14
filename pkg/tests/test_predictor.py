"""Tests for selection predictors, evaluation causality, and the external bridge."""
import sys
import textwrap

import pytest

from adasim.games import ContextVector, TrialRecordRow
from adasim.predictor import (
    BridgeProtocolError,
    BridgeTransportError,
    ExternalBridge,
    FrequencyBackend,
    HistoryEntry,
    Prediction,
    PredictionInput,
    StickyBackend,
    UniformBackend,
    evaluate_predictor,
    make_backend,
    make_input,
    predict,
)

CTX = ContextVector(values=(0.75, 0.0, 0.25, 1.0, 0.0, 0.20))


def entry(sel, payoff=1.0, foregone=0.0):
    return HistoryEntry(sel, payoff, foregone)


class TestPrediction:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            Prediction(0.6, 0.6)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Prediction(1.5, -0.5)

    def test_point_tie_break_is_a(self):
        assert Prediction(0.5, 0.5).point == "A"

    def test_point_argmax(self):
        assert Prediction(0.1, 0.9).point == "B"


class TestWindow:
    def test_make_input_trims_to_window(self):
        hist = [entry("A")] * 9
        inp = make_input(hist, CTX, window=5)
        assert len(inp.history) == 5

    def test_overlong_history_rejected(self):
        with pytest.raises(ValueError):
            PredictionInput(history=tuple([entry("A")] * 6), context=CTX, window=5)


class TestBuiltinBackends:
    def test_uniform(self):
        pred = predict(make_input([entry("B")] * 3, CTX), UniformBackend())
        assert pred.prob_a == 0.5

    def test_sticky_cold_start(self):
        assert predict(make_input([], CTX), StickyBackend()).prob_a == 0.5

    def test_sticky_follows_last(self):
        hist = [entry("A"), entry("B")]
        assert predict(make_input(hist, CTX), StickyBackend()).point == "B"

    def test_frequency_plain_counts(self):
        hist = [entry("A"), entry("A"), entry("B"), entry("A")]
        pred = predict(make_input(hist, CTX), FrequencyBackend(decay=1.0))
        assert pred.prob_a == pytest.approx(0.75)

    def test_frequency_decay_weights_recent(self):
        # window B,B,A with decay 0.5: weights (newest first) A=1, B=0.5+0.25
        hist = [entry("B"), entry("B"), entry("A")]
        pred = predict(make_input(hist, CTX), FrequencyBackend(decay=0.5))
        assert pred.prob_a == pytest.approx(1.0 / 1.75)

    def test_frequency_rejects_bad_decay(self):
        with pytest.raises(ValueError):
            FrequencyBackend(decay=0.0)

    def test_make_backend_unknown(self):
        with pytest.raises(ValueError, match="unknown predictor backend"):
            make_backend("oracle")

    def test_make_backend_kwargs(self):
        backend = make_backend("frequency", decay=0.9)
        assert backend.decay == 0.9


class _RecordingBackend:
    """Instrumentation backend asserting causality of evaluation inputs."""

    def __init__(self):
        self.seen = []

    def predict(self, inp):
        self.seen.append(inp)
        return Prediction(1.0, 0.0)


def rows_for(participant, game_id, selections):
    return [
        TrialRecordRow(participant, game_id, t, 3, 0, 0.25, 4, 0, 0.2, sel, 1.0, 0.0)
        for t, sel in enumerate(selections)
    ]


class TestEvaluatePredictor:
    def test_always_a_accuracy(self):
        trials = rows_for("p1", "g0", ["A", "A", "B", "A"])
        backend = _RecordingBackend()  # always predicts A
        assert evaluate_predictor(backend, trials) == pytest.approx(0.75)

    def test_causality_no_lookahead(self):
        trials = rows_for("p1", "g0", ["A", "B", "A", "B", "A", "B", "A"])
        backend = _RecordingBackend()
        evaluate_predictor(backend, trials, window=3)
        # prediction t sees exactly min(t, window) prior selections
        for t, inp in enumerate(backend.seen):
            assert len(inp.history) == min(t, 3)
            expected = tuple(r.selection for r in trials[max(0, t - 3):t])
            assert tuple(e.selection for e in inp.history) == expected

    def test_groups_isolate_history(self):
        trials = rows_for("p1", "g0", ["A", "A"]) + rows_for("p1", "g1", ["B", "B"])
        backend = _RecordingBackend()
        evaluate_predictor(backend, trials)
        assert len(backend.seen[2].history) == 0  # fresh window per game

    def test_sticky_on_alternating_picks(self):
        trials = rows_for("p1", "g0", ["A", "B", "A", "B", "A"])
        # sticky always predicts the previous pick: wrong after the first trial
        acc = evaluate_predictor(StickyBackend(), trials)
        assert acc == pytest.approx(1.0 / 5.0)

    def test_out_of_order_rows_rejected(self):
        trials = rows_for("p1", "g0", ["A", "B"])
        trials = [trials[1], trials[0]]
        with pytest.raises(ValueError, match="chronological"):
            evaluate_predictor(StickyBackend(), trials)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            evaluate_predictor(StickyBackend(), [])


# -- External bridge ---------------------------------------------------------

GOOD_CHILD = textwrap.dedent("""
    import json, sys
    print(json.dumps({"proto": "pred-v1"}), flush=True)
    for line in sys.stdin:
        req = json.loads(line)
        n = len(req["history"])
        a = sum(1 for e in req["history"] if e["sel"] == "A")
        pa = 0.5 if n == 0 else a / n
        print(json.dumps({"prob_a": pa, "prob_b": 1 - pa}), flush=True)
""")

BAD_HANDSHAKE_CHILD = 'print(\'{"proto": "pred-v0"}\', flush=True)\n'

BAD_SUM_CHILD = textwrap.dedent("""
    import json, sys
    print(json.dumps({"proto": "pred-v1"}), flush=True)
    for line in sys.stdin:
        print(json.dumps({"prob_a": 0.9, "prob_b": 0.9}), flush=True)
""")

GARBAGE_CHILD = textwrap.dedent("""
    import json, sys
    print(json.dumps({"proto": "pred-v1"}), flush=True)
    for line in sys.stdin:
        print("not json", flush=True)
""")

SILENT_CHILD = textwrap.dedent("""
    import json, sys, time
    print(json.dumps({"proto": "pred-v1"}), flush=True)
    for line in sys.stdin:
        time.sleep(10)
""")

DYING_CHILD = textwrap.dedent("""
    import json
    print(json.dumps({"proto": "pred-v1"}), flush=True)
""")


def bridge_for(tmp_path, source, timeout=2.0):
    script = tmp_path / "child.py"
    script.write_text(source)
    return ExternalBridge([sys.executable, str(script)], timeout=timeout)


class TestExternalBridge:
    def test_round_trip(self, tmp_path):
        with bridge_for(tmp_path, GOOD_CHILD) as bridge:
            hist = [entry("A"), entry("A"), entry("B")]
            pred = predict(make_input(hist, CTX), bridge)
            assert pred.prob_a == pytest.approx(2.0 / 3.0)
            # a second request over the same pipe
            assert predict(make_input([], CTX), bridge).prob_a == 0.5

    def test_bad_handshake_is_protocol_error(self, tmp_path):
        with pytest.raises(BridgeProtocolError, match="protocol"):
            bridge_for(tmp_path, BAD_HANDSHAKE_CHILD)

    def test_bad_sum_is_protocol_error(self, tmp_path):
        with bridge_for(tmp_path, BAD_SUM_CHILD) as bridge:
            with pytest.raises(BridgeProtocolError) as err:
                bridge.predict(make_input([], CTX))
            assert "prob_a" in err.value.raw

    def test_garbage_is_protocol_error(self, tmp_path):
        with bridge_for(tmp_path, GARBAGE_CHILD) as bridge:
            with pytest.raises(BridgeProtocolError, match="unparseable"):
                bridge.predict(make_input([], CTX))

    def test_timeout_is_transport_error(self, tmp_path):
        with bridge_for(tmp_path, SILENT_CHILD, timeout=0.3) as bridge:
            with pytest.raises(BridgeTransportError, match="no response"):
                bridge.predict(make_input([], CTX))

    def test_dead_child_is_transport_error(self, tmp_path):
        with bridge_for(tmp_path, DYING_CHILD) as bridge:
            bridge._proc.wait(timeout=5)
            with pytest.raises(BridgeTransportError):
                bridge.predict(make_input([], CTX))

    def test_unlaunchable_child_is_transport_error(self):
        with pytest.raises(BridgeTransportError, match="launch"):
            ExternalBridge(["/nonexistent/predictor-binary"])
