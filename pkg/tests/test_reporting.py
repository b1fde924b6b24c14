"""Tests for trace CSV round-tripping and aggregate outputs."""
import json

import numpy as np
import pytest

from adasim.indicator import AbcConfig
from adasim.loop import ComparisonCell, SessionConfig, run_monte_carlo
from adasim.reporting import (
    TRACE_CSV_HEADER,
    comparison_to_jsonable,
    read_trace_csv,
    recompute_per_game_means,
    write_aggregate_json,
    write_comparison_csv,
    write_trace_csv,
)


@pytest.fixture(scope="module")
def small_result():
    config = SessionConfig(
        games_per_operator=3, trials_per_game=4, abc_update_interval_games=2,
        abc=AbcConfig(accepted_target=50, batch_size=1000, max_batches=2),
        master_seed=11,
    )
    return run_monte_carlo(config, 2)


class TestTraceCsv:
    def test_round_trip(self, small_result, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(path, small_result.traces)
        rows = read_trace_csv(path)
        assert len(rows) == 2 * 3 * 4
        first = small_result.traces[0].records[0]
        assert rows[0]["payoff"] == first.payoff
        assert rows[0]["capability"] == first.capability
        assert rows[0]["reliance"] == first.reliance
        assert rows[0]["final_selection"] == first.final_selection

    def test_header_written(self, small_result, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(path, small_result.traces)
        assert path.read_text().splitlines()[0] == ",".join(TRACE_CSV_HEADER)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            read_trace_csv(path)

    def test_recomputed_means_match_live_aggregation(self, small_result, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(path, small_result.traces)
        mean_d, mean_rho = recompute_per_game_means(read_trace_csv(path), 2, 3)
        assert np.allclose(mean_d, small_result.per_game_mean_d, atol=1e-12)
        assert np.allclose(mean_rho, small_result.per_game_mean_rho, atol=1e-12)


class TestAggregateJson:
    def test_file_is_valid_json_with_extras(self, small_result, tmp_path):
        path = tmp_path / "aggregate.json"
        write_aggregate_json(path, small_result, extra={"seed": 11})
        payload = json.loads(path.read_text())
        assert payload["seed"] == 11
        assert payload["n_operators"] == 2
        assert len(payload["per_game_mean_d"]) == 3


class TestComparisonOutputs:
    CELLS = [
        ComparisonCell(0.6, 0.5, 0.03, 0.5, 0.4, 25.0),
        ComparisonCell(0.7, 0.5, 0.03, 0.1, 0.0, None),
    ]

    def test_csv_marks_undefined_cells(self, tmp_path):
        path = tmp_path / "comparison.csv"
        write_comparison_csv(path, self.CELLS)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert lines[2].endswith(",undefined")
        assert lines[1].endswith(",25.0")

    def test_jsonable_preserves_none(self):
        payload = comparison_to_jsonable(self.CELLS)
        assert payload[0]["percent_difference"] == 25.0
        assert payload[1]["percent_difference"] is None
