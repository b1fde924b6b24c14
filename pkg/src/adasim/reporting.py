"""Trace CSV export/import and aggregate JSON assembly."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .loop import InteractionRecord, MonteCarloResult

TRACE_CSV_HEADER = [
    "operator_index", "game_id", "game_index", "trial",
    "ctx_ha", "ctx_la", "ctx_pa", "ctx_hb", "ctx_lb", "ctx_pb",
    "initial_selection", "predicted_selection", "suggestion", "optimal_option",
    "agreement", "reliance", "reliance_indicated", "final_selection",
    "payoff", "foregone", "capability", "rho",
    "preference_true", "preference_ind",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(path, traces) -> None:
    """One row per trial across all operators; floats at full precision."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_CSV_HEADER)
        for op_idx, trace in enumerate(traces):
            for r in trace.records:
                writer.writerow([
                    op_idx, r.game_id, r.game_index, r.trial,
                    *[_fmt(v) for v in r.context],
                    r.initial_selection, r.predicted_selection,
                    r.suggestion, r.optimal_option,
                    r.agreement, r.reliance, r.reliance_indicated,
                    r.final_selection,
                    _fmt(r.payoff), _fmt(r.foregone), _fmt(r.capability),
                    r.rho, _fmt(r.preference_true), _fmt(r.preference_ind),
                ])


def read_trace_csv(path) -> list:
    """Parse an exported trace back into per-row dicts."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_CSV_HEADER:
            raise ValueError(f"{path}: unexpected trace header {reader.fieldnames!r}")
        for raw in reader:
            rows.append({
                "operator_index": int(raw["operator_index"]),
                "game_index": int(raw["game_index"]),
                "trial": int(raw["trial"]),
                "agreement": int(raw["agreement"]),
                "reliance": int(raw["reliance"]),
                "reliance_indicated": int(raw["reliance_indicated"]),
                "rho": int(raw["rho"]),
                "payoff": float(raw["payoff"]),
                "foregone": float(raw["foregone"]),
                "capability": float(raw["capability"]),
                "initial_selection": raw["initial_selection"],
                "suggestion": raw["suggestion"],
                "final_selection": raw["final_selection"],
            })
    return rows


def recompute_per_game_means(rows, n_operators: int, n_games: int):
    """Independent recomputation of per-game mean d and rho from raw rows."""
    d_sum = np.zeros((n_operators, n_games))
    rho_sum = np.zeros((n_operators, n_games))
    count = np.zeros((n_operators, n_games))
    for row in rows:
        i, g = row["operator_index"], row["game_index"]
        d_sum[i, g] += row["reliance"]
        rho_sum[i, g] += row["rho"]
        count[i, g] += 1
    per_op_d = d_sum / count
    per_op_rho = rho_sum / count
    return per_op_d.mean(axis=0), per_op_rho.mean(axis=0)


def write_aggregate_json(path, result: MonteCarloResult, extra: dict | None = None) -> None:
    payload = result.to_jsonable()
    if extra:
        payload.update(extra)
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def comparison_to_jsonable(cells) -> list:
    return [
        {
            "theta": c.theta,
            "s": c.s,
            "b2": c.b2,
            "mean_d_predictive": c.mean_d_predictive,
            "mean_d_myopic": c.mean_d_myopic,
            "percent_difference": c.percent_difference,
        }
        for c in cells
    ]


def write_comparison_csv(path, cells) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "s", "b2", "mean_d_predictive",
                         "mean_d_myopic", "percent_difference"])
        for c in cells:
            writer.writerow([
                _fmt(c.theta), _fmt(c.s), _fmt(c.b2),
                _fmt(c.mean_d_predictive), _fmt(c.mean_d_myopic),
                "undefined" if c.percent_difference is None else _fmt(c.percent_difference),
            ])
