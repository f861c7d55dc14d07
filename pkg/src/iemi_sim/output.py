"""CSV time series and JSON summary files."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import SimResult, summarize_series
from .errors import ConfigError
from .scenario import scenario_to_dict

TIMESERIES_FILE = "timeseries.csv"
SUMMARY_FILE = "summary.json"


def _fmt(x) -> str:
    # repr() of a Python float is the shortest string that round-trips exactly
    return repr(float(x))


def write_timeseries(r: SimResult, path) -> Path:
    path = Path(path)
    names = list(r.series)
    columns = [r.series[n] for n in names]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*columns):
            writer.writerow([str(int(v)) if n == "attack_active" else _fmt(v) for n, v in zip(names, row)])
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = list(reader)
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    out = {}
    for i, n in enumerate(names):
        out[n] = data[:, i].astype(np.int64) if n == "attack_active" else data[:, i]
    return out


def summary_document(r: SimResult) -> dict:
    return {
        "scenario": scenario_to_dict(r.scenario),
        "summary": r.summary,
        "joule_heat_J": r.joule_heat,
        "events": [e.as_dict() for e in r.events],
    }


def emit_results(r: SimResult, directory) -> tuple[Path, Path]:
    """Write ``timeseries.csv`` and ``summary.json`` into ``directory``."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = write_timeseries(r, directory / TIMESERIES_FILE)
        json_path = directory / SUMMARY_FILE
        json_path.write_text(json.dumps(summary_document(r), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write results to {directory}: {exc}") from exc
    return csv_path, json_path


def recompute_windows(directory) -> list[dict]:
    """Window table rebuilt from ``timeseries.csv`` using the windows and guard in ``summary.json``."""
    directory = Path(directory)
    doc = json.loads((directory / SUMMARY_FILE).read_text(encoding="utf-8"))
    series = read_timeseries(directory / TIMESERIES_FILE)
    windows = [(w["label"], w["t0"], w["t1"]) for w in doc["summary"]["windows"]]
    edges = sorted({t for a in doc["scenario"].get("attacks", []) for t in a["window"]})
    return summarize_series(series, windows, edges, doc["summary"]["settling_guard_s"])
