"""Machine-readable run reports: canonical JSON plus RFC-4180 CSV traces.

Reports are reproducible: identical config and seed give byte-identical
files up to the run-clock fields (timestamp, wall time, worker count),
which live under fixed keys so comparisons can strip them.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ENGINE_VERSION = "0.1.0"

# run-clock fields excluded from determinism comparisons
VOLATILE_KEYS = frozenset({"timestamp", "wall_time_s", "jobs"})

FLOAT_FMT = "%.17g"


def jsonify(obj):
    """Convert report payloads to plain JSON types.

    Complex numbers become [re, im] pairs; arrays become (nested) lists;
    dataclasses become dicts.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [jsonify(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonify(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(x) for x in obj]
    return repr(obj)


def make_report(command: str, config_echo: dict, results: dict, *, seed: int, jobs: int, wall_time_s: float) -> dict:
    return {
        "schema": "heisenframe-report-v1",
        "engine_version": ENGINE_VERSION,
        "command": command,
        "config": jsonify(config_echo),
        "seed": int(seed),
        "results": jsonify(results),
        "jobs": int(jobs),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "wall_time_s": float(wall_time_s),
    }


def canonical_dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(canonical_dumps(report), encoding="utf-8")


def strip_volatile(obj):
    """Recursively drop run-clock keys for determinism comparisons."""
    if isinstance(obj, dict):
        return {k: strip_volatile(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, list):
        return [strip_volatile(x) for x in obj]
    return obj


def reports_equal(path_a, path_b) -> bool:
    """Byte-identical up to the volatile run-clock fields."""
    a = json.loads(Path(path_a).read_text(encoding="utf-8"))
    b = json.loads(Path(path_b).read_text(encoding="utf-8"))
    return canonical_dumps(strip_volatile(a)) == canonical_dumps(strip_volatile(b))


def _format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return FLOAT_FMT % x.real + ("+" if x.imag >= 0 else "-") + (FLOAT_FMT % abs(x.imag)) + "j"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """RFC-4180 CSV with a header row; floats carry 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(x) for x in row])
