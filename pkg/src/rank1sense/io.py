"""Serialization for replaying experiments: JSON containers, CSV, and npz dumps."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .sensing import GroundTruth, MeasurementEnsemble

__all__ = [
    "format_float",
    "ground_truth_to_dict",
    "ground_truth_from_dict",
    "ensemble_to_dict",
    "ensemble_from_dict",
    "save_json",
    "load_json",
    "csv_text",
    "dump_regression",
    "load_regression",
]


def format_float(x):
    """17 significant digits, '.' decimal, locale independent."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no NaN/Inf; strings keep the file standard-conforming.
        if math.isnan(x) or math.isinf(x):
            return format_float(x)
        return x
    return obj


def ground_truth_to_dict(G):
    return {
        "d": G.d, "k": G.k, "seed": G.seed, "spectrum": G.spectrum_shape,
        "sigma": G.sigma.tolist(), "U": G.U.tolist(), "V": G.V.tolist(),
    }


def ground_truth_from_dict(data):
    return GroundTruth(
        np.array(data["U"]), np.array(data["sigma"]), np.array(data["V"]),
        data.get("seed"), data.get("spectrum", "geometric"),
    )


def ensemble_to_dict(E):
    return {
        "d": E.d, "m": E.m, "seed": E.seed, "block": E.block,
        "X": E.X.tolist(), "Y": E.Y.tolist(),
    }


def ensemble_from_dict(data):
    return MeasurementEnsemble(
        np.array(data["X"]), np.array(data["Y"]), data.get("seed"), data.get("block", 0)
    )


def save_json(obj, path):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def csv_text(rows, columns, echo=None):
    """CSV with an optional ``# config:`` echo line for replay."""
    buf = io.StringIO()
    if echo is not None:
        buf.write("# config: " + json.dumps(_jsonable(echo), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(row[c]) for c in columns])
    return buf.getvalue()


def dump_regression(path, M, b, v):
    """Store an ``(M, b, v)`` triple for offline solver debugging."""
    np.savez(path, M=M, b=b, v=v)


def load_regression(path):
    with np.load(path) as data:
        return data["M"], data["b"], data["v"]
