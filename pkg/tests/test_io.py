import json
import math

import numpy as np

from rank1sense import make_ground_truth, sample_ensemble
from rank1sense.io import (
    csv_text,
    dump_regression,
    ensemble_from_dict,
    ensemble_to_dict,
    format_float,
    ground_truth_from_dict,
    ground_truth_to_dict,
    load_json,
    load_regression,
    save_json,
)


def test_format_float_roundtrips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, 123456789.123456789):
        assert float(format_float(x)) == x
    assert format_float(math.nan) == "nan"
    assert format_float(-math.inf) == "-inf"
    assert format_float(np.int64(3)) == "3"
    assert format_float(True) == "true"
    assert format_float(None) == ""


def test_truth_and_ensemble_roundtrip(tmp_path):
    G = make_ground_truth(5, 2, 3.0, seed=2)
    E = sample_ensemble(5, 7, seed=2, block=3)
    save_json({"truth": ground_truth_to_dict(G), "ens": ensemble_to_dict(E)}, tmp_path / "a.json")
    data = load_json(tmp_path / "a.json")
    G2, E2 = ground_truth_from_dict(data["truth"]), ensemble_from_dict(data["ens"])
    np.testing.assert_array_equal(G2.W, G.W)
    np.testing.assert_array_equal(E2.X, E.X)
    assert E2.block == 3 and G2.seed == 2


def test_json_nonfinite_is_standard(tmp_path):
    save_json({"x": math.nan, "y": [math.inf]}, tmp_path / "b.json")
    text = (tmp_path / "b.json").read_text()
    assert json.loads(text) == {"x": "nan", "y": ["inf"]}


def test_csv_echo_and_order():
    text = csv_text([{"a": 1, "b": 0.5}, {"a": 2, "b": math.nan}], ["b", "a"], echo={"z": 1, "seed": 4})
    lines = text.splitlines()
    assert lines[0] == '# config: {"seed": 4, "z": 1}'
    assert lines[1:] == ["b,a", "0.5,1", "nan,2"]


def test_regression_dump(tmp_path, rng):
    M, b, v = rng.standard_normal((4, 2)), rng.standard_normal(4), rng.standard_normal(2)
    dump_regression(tmp_path / "p.npz", M, b, v)
    for got, want in zip(load_regression(tmp_path / "p.npz"), (M, b, v)):
        np.testing.assert_array_equal(got, want)
