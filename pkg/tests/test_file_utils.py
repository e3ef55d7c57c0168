import json
import os

import numpy as np

from utils.file_utils import (dumps_deterministic, format_float, safe_filename, spectrum_csv_text, spin_filename,
                              write_csv, write_json)


def test_safe_filename_replaces_invalid_characters():
    assert safe_filename("a/b c?.json") == "a_b_c_.json"


def test_safe_filename_truncates_long_names():
    name = safe_filename("x" * 300 + ".csv")
    assert len(name) == 255
    assert name.endswith(".csv")


def test_spin_filename():
    assert spin_filename("spectrum", "0,1/2", "csv") == "spectrum_0_half.csv"
    assert spin_filename("spectrum", "1/2,1/2", "csv") == "spectrum_half_half.csv"


def test_format_float():
    assert format_float(0.0) == "0"
    assert format_float(-0.0) == "0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2"
    assert format_float(float("inf")) == "null"


def test_dumps_writes_floats_unquoted():
    text = dumps_deterministic({"residual": 0.1, "pass": True, "count": np.int64(3), "values": np.array([1.5])})
    assert '"residual": 0.10000000000000001' in text
    assert json.loads(text) == {"residual": 0.1, "pass": True, "count": 3, "values": [1.5]}
    assert text.endswith("\n")


def test_dumps_keeps_insertion_order():
    text = dumps_deterministic({"b": 1, "a": 2})
    assert text.index('"b"') < text.index('"a"')


def test_dumps_leaves_strings_alone():
    assert json.loads(dumps_deterministic({"note": "f: 1.0"})) == {"note": "f: 1.0"}


def test_write_json_creates_directory(tmp_path):
    path = write_json({"x": 1.0}, str(tmp_path / "nested"), "report.json")
    assert os.path.exists(path)
    with open(path, encoding="utf-8") as f:
        assert json.load(f) == {"x": 1.0}


def test_spectrum_csv_text():
    text = spectrum_csv_text([(-1.0, 4), (-0.0, 2), (1.4142135623730951, 4)])
    assert text.splitlines() == ["eigenvalue,multiplicity", "-1,4", "0,2", "1.4142135623730951,4"]


def test_write_csv(tmp_path):
    path = write_csv([(0.0, 2)], str(tmp_path), "spectrum_0_0.csv")
    with open(path, encoding="utf-8") as f:
        assert f.read() == "eigenvalue,multiplicity\n0,2\n"
