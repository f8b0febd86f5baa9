import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternlab.errors import InputFormatError
from patternlab.groups import GroupDescriptor
from patternlab.io import (
    parse_group,
    read_adjacency,
    read_function,
    read_set,
    read_system,
    write_csv,
    write_plad,
    write_set,
    write_system,
)
from patternlab.linear_systems import ap_system
from patternlab.report import build_report, dumps, load_report, parse_rational, rational, strip_timing, write_report


def test_set_round_trip_with_comments(tmp_path):
    g = GroupDescriptor.parse("Z3xZ4")
    p = tmp_path / "A.txt"
    p.write_text("# a comment\n\n0,1\n2,3 \n")
    mask = read_set(p, g)
    assert mask.sum() == 2 and mask[g.index_of([2, 3])]
    write_set(tmp_path / "B.txt", g, mask)
    assert np.array_equal(read_set(tmp_path / "B.txt", g), mask)


def test_function_default_value(tmp_path):
    g = GroupDescriptor.cyclic(5)
    p = tmp_path / "f.txt"
    p.write_text("1\n3,0.25\n")
    vals = read_function(p, g)
    assert vals[1] == 1 and vals[3] == 0.25 and vals.sum() == 1.25


@pytest.mark.parametrize(
    "text, line",
    [("0\nx\n", 2), ("0\n1,1\n", 2)],
)
def test_set_errors_name_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(InputFormatError) as exc:
        read_set(p, GroupDescriptor.cyclic(7))
    assert f"bad.txt:{line}:" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(InputFormatError, match="file not found"):
        read_set(tmp_path / "nope.txt", GroupDescriptor.cyclic(3))


def test_system_round_trip(tmp_path):
    s = ap_system(4)
    write_system(tmp_path / "s.lsys", s)
    assert read_system(tmp_path / "s.lsys").rows() == s.rows()
    (tmp_path / "bad.lsys").write_text("1 2\n")
    with pytest.raises(InputFormatError, match="bad.lsys:1"):
        read_system(tmp_path / "bad.lsys")


def test_bad_group():
    with pytest.raises(InputFormatError):
        parse_group("Q7")


@given(rows=st.integers(1, 20), cols=st.integers(1, 20), packed=st.booleans(), seed=st.integers(0, 2**32 - 1))
def test_adjacency_formats_round_trip(tmp_path_factory, rows, cols, packed, seed):
    d = tmp_path_factory.mktemp("adj")
    t = (np.random.default_rng(seed).random((rows, cols)) < 0.5).astype(np.uint8)
    write_plad(d / "t.plad", t, packed=packed)
    write_csv(d / "t.csv", t)
    assert np.array_equal(read_adjacency(d / "t.plad"), t)
    assert np.array_equal(read_adjacency(d / "t.csv"), t)


def test_truncated_plad(tmp_path):
    write_plad(tmp_path / "t.plad", np.ones((8, 8), dtype=np.uint8))
    raw = (tmp_path / "t.plad").read_bytes()
    (tmp_path / "t.plad").write_bytes(raw[:-1])
    with pytest.raises(InputFormatError):
        read_adjacency(tmp_path / "t.plad")


def test_rationals_and_reports(tmp_path):
    assert parse_rational(rational(Fraction(3, 7))) == Fraction(3, 7)
    rep = build_report("x", {"a": np.int64(3)}, {"q": Fraction(1, 3), "inf": float("inf")}, [], "ok", {"seconds": 1.0})
    assert rep["results"]["q"] == {"num": 1, "den": 3, "float": 1 / 3}
    assert rep["results"]["inf"] == "inf"
    write_report(tmp_path / "r.json", rep)
    raw = (tmp_path / "r.json").read_bytes()
    assert b"\r\n" not in raw and raw == dumps(rep).encode()
    again = load_report(tmp_path / "r.json")
    assert strip_timing(again) == {k: v for k, v in rep.items() if k != "timing"}
    assert json.loads(dumps(rep)) == rep
