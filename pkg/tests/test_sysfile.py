from fractions import Fraction
import math

import numpy as np
import pytest

from quantinv.exceptions import SystemFileError
from quantinv.sysfile import dump_system, load_system, parse_number, parse_system

EX2 = """\
name: example-2
A:
  - [2, 0, 0]
  - [0, 1/2, 1]
  - [0, 0, 1/3]
B: [[2], [3], [6]]
alphabet: [0, 1]
p: 2
"""


def test_parse_example2_exact():
    sys, meta = parse_system(EX2)
    assert meta["name"] == "example-2"
    assert sys.A_exact[2][2] == Fraction(1, 3)
    assert sys.dim_d == 3 and sys.p == 2
    assert [u[0] for u in sys.alphabet] == [0, 1]
    assert meta["assume"] == {"algebraically_independent": False, "transcendental": False}


def test_expressions_and_assumptions(ex1):
    sys, meta = ex1
    assert sys.A[0, 0] == math.exp(math.sqrt(5))
    assert sys.A_exact is None
    assert meta["assume"]["algebraically_independent"] is True


@pytest.mark.parametrize("text, value", [
    ("3", 3.0), ("-1/4", -0.25), ("2.5e-1", 0.25), ("exp(1)", math.e), ("2*pi", 2 * math.pi),
    ("sqrt(2)/2", math.sqrt(2) / 2),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


def test_parse_number_exact():
    assert parse_number("1/3", exact=True) == Fraction(1, 3)
    assert parse_number("0.1", exact=True) == Fraction(1, 10)


@pytest.mark.parametrize("text, line, fragment", [
    ("A:\n  - [1, 2]\n  - [3]\nB: [[1], [1]]\nalphabet: [0]\np: 1\n", 3, "ragged"),
    ("A: [[1]]\nB: [[1]]\nalphabet: [0]\np: 1\ncolour: red\n", 5, "unknown key"),
    ("A: [[1]]\nB: [[1]]\nalphabet: [0]\n", 1, "missing required key 'p'"),
    ("A: [[1]]\nB: [[1]]\nalphabet: [0]\np: one\n", 4, "p: expected"),
    ("A: [[__import__('os')]]\nB: [[1]]\nalphabet: [0]\np: 1\n", 1, "A"),
    ("A: [[1, 2]\nB: [[1]]\n", 2, "invalid YAML"),
    ("A: [[1]]\nB: [[1]]\nalphabet: []\np: 1\n", 3, "alphabet"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(SystemFileError) as info:
        parse_system(text, "sys.txt")
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"sys.txt:{line}:")


def test_missing_file(tmp_path):
    with pytest.raises(SystemFileError):
        load_system(tmp_path / "nope.sys")


def test_dump_round_trip():
    sys, meta = parse_system(EX2)
    again, _ = parse_system(dump_system(sys, "example-2"))
    assert again.A_exact == sys.A_exact and again.B_exact == sys.B_exact
    assert again.alphabet == sys.alphabet and again.p == sys.p


def test_dump_round_trip_floats_and_output_map():
    rng = np.random.default_rng(0)
    from quantinv.system_model import QuantizedSystem
    sys = QuantizedSystem(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)), [(0, 1), ("1/2", -3)], 1,
                          delta=Fraction(1, 4), C=[[1.5, -0.5]])
    again, _ = parse_system(dump_system(sys, assume={"transcendental": True}))
    assert np.array_equal(again.A, sys.A) and np.array_equal(again.C, sys.C)
    assert again.alphabet == sys.alphabet and again.delta == sys.delta


def test_bundled_files_parse():
    from tests.conftest import DATA
    names = sorted(p.name for p in DATA.glob("*.sys"))
    assert names == ["ex1.sys", "ex2.sys", "ex3.sys", "tight-boundary.sys"]
    for n in names:
        load_system(DATA / n)
