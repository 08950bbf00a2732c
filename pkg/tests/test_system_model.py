from fractions import Fraction

import numpy as np
import pytest

from quantinv.exceptions import (
    IndexOutOfRange,
    InvalidSystem,
    RankDeficientOutputMap,
    SingularDynamics,
)
from quantinv.system_model import (
    AffineIFS,
    QuantizedSystem,
    build_difference,
    build_doubled,
    build_inverse,
    canonicalize,
    quantized_output,
    simulate,
    step,
)


def _V(sys):
    return sorted(v[0] for v in build_difference(sys).diff_alphabet)


# -- construction ----------------------------------------------------------

def test_alphabet_deduplicated_exactly():
    s = QuantizedSystem([[0.5]], [[1]], [0, 1, 1, "1/1", 0.5], 1)
    assert s.alphabet == ((Fraction(0),), (Fraction(1),), (Fraction(1, 2),))


@pytest.mark.parametrize("kwargs", [
    dict(A=[[1, 2]], B=[[1]], alphabet=[0], p=1),
    dict(A=[[1]], B=[[1]], alphabet=[], p=1),
    dict(A=[[1]], B=[[1]], alphabet=[0], p=2),
    dict(A=[[1]], B=[[1]], alphabet=[0], p=1, delta=0),
    dict(A=[[1]], B=[[1]], alphabet=[(0, 1)], p=1),
])
def test_invalid_systems_rejected(kwargs):
    with pytest.raises(InvalidSystem):
        QuantizedSystem(**kwargs)


def test_exact_entries_kept():
    s = QuantizedSystem([["1/2", 0], [0, "1/3"]], [[1], [2]], [0, 1], 1)
    assert s.A_exact[1][1] == Fraction(1, 3)
    assert QuantizedSystem([[0.5]], [[1]], [0], 1).A_exact is None


# -- canonicalize ----------------------------------------------------------

def test_canonicalize_identity_when_canonical():
    s = QuantizedSystem([[0.5, 1], [0, 0.25]], [[1], [0]], [0, 1], 1)
    c = canonicalize(s)
    assert np.array_equal(c.transform, np.eye(2))
    assert np.array_equal(c.A, s.A) and np.array_equal(c.B, s.B)
    assert c.alphabet == s.alphabet


def test_canonicalize_scalar_rescaling_matches_outputs():
    raw = QuantizedSystem([[2]], [[1]], [0, 1], 1, delta=3, C=[[3]])
    c = canonicalize(raw)
    assert c.A[0, 0] == pytest.approx(2.0)
    assert c.B[0, 0] == pytest.approx(1.0)        # C / delta = 1
    rng = np.random.default_rng(7)
    for _ in range(10):
        x0 = rng.uniform(-1, 1, 1)
        word = rng.integers(0, 2, 20).tolist()
        _, y_raw = simulate(raw, x0, word)
        _, y_can = simulate(c, c.transform @ x0, word)
        assert np.array_equal(y_raw, y_can)


def test_canonicalize_random_outputs_agree():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d, p = 3, 2
        A = rng.uniform(-0.9, 0.9, (d, d))
        raw = QuantizedSystem(A, rng.uniform(-1, 1, (d, 1)), [0, 1, -1], p,
                              delta=Fraction(1, 2), C=rng.uniform(-1, 1, (p, d)))
        c = canonicalize(raw)
        x0 = rng.uniform(-2, 2, d)
        word = rng.integers(0, 3, 50).tolist()
        xs_raw, y_raw = simulate(raw, x0, word)
        xs_can, y_can = simulate(c, c.transform @ x0, word)
        # outputs agree except where rounding puts a state on a cell edge
        z = (np.asarray(raw.C) @ xs_raw.T).T / float(raw.delta)
        safe = np.all(np.abs(z - np.round(z)) > 1e-9, axis=1)
        assert np.array_equal(y_raw[safe], y_can[safe])


def test_canonicalize_zero_row_rejected():
    raw = QuantizedSystem([[0.5, 0], [0, 0.5]], [[1], [0]], [0, 1], 1, C=[[0, 0]])
    with pytest.raises(RankDeficientOutputMap):
        canonicalize(raw)


# -- difference / doubled / inverse ----------------------------------------

@pytest.mark.parametrize("U, V", [
    ([0, 1], [-1, 0, 1]),
    ([0, 1, -1, 2], [-3, -2, -1, 0, 1, 2, 3]),
    ([-1, 0, 1], [-2, -1, 0, 1, 2]),
])
def test_difference_alphabet(U, V):
    s = QuantizedSystem([[0.5]], [[1]], U, 1)
    assert _V(s) == V


def test_difference_symmetric_and_odd():
    s = QuantizedSystem([[0.5]], [[1]], ["1/3", 2, "-7/5"], 1)
    V = _V(s)
    assert set(V) == {-v for v in V}
    assert len(V) % 2 == 1 and Fraction(0) in V
    assert len(V) <= len(s.alphabet) ** 2


def test_doubled_block_structure():
    s = QuantizedSystem([[0.5, 1], [0, 0.25]], [[1], [2]], [0, 1], 1)
    dbl = build_doubled(s)
    assert np.array_equal(dbl.A2[:2, 2:], np.zeros((2, 2)))
    assert np.array_equal(dbl.A2[2:, :2], np.zeros((2, 2)))
    assert np.array_equal(dbl.A2[:2, :2], s.A) and np.array_equal(dbl.A2[2:, 2:], s.A)
    assert len(dbl.pairs) == 4


def test_inverse_scalar():
    inv = build_inverse(AffineIFS([([[2.0]], [1.0])]))
    M, c = inv.maps[0]
    assert M[0, 0] == 0.5 and c[0] == -0.5


def test_inverse_example1_maps(ex1):
    sys, _ = ex1
    diff = build_difference(sys)
    inv = build_inverse(diff.ifs())
    Ainv = np.linalg.inv(sys.A)
    for (M, c), v in zip(inv.maps, diff.diff_alphabet):
        assert np.allclose(M, Ainv)
        assert np.allclose(c, -Ainv @ (sys.B[:, 0] * float(v[0])))
    assert sorted(v[0] for v in diff.diff_alphabet) == [-3, -2, -1, 0, 1, 2, 3]


def test_inverse_singular():
    with pytest.raises(SingularDynamics):
        build_inverse(AffineIFS([([[0.0]], [1.0])]))


# -- step / output ---------------------------------------------------------

def test_step_examples():
    ifs = QuantizedSystem([[0.5]], [[1]], [0, 1], 1).ifs()
    assert step(ifs, [0.0], 1)[0] == 1.0
    diff = build_difference(QuantizedSystem([["1/2"]], [[1]], [-1, 0, 1], 1))
    idx = [v[0] for v in diff.diff_alphabet].index(-1)
    assert step(diff.ifs(), [2 / 3], idx)[0] == pytest.approx(-2 / 3, abs=1e-15)


def test_step_index_out_of_range():
    ifs = QuantizedSystem([[0.5]], [[1]], [0, 1], 1).ifs()
    with pytest.raises(IndexOutOfRange):
        step(ifs, [0.0], 2)
    with pytest.raises(IndexOutOfRange):
        step(ifs, [0.0], -1)


def test_step_inverse_round_trip_3d():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    s = QuantizedSystem(A, rng.normal(size=(3, 1)), [0, 1, -2], 1)
    f, g = s.ifs(), build_inverse(s.ifs())
    for _ in range(1000):
        x = rng.uniform(-10, 10, 3)
        i = int(rng.integers(0, 3))
        assert np.max(np.abs(step(g, step(f, x, i), i) - x)) <= 1e-10


@pytest.mark.parametrize("x, p, y", [
    ((0.5, -3.2), 1, (0,)),
    ((-0.5,), 1, (-1,)),
    ((1.999, 7.0), 2, (1, 7)),
    ((1.0, 0.0), 1, (1,)),
])
def test_quantized_output(x, p, y):
    s = QuantizedSystem(np.eye(len(x)) * 0.5, np.ones((len(x), 1)), [0], p)
    assert tuple(quantized_output(s, x)) == y
