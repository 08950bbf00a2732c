from fractions import Fraction

from quantinv.polyhedral import WindowProblem, explore_language, periodic_orbit
from quantinv.system_model import QuantizedSystem, build_difference


def test_example2_language(ex2):
    sys, _ = ex2
    res = explore_language(build_difference(sys))
    assert res.status == "ULDI"
    assert res.steps_k == 1 and res.waiting_l == 1
    assert res.sizes == [3, 1] and res.exact


def test_example3_periodic_witness(ex3):
    sys, _ = ex3
    diff = build_difference(sys)
    res = explore_language(diff)
    assert res.status == "NotULDI"
    labels = [diff.diff_alphabet[s][0] for s in res.witness_word]
    assert sorted(labels) == [-1, 1]
    assert sorted(z[0] for z in res.witness_orbit) == [Fraction(-2, 3), Fraction(2, 3)]


def test_periodic_orbit_outside_strip_rejected():
    diff = build_difference(QuantizedSystem([["1/2"]], [[1]], [0, 1], 1))
    prob = WindowProblem(diff)
    plus = [v[0] for v in diff.diff_alphabet].index(1)
    # constant input +1 has fixed point 2, outside the strip
    assert periodic_orbit(prob, (plus,)) is None


def test_budget_gives_inconclusive(ex3):
    sys, _ = ex3
    res = explore_language(build_difference(sys), budget=2)
    assert res.status == "Inconclusive" and "budget" in res.reason


def test_large_inputs_give_uldi_immediately():
    res = explore_language(build_difference(QuantizedSystem([["1/2"]], [[1]], [0, 3], 1)))
    assert res.status == "ULDI" and res.steps_k == 1 and res.waiting_l == 0
