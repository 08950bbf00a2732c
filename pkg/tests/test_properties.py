"""Randomised invariants over small jointly contractive systems."""

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from quantinv.analyzer import _fixed_point_witness, replay_witness
from quantinv.attractor import compute_attractor, hutchinson_step
from quantinv.exceptions import MarginalSpectrum
from quantinv.spectral import spectral_split
from quantinv.system_model import AffineIFS, QuantizedSystem, build_difference, build_inverse, step

LEVELS = {1: 5, 2: 3, 3: 2}
SETTINGS = dict(max_examples=1000, deadline=None, derandomize=True,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


@st.composite
def systems(draw):
    d = draw(st.integers(1, 3))
    entries = draw(st.lists(st.floats(-1, 1), min_size=d * d, max_size=d * d))
    A = np.array(entries).reshape(d, d)
    norm = draw(st.floats(0.2, 0.6))
    row = np.abs(A).sum(1).max()
    A = A * (norm / row) if row > 0 else np.eye(d) * norm
    B = np.array(draw(st.lists(st.floats(-0.5, 0.5), min_size=d, max_size=d))).reshape(d, 1)
    U = draw(st.sets(st.integers(-2, 2), min_size=1, max_size=4))
    return QuantizedSystem(A, B, sorted(U), 1)


@settings(**SETTINGS)
@given(systems())
def test_difference_attractor_invariants(sys):
    diff = build_difference(sys)
    ifs = diff.ifs()
    L = LEVELS[sys.dim_d]
    X = compute_attractor(ifs, L)
    # outer fixpoint: one more Hutchinson step stays inside the cover
    assert hutchinson_step(X.cover, ifs).issubset(X.cover)
    # refinement never grows the covered set
    assert compute_attractor(ifs, L + 1).cover.coarsen(L).issubset(X.cover)
    # difference alphabets are symmetric, so is the attractor
    assert X.cover.negate() == X.cover
    wit = _fixed_point_witness(diff)
    if wit is not None:
        assert replay_witness(diff, wit)


@settings(**SETTINGS)
@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_spectral_projections(d, seed):
    A = np.random.default_rng(seed).normal(size=(d, d))
    try:
        sp = spectral_split(A)
    except MarginalSpectrum:
        return
    scale = max(1.0, float(np.linalg.norm(A)))
    assert np.max(np.abs(sp.proj_Ec + sp.proj_Ee - np.eye(d))) <= 1e-9 * scale
    assert np.max(np.abs(sp.proj_Ec @ sp.proj_Ee)) <= 1e-9 * scale


@settings(**SETTINGS)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_inverse_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 3 * np.eye(d)
    ifs = AffineIFS([(A, rng.normal(size=d)), (A, rng.normal(size=d))])
    inv = build_inverse(ifs)
    x = rng.uniform(-10, 10, d)
    for i in range(2):
        assert np.max(np.abs(step(inv, step(ifs, x, i), i) - x)) <= 1e-10
