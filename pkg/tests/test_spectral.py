import numpy as np
import pytest

from quantinv.exceptions import MarginalSpectrum, UnboundedTrap
from quantinv.spectral import invariant_subspace_in_kernel, spectral_split, trap_set
from quantinv.system_model import QuantizedSystem, build_difference


def _invariant(A, S):
    if S.shape[1] == 0:
        return 0.0
    P = S @ np.linalg.pinv(S)
    return float(np.linalg.norm((np.eye(len(A)) - P) @ A @ S))


def test_example1_eigenvalues(ex1):
    sys, _ = ex1
    sp = spectral_split(sys.A)
    assert sorted(np.abs(sp.eigvals)) == pytest.approx([6.3531, 17.0974], abs=1e-3)
    assert sp.dc == 0 and sp.kind == "expansive"


def test_example2_split(ex2):
    sys, _ = ex2
    sp = spectral_split(sys.A)
    assert sorted(np.abs(sp.eigvals)) == pytest.approx([1 / 3, 1 / 2, 2])
    assert sp.de == 1 and sp.dc == 2 and sp.kind == "mixed"
    assert np.allclose(np.abs(sp.Ee_basis[:, 0]), [1, 0, 0])
    assert np.allclose(sp.Ec_basis[0], 0)
    assert np.linalg.matrix_rank(sp.Ec_basis[1:]) == 2


def test_identity_is_marginal():
    with pytest.raises(MarginalSpectrum):
        spectral_split(np.eye(2))


def test_marginal_tolerance_band():
    with pytest.raises(MarginalSpectrum):
        spectral_split([[1 + 1e-10]])
    assert spectral_split([[1 + 1e-6]]).kind == "expansive"


def test_defective_and_complex_blocks():
    J = np.array([[0.5, 1, 0, 0], [0, 0.5, 0, 0], [0, 0, 1.2, -0.9], [0, 0, 0.9, 1.2]])
    Q = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)))[0]
    A = Q @ J @ Q.T
    sp = spectral_split(A)
    assert sp.dc == 2 and sp.de == 2
    assert np.allclose(sp.proj_Ec + sp.proj_Ee, np.eye(4), atol=1e-9)
    assert np.allclose(sp.proj_Ec @ sp.proj_Ee, 0, atol=1e-9)
    assert _invariant(A, sp.Ec_basis) < 1e-9 and _invariant(A, sp.Ee_basis) < 1e-9


def test_projection_identity_random():
    rng = np.random.default_rng(5)
    for _ in range(200):
        d = int(rng.integers(1, 6))
        A = rng.normal(size=(d, d)) * rng.uniform(0.3, 2)
        try:
            sp = spectral_split(A)
        except MarginalSpectrum:
            continue
        assert sp.dc + sp.de == d
        assert np.max(np.abs(sp.proj_Ec + sp.proj_Ee - np.eye(d))) <= 1e-9
        assert np.max(np.abs(sp.proj_Ec @ sp.proj_Ee)) <= 1e-9
        assert _invariant(A, sp.Ec_basis) <= 1e-9 * max(1, np.linalg.norm(A))
        assert _invariant(A, sp.Ee_basis) <= 1e-9 * max(1, np.linalg.norm(A))


def test_expansive_inverse_contracts():
    rng = np.random.default_rng(8)
    for _ in range(20):
        A = rng.normal(size=(3, 3)) * 3
        try:
            sp = spectral_split(A)
        except MarginalSpectrum:
            continue
        if sp.kind != "expansive":
            continue
        Ainv = np.linalg.inv(A)
        for _ in range(100):
            x = rng.normal(size=3)
            y = x.copy()
            for _ in range(50):
                y = Ainv @ y
            assert np.linalg.norm(y) < np.linalg.norm(x)


# -- subspace chain --------------------------------------------------------

def test_chain_example2(ex2):
    sys, _ = ex2
    ch = invariant_subspace_in_kernel(sys.A, 2)
    assert ch.dims == [1, 0] and ch.verdict is False
    assert np.allclose(np.abs(ch.spaces[0][:, 0]), [0, 0, 1])


def test_chain_diagonal_has_invariant_axis():
    ch = invariant_subspace_in_kernel(np.diag([0.5, 3.0]), 1)
    assert ch.verdict is True and ch.dims == [1, 1]


def test_chain_full_output():
    ch = invariant_subspace_in_kernel(np.random.default_rng(0).normal(size=(3, 3)), 3)
    assert ch.dims == [0] and ch.verdict is False


def test_chain_monotone_and_length():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = int(rng.integers(2, 6))
        p = int(rng.integers(1, d + 1))
        A = rng.normal(size=(d, d))
        if rng.uniform() < 0.3:
            A[:p, p:] = 0          # plant an invariant subspace in the kernel
        ch = invariant_subspace_in_kernel(A, p)
        assert len(ch.dims) == d - p + 1
        assert all(a >= b for a, b in zip(ch.dims, ch.dims[1:]))
        for i in range(len(ch.dims) - 1):
            if ch.dims[i] == ch.dims[i + 1]:
                assert all(x == ch.dims[i] for x in ch.dims[i:])
        for S, T in zip(ch.spaces, ch.spaces[1:]):
            if T.shape[1]:
                assert np.linalg.norm(T - S @ (S.T @ T)) <= 1e-9
        if p < d and np.all(A[:p, p:] == 0):
            assert ch.verdict


def test_chain_dump():
    text = invariant_subspace_in_kernel(np.diag([0.5, 3.0]), 1).dump()
    assert "verdict: true" in text and "S_1: dim 1" in text


# -- trap set --------------------------------------------------------------

def test_trap_full_output():
    diff = build_difference(QuantizedSystem([[0.5, 0.1], [0.2, 0.3]], [[1], [1]], [0, 1], 2))
    tr = trap_set(diff)
    assert tr.window == 1
    assert np.allclose(tr.hi, 1, atol=1e-6) and np.allclose(tr.lo, -1, atol=1e-6)


def test_trap_example2_contractive_block(ex2):
    sys, _ = ex2
    # E_c block of example 2 with its own one-coordinate strip
    Ac = np.array([[0.5, 1], [0, 1 / 3]])
    diff = build_difference(QuantizedSystem(Ac, [[3], [6]], [0, 1], 1))
    tr = trap_set(diff)
    assert np.isfinite(tr.bound)
    # bound <= ||A_c|| * 1 + max |B v|
    assert tr.bound <= 1.5 + 6 + 1e-6
    rng = np.random.default_rng(0)
    for _ in range(2000):
        z = rng.uniform(-12, 12, 2)
        v = int(rng.integers(-1, 2))
        z1 = Ac @ z + np.array([3, 6]) * v
        if abs(z[0]) < 1 and abs(z1[0]) < 1:
            assert np.all(z >= tr.lo) and np.all(z <= tr.hi)
            assert np.all(z1 >= tr.lo) and np.all(z1 <= tr.hi)


def test_trap_refuses_invariant_axis():
    diff = build_difference(QuantizedSystem(np.diag([0.5, 3.0]), [[1], [1]], [0, 1], 1))
    with pytest.raises(UnboundedTrap):
        trap_set(diff)


def test_subspace_chain_statistics_small():
    rng = np.random.default_rng(123)
    hits = sum(invariant_subspace_in_kernel(rng.uniform(-1, 1, (4, 4)), 2).verdict for _ in range(200))
    assert hits == 0
