"""Eigenstructure of the dynamic matrix.

* :func:`spectral_split` separates R^d into the contractive and expansive
  invariant subspaces ``E_c`` and ``E_e``.
* :func:`invariant_subspace_in_kernel` tests whether ``A`` leaves some
  nonzero subspace of the unquantized coordinates invariant.
* :func:`trap_set` bounds every state of an orbit that spends ``d-p+1``
  consecutive steps in the quantization strip.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import MarginalSpectrum, UnboundedTrap

__all__ = [
    "SpectralSplit",
    "SubspaceChain",
    "TrapSet",
    "spectral_split",
    "invariant_subspace_in_kernel",
    "trap_set",
    "observability_matrix",
]

RANK_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    """Contractive / expansive splitting of ``A``.

    Attributes
    ----------
    eigvals : ndarray of complex
        Eigenvalues with multiplicity, sorted by modulus.
    Ec_basis, Ee_basis : ndarray
        ``d x dc`` and ``d x de`` bases. When a subspace is spanned by
        coordinate vectors the basis is exactly those unit vectors.
    Lc, Le : ndarray
        Left inverses: ``[Lc; Le] = [Ec_basis | Ee_basis]^-1``.
    proj_Ec, proj_Ee : ndarray
        Projections along the complementary subspace.
    A_c, A_e : ndarray
        ``A`` in subspace coordinates, ``Lc A Ec`` and ``Le A Ee``.
    """

    eigvals: np.ndarray
    Ec_basis: np.ndarray
    Ee_basis: np.ndarray
    Lc: np.ndarray
    Le: np.ndarray
    proj_Ec: np.ndarray
    proj_Ee: np.ndarray
    A_c: np.ndarray
    A_e: np.ndarray

    @property
    def dc(self) -> int:
        return self.Ec_basis.shape[1]

    @property
    def de(self) -> int:
        return self.Ee_basis.shape[1]

    @property
    def kind(self) -> str:
        """``"contractive"``, ``"expansive"`` or ``"mixed"``."""
        if self.de == 0:
            return "contractive"
        if self.dc == 0:
            return "expansive"
        return "mixed"


def _canonical_basis(Q):
    # Re-express the column space of Q so that k chosen rows form the
    # identity. Coordinate-aligned subspaces come out as unit vectors.
    d, k = Q.shape
    if k == 0:
        return Q.copy()
    _, _, piv = scipy.linalg.qr(Q.T, pivoting=True)
    rows = np.sort(piv[:k])
    E = Q @ np.linalg.inv(Q[rows, :])
    E[np.abs(E) < 1e-13 * max(1.0, np.abs(E).max())] = 0.0
    E[rows, :] = np.eye(k)
    return E


def spectral_split(A, marginal_tol: float = 1e-8) -> SpectralSplit:
    """Split R^d into contractive and expansive invariant subspaces.

    The subspaces come from ordered real Schur forms, so they are sums of
    generalized eigenspaces and defective matrices are handled.

    Parameters
    ----------
    A : (d, d) array_like
    marginal_tol : float
        Eigenvalues with ``||lambda| - 1| < marginal_tol`` are rejected.

    Raises
    ------
    MarginalSpectrum
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError("A must be square")
    ev = np.linalg.eigvals(A)
    ev = ev[np.argsort(np.abs(ev), kind="stable")]
    mods = np.abs(ev)
    if np.any(np.abs(mods - 1.0) < marginal_tol):
        raise MarginalSpectrum(
            f"eigenvalue(s) of modulus one within {marginal_tol:g}: "
            f"{ev[np.abs(mods - 1.0) < marginal_tol]}", eigvals=ev)
    _, Zc, dc = scipy.linalg.schur(A, output="real", sort="iuc")
    _, Ze, de = scipy.linalg.schur(A, output="real", sort="ouc")
    if dc + de != d:
        raise MarginalSpectrum("Schur ordering could not separate the spectrum", eigvals=ev)
    Ec = _canonical_basis(Zc[:, :dc])
    Ee = _canonical_basis(Ze[:, :de])
    W = np.hstack([Ec, Ee])
    Winv = np.linalg.inv(W)
    Lc, Le = Winv[:dc], Winv[dc:]
    return SpectralSplit(
        eigvals=ev,
        Ec_basis=Ec,
        Ee_basis=Ee,
        Lc=Lc,
        Le=Le,
        proj_Ec=Ec @ Lc,
        proj_Ee=Ee @ Le,
        A_c=Lc @ A @ Ec,
        A_e=Le @ A @ Ee,
    )


@dataclass(frozen=True, eq=False)
class SubspaceChain:
    """Chain ``S_0 = <e_{p+1},...,e_d>``, ``S_{i+1} = A(S_i) ∩ S_0``.

    Attributes
    ----------
    spaces : list of ndarray
        Orthonormal bases (``d x dim`` arrays, possibly ``d x 0``).
    dims : list of int
    verdict : bool
        True when ``A`` has a nonzero invariant subspace inside ``S_0``.
    """

    spaces: list
    dims: list
    verdict: bool

    def dump(self) -> str:
        """Plain text audit listing of the chain."""
        lines = [f"chain_length: {len(self.dims)}", f"verdict: {str(self.verdict).lower()}"]
        for i, (S, k) in enumerate(zip(self.spaces, self.dims)):
            lines.append(f"S_{i}: dim {k}")
            for col in S.T:
                lines.append("  - [" + ", ".join(f"{x:.12g}" for x in col) + "]")
        return "\n".join(lines) + "\n"


def _orth(M):
    if M.shape[1] == 0:
        return M[:, :0]
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return M[:, :0]
    r = int(np.sum(s > RANK_RTOL * s[0]))
    return U[:, :r]


def invariant_subspace_in_kernel(A, p: int) -> SubspaceChain:
    """Does ``A`` leave a nonzero subspace of ``<e_{p+1},...,e_d>`` invariant?

    Builds the chain of the module docstring up to ``S_{d-p}``; the
    answer is yes iff ``dim S_{d-p} > 0``. Rank decisions use singular
    values with cutoff ``1e-9 * sigma_max``.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if not 1 <= p <= d:
        raise ValueError(f"p must satisfy 1 <= p <= {d}")
    S = np.eye(d)[:, p:]
    spaces, dims = [S], [S.shape[1]]
    for _ in range(d - p):
        img = _orth(A @ S)
        if img.shape[1] == 0:
            S = img
        else:
            top = img[:p, :]
            if p == 0:
                N = np.eye(img.shape[1])
            else:
                _, s, Vt = np.linalg.svd(top, full_matrices=True)
                rank = int(np.sum(s > RANK_RTOL))
                N = Vt[rank:].T
            S = _orth(img @ N) if N.shape[1] else img[:, :0]
        spaces.append(S)
        dims.append(S.shape[1])
    return SubspaceChain(spaces, dims, bool(dims[-1] > 0))


def observability_matrix(A, p: int, steps: int) -> np.ndarray:
    """Stack ``pi_p A^j`` for ``j = 0..steps-1``."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    rows = []
    P = np.eye(d)
    for _ in range(steps):
        rows.append(P[:p])
        P = A @ P
    return np.vstack(rows)


@dataclass(frozen=True, eq=False)
class TrapSet:
    """Box containing every state of every window of ``window``
    consecutive in-strip steps of the difference system.

    Attributes
    ----------
    lo, hi : ndarray
        Box corners.
    bound : float
        Max-norm radius, ``max(|lo|, |hi|)``.
    window : int
        ``d - p + 1``.
    """

    lo: np.ndarray
    hi: np.ndarray
    bound: float
    window: int

    def cover(self, level: int = 0):
        """The box as a :class:`~quantinv.attractor.BoxCover`."""
        from .attractor import BoxCover
        return BoxCover.from_box(self.lo, self.hi, level)

    @property
    def boxes(self):
        return self.cover(0)


def trap_set(diff, p: int = None, chain: SubspaceChain = None) -> TrapSet:
    """Bound orbits that stay ``d-p+1`` steps in the strip.

    With ``z_j = A^j z_0 + sum_i A^(j-1-i) B v_i`` the in-strip conditions
    read ``O z_0 = y - g(v)`` with ``|y| < 1``, where ``O`` stacks
    ``pi_p A^j``. When ``A`` has no invariant subspace in the kernel of
    ``pi_p``, ``O`` has full column rank and its pseudo-inverse bounds
    ``z_0``; the other window states follow by interval propagation.

    Raises
    ------
    UnboundedTrap
        If ``chain`` (computed when not given) reports an invariant
        subspace.
    """
    A = np.asarray(diff.A, dtype=float)
    B = np.asarray(diff.B, dtype=float)
    d = A.shape[0]
    p = diff.p if p is None else p
    if chain is None:
        chain = invariant_subspace_in_kernel(A, p)
    if chain.verdict:
        raise UnboundedTrap("A has an invariant subspace inside the unquantized coordinates",
                            chain=chain)
    n = d - p + 1
    V = np.array([[float(x) for x in v] for v in diff.diff_alphabet])
    T = B @ V.T                      # translates, one column per symbol
    tmax = np.max(np.abs(T), axis=1)  # per coordinate
    # offsets g_j = pi_p sum_{i<j} A^(j-1-i) B v_i, bounded row by row
    powers = [np.eye(d)]
    for _ in range(n):
        powers.append(A @ powers[-1])
    g = []
    for j in range(n):
        acc = np.zeros(p)
        for i in range(j):
            acc += np.max(np.abs((powers[j - 1 - i] @ T)[:p]), axis=1)
        g.append(acc)
    g = np.concatenate(g)
    O = observability_matrix(A, p, n)
    Opinv = np.linalg.pinv(O)
    r0 = np.abs(Opinv) @ (1.0 + g)
    r0 *= 1 + 1e-9
    # every window state lies in the strip
    r0[:p] = np.minimum(r0[:p], 1.0)
    rad = r0.copy()
    r = r0
    for _ in range(1, n):
        r = np.abs(A) @ r + tmax
        r[:p] = np.minimum(r[:p], 1.0)
        rad = np.maximum(rad, r)
    rad = rad * (1 + 1e-12) + 1e-12
    return TrapSet(-rad, rad.copy(), float(rad.max()), n)
