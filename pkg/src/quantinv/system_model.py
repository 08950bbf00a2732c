"""System descriptions and the systems derived from them.

A quantized system is::

    x(k+1) = A x(k) + B u(k),    u(k) in U (finite)
    y(k)   = floor(C x(k) / delta)

After :func:`canonicalize` the output is ``floor(pi_p x)``, the integer
part of the first ``p`` coordinates. The difference, doubled and inverse
systems are all carried as :class:`AffineIFS` objects, a plain list of
affine maps ``z -> M z + c``.

Input symbols are stored exactly as :class:`fractions.Fraction` so that
differences ``u - u'`` are computed without rounding.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import (
    IndexOutOfRange,
    InvalidSystem,
    RankDeficientOutputMap,
    SingularDynamics,
)

__all__ = [
    "QuantizedSystem",
    "DifferenceSystem",
    "DoubledSystem",
    "AffineIFS",
    "to_fraction",
    "canonicalize",
    "build_difference",
    "build_doubled",
    "build_inverse",
    "step",
    "quantized_output",
    "simulate",
]


def to_fraction(value) -> Fraction:
    """Convert an input literal to an exact rational.

    Strings are read as decimal or ``p/q`` literals ("0.1" is exactly
    1/10). Floats keep their exact binary value.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise InvalidSystem(f"boolean is not a valid input value: {value!r}")
    if isinstance(value, (int, np.integer, Rational)):
        return Fraction(int(value)) if isinstance(value, (int, np.integer)) else Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidSystem(f"cannot read {value!r} as an exact number") from exc
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise InvalidSystem(f"non-finite input value {value!r}")
        return Fraction(float(value))
    raise InvalidSystem(f"unsupported input value {value!r}")


def _as_matrix(name, value, rows=None, cols=None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (ValueError, TypeError) as exc:
        raise InvalidSystem(f"{name} is not a numeric matrix (ragged rows?)") from exc
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a flat list is a column for B, a row otherwise; callers reshape
        arr = arr.reshape(-1, 1) if name == "B" else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidSystem(f"{name} must be a matrix, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise InvalidSystem(f"{name} has {arr.shape[0]} rows, expected {rows}")
    if cols is not None and arr.shape[1] != cols:
        raise InvalidSystem(f"{name} has {arr.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSystem(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _normalize_alphabet(alphabet, m) -> tuple:
    out = []
    seen = set()
    for sym in alphabet:
        if isinstance(sym, (list, tuple, np.ndarray)):
            vec = tuple(to_fraction(x) for x in sym)
        else:
            vec = (to_fraction(sym),)
        if len(vec) != m:
            raise InvalidSystem(f"input symbol {sym!r} has length {len(vec)}, expected {m}")
        if vec not in seen:
            seen.add(vec)
            out.append(vec)
    if not out:
        raise InvalidSystem("input alphabet is empty")
    return tuple(out)


def _exact_matrix(value):
    # tuple-of-tuples of Fractions when every entry is an exact rational
    if isinstance(value, np.ndarray) and value.dtype != object:
        if value.dtype.kind in "iu":
            return tuple(tuple(Fraction(int(x)) for x in np.atleast_1d(r)) for r in np.atleast_2d(value))
        return None
    if isinstance(value, (list, tuple)):
        rows = [list(r) if isinstance(r, (list, tuple, np.ndarray)) else [r] for r in value]
    else:
        rows = [[value]]
    out = []
    for r in rows:
        row = []
        for x in r:
            if isinstance(x, (bool, np.bool_)):
                return None
            if isinstance(x, (int, np.integer, Fraction)):
                row.append(Fraction(x) if not isinstance(x, np.integer) else Fraction(int(x)))
            elif isinstance(x, str):
                try:
                    row.append(Fraction(x.strip()))
                except (ValueError, ZeroDivisionError):
                    return None
            else:
                return None
        out.append(tuple(row))
    return tuple(out)


def _frac_vec_to_float(vecs) -> np.ndarray:
    return np.array([[float(x) for x in v] for v in vecs], dtype=float)


@dataclass(frozen=True, eq=False)
class QuantizedSystem:
    """Linear system with finite input alphabet and quantized output.

    Parameters
    ----------
    A : (d, d) array_like
    B : (d, m) array_like
    alphabet : sequence
        Input symbols. Scalars are accepted when ``m == 1``. Duplicates
        (exact value equality) are dropped, first occurrence wins.
    p : int
        Number of quantized output coordinates.
    delta : number, default 1
        Quantization rate.
    C : (p, d) array_like, optional
        Output map, default the projection on the first ``p`` coordinates.

    Attributes
    ----------
    transform : ndarray or None
        Change of basis ``T`` (raw state -> canonical state) when the
        system was produced by :func:`canonicalize`.
    A_exact, B_exact : tuple of tuples of Fraction, or None
        Exact entries, kept when every entry was given as an integer,
        Fraction or rational literal. Exact decision stages use them.
    """

    A: np.ndarray
    B: np.ndarray
    alphabet: tuple
    p: int
    delta: Fraction = Fraction(1)
    C: np.ndarray = None
    transform: np.ndarray = field(default=None, repr=False)
    A_exact: tuple = field(default=None, repr=False)
    B_exact: tuple = field(default=None, repr=False)

    def __post_init__(self):
        A_exact = self.A_exact if self.A_exact is not None else _exact_matrix(self.A)
        B_exact = self.B_exact if self.B_exact is not None else _exact_matrix(self.B)
        if isinstance(self.A, str) or isinstance(self.B, str):
            raise InvalidSystem("matrices must be numeric arrays")
        A = _as_matrix("A", [[float(x) for x in r] for r in A_exact] if A_exact else self.A)
        d = A.shape[0]
        if A.shape != (d, d):
            raise InvalidSystem(f"A must be square, got shape {A.shape}")
        B = _as_matrix("B", [[float(x) for x in r] for r in B_exact] if B_exact else self.B, rows=d)
        if A_exact is not None and np.array(A_exact, dtype=object).shape != A.shape:
            A_exact = None
        if B_exact is not None and np.array(B_exact, dtype=object).shape != B.shape:
            B_exact = None
        p = int(self.p)
        if not 1 <= p <= d:
            raise InvalidSystem(f"p must satisfy 1 <= p <= d={d}, got {self.p}")
        delta = self.delta if isinstance(self.delta, float) else to_fraction(self.delta)
        if not delta > 0:
            raise InvalidSystem(f"delta must be positive, got {self.delta}")
        if self.C is None:
            C = np.eye(p, d)
            C.setflags(write=False)
        else:
            C = _as_matrix("C", self.C, rows=p, cols=d)
        alphabet = _normalize_alphabet(self.alphabet, B.shape[1])
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "A_exact", A_exact)
        object.__setattr__(self, "B_exact", B_exact)
        if self.transform is not None:
            T = np.array(self.transform, dtype=float)
            T.setflags(write=False)
            object.__setattr__(self, "transform", T)

    @property
    def dim_d(self) -> int:
        return self.A.shape[0]

    @property
    def dim_m(self) -> int:
        return self.B.shape[1]

    @property
    def quantized_p(self) -> int:
        return self.p

    @property
    def inputs(self) -> np.ndarray:
        """Alphabet as a float array of shape (n, m)."""
        return _frac_vec_to_float(self.alphabet)

    @property
    def is_canonical(self) -> bool:
        return self.delta == 1 and np.array_equal(self.C, np.eye(self.p, self.dim_d))

    def ifs(self) -> "AffineIFS":
        """Forward maps ``x -> A x + B u``, one per input symbol."""
        return AffineIFS.from_linear(self.A, self.B, self.alphabet)

    def output(self, x) -> np.ndarray:
        """Quantized output for a raw (possibly non canonical) state."""
        y = self.C @ np.asarray(x, dtype=float) / float(self.delta)
        return np.floor(y).astype(np.int64)

    def __repr__(self):
        return (
            f"QuantizedSystem(d={self.dim_d}, m={self.dim_m}, p={self.p}, "
            f"|U|={len(self.alphabet)}, delta={self.delta})"
        )


@dataclass(frozen=True, eq=False)
class AffineIFS:
    """Finite family of affine maps ``z -> M z + c`` on R^q.

    Attributes
    ----------
    maps : tuple of (M, c)
    labels : tuple
        One label per map (typically the exact input symbol).
    """

    maps: tuple
    labels: tuple = None

    def __post_init__(self):
        if len(self.maps) == 0:
            raise InvalidSystem("an IFS needs at least one map")
        clean = []
        q = None
        for M, c in self.maps:
            M = np.array(M, dtype=float)
            if M.ndim == 0:
                M = M.reshape(1, 1)
            c = np.array(c, dtype=float).reshape(-1)
            if q is None:
                q = M.shape[0]
            if M.shape != (q, q) or c.shape != (q,):
                raise InvalidSystem("all maps of an IFS must share the same dimension")
            M.setflags(write=False)
            c.setflags(write=False)
            clean.append((M, c))
        labels = self.labels
        if labels is None:
            labels = tuple(range(len(clean)))
        elif len(labels) != len(clean):
            raise InvalidSystem("one label per map is required")
        object.__setattr__(self, "maps", tuple(clean))
        object.__setattr__(self, "labels", tuple(labels))

    @classmethod
    def from_linear(cls, A, B, symbols) -> "AffineIFS":
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        maps = [(A, B @ np.array([float(x) for x in v])) for v in symbols]
        return cls(tuple(maps), tuple(symbols))

    @property
    def dim_q(self) -> int:
        return self.maps[0][0].shape[0]

    def __len__(self):
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def index_of(self, label) -> int:
        return self.labels.index(label)

    def translates(self) -> np.ndarray:
        return np.array([c for _, c in self.maps])

    def restrict(self, L, E) -> "AffineIFS":
        """Express the IFS in coordinates of an invariant subspace.

        ``E`` holds a basis in its columns and ``L`` the matching left
        inverse (``L @ E = I``); the new maps are ``xi -> L M E xi + L c``.
        """
        L = np.asarray(L, dtype=float)
        E = np.asarray(E, dtype=float)
        maps = tuple((L @ M @ E, L @ c) for M, c in self.maps)
        return AffineIFS(maps, self.labels)


@dataclass(frozen=True, eq=False)
class DifferenceSystem:
    """``z(k+1) = A z(k) + B v(k)`` with ``v`` in ``V = U - U``.

    ``diff_alphabet`` is sorted, contains the zero vector and is closed
    under negation.
    """

    A: np.ndarray
    B: np.ndarray
    diff_alphabet: tuple
    p: int
    A_exact: tuple = None
    B_exact: tuple = None

    @property
    def dim_d(self) -> int:
        return self.A.shape[0]

    def exact_matrices(self):
        """``(A, B)`` as lists of Fraction rows; binary values of the
        floats when no exact entries are known."""
        A = self.A_exact or tuple(tuple(Fraction(float(x)) for x in r) for r in self.A)
        B = self.B_exact or tuple(tuple(Fraction(float(x)) for x in r) for r in self.B)
        return [list(r) for r in A], [list(r) for r in B]

    @property
    def zero_index(self) -> int:
        m = self.B.shape[1]
        return self.diff_alphabet.index((Fraction(0),) * m)

    def is_zero(self, index: int) -> bool:
        return all(x == 0 for x in self.diff_alphabet[index])

    def ifs(self) -> AffineIFS:
        return AffineIFS.from_linear(self.A, self.B, self.diff_alphabet)

    def translates_exact(self):
        """Exact translates ``B v``, one tuple of Fractions per symbol."""
        _, Bq = self.exact_matrices()
        out = []
        for v in self.diff_alphabet:
            out.append(tuple(sum((Bq[i][j] * v[j] for j in range(len(v))), Fraction(0))
                             for i in range(len(Bq))))
        return out


@dataclass(frozen=True, eq=False)
class DoubledSystem:
    """Two copies of a system driven by two input strings.

    ``A2 = diag(A, A)`` and each map is indexed by a pair ``(u, u')``.
    """

    A2: np.ndarray
    B2: np.ndarray
    pairs: tuple
    p: int
    d: int

    def ifs(self) -> AffineIFS:
        maps = []
        for u, up in self.pairs:
            vec = np.array([float(x) for x in u] + [float(x) for x in up])
            maps.append((self.A2, self.B2 @ vec))
        return AffineIFS(tuple(maps), self.pairs)


def canonicalize(raw: QuantizedSystem) -> QuantizedSystem:
    """Return an equivalent system with ``delta = 1`` and ``C = pi_p``.

    The change of basis is ``T = [C / delta ; N^T]`` where the columns of
    ``N`` are an orthonormal basis of ``ker C``. The new matrices are
    ``T A T^-1`` and ``T B``; input symbols are untouched. ``T`` is stored
    on the result as ``transform``. A system that is already canonical
    comes back unchanged, with ``transform`` set to the identity.

    Raises
    ------
    RankDeficientOutputMap
        If ``rank C < p``.
    """
    d, p = raw.dim_d, raw.p
    C = np.asarray(raw.C, dtype=float)
    if np.linalg.matrix_rank(C) < p:
        raise RankDeficientOutputMap(f"output map has rank {np.linalg.matrix_rank(C)} < p={p}")
    if raw.is_canonical:
        return QuantizedSystem(raw.A, raw.B, raw.alphabet, p, 1, None, transform=np.eye(d),
                               A_exact=raw.A_exact, B_exact=raw.B_exact)
    top = C / float(raw.delta)
    if p < d:
        N = scipy.linalg.null_space(C)
        T = np.vstack([top, N.T])
    else:
        T = top
    Tinv = np.linalg.inv(T)
    A = T @ raw.A @ Tinv
    B = T @ raw.B
    return QuantizedSystem(A, B, raw.alphabet, p, 1, None, transform=T)


def build_difference(sys: QuantizedSystem) -> DifferenceSystem:
    """Difference system with ``V = {u - u' : u, u' in U}`` (exact)."""
    diffs = set()
    for u in sys.alphabet:
        for up in sys.alphabet:
            diffs.add(tuple(a - b for a, b in zip(u, up)))
    return DifferenceSystem(sys.A, sys.B, tuple(sorted(diffs)), sys.p, sys.A_exact, sys.B_exact)


def build_doubled(sys: QuantizedSystem) -> DoubledSystem:
    """Doubled system on R^{2d} with all ordered input pairs."""
    d, m = sys.dim_d, sys.dim_m
    A2 = np.zeros((2 * d, 2 * d))
    A2[:d, :d] = sys.A
    A2[d:, d:] = sys.A
    B2 = np.zeros((2 * d, 2 * m))
    B2[:d, :m] = sys.B
    B2[d:, m:] = sys.B
    pairs = tuple((u, up) for u in sys.alphabet for up in sys.alphabet)
    return DoubledSystem(A2, B2, pairs, sys.p, d)


def build_inverse(ifs: AffineIFS) -> AffineIFS:
    """Inverse maps ``z -> M^-1 (z - c)``, same labels and order.

    Raises
    ------
    SingularDynamics
        If ``|det M| < 1e-12 * ||M||^q`` for some map.
    """
    maps = []
    for M, c in ifs.maps:
        q = M.shape[0]
        scale = np.linalg.norm(M, 2) ** q
        det = np.linalg.det(M)
        if scale == 0.0 or abs(det) < 1e-12 * scale:
            raise SingularDynamics(f"map is singular (det={det:.3g})")
        Minv = np.linalg.inv(M)
        maps.append((Minv, -Minv @ c))
    return AffineIFS(tuple(maps), ifs.labels)


def step(ifs: AffineIFS, state, input_index: int) -> np.ndarray:
    """Apply the selected map: ``M state + c``."""
    if not (0 <= input_index < len(ifs.maps)) or isinstance(input_index, bool):
        raise IndexOutOfRange(f"input index {input_index} not in [0, {len(ifs.maps)})")
    M, c = ifs.maps[input_index]
    return M @ np.asarray(state, dtype=float).reshape(-1) + c


def quantized_output(sys: QuantizedSystem, state) -> np.ndarray:
    """``floor`` of the first ``p`` coordinates (canonical system)."""
    x = np.asarray(state, dtype=float).reshape(-1)
    return np.floor(x[: sys.p]).astype(np.int64)


def simulate(sys: QuantizedSystem, x0, inputs: Sequence[int]):
    """Run a system from ``x0`` with a word of input indices.

    Returns
    -------
    states : ndarray, shape (n+1, d)
    outputs : ndarray, shape (n+1, p)
        Outputs use the system's own ``C`` and ``delta``.
    """
    f = sys.ifs()
    xs = [np.asarray(x0, dtype=float).reshape(-1)]
    for i in inputs:
        xs.append(step(f, xs[-1], i))
    xs = np.array(xs)
    ys = np.array([sys.output(x) for x in xs])
    return xs, ys
