"""Box covers and certified outer approximations of IFS attractors.

A :class:`BoxCover` is a finite set of closed dyadic cells
``prod_j [i_j h, (i_j + 1) h]`` with ``h = 2**-level``. Images of cells
under affine maps are computed in integer arithmetic. A binary64 number
is a dyadic rational, so matrix entries and cell corners are rescaled to
a common power of two and the interval bounds are evaluated in ``int64``
(Python integers when it could overflow). Entries with at most 36
fractional bits are used exactly; longer ones are enclosed in a dyadic
interval of that width, so images are always outer approximations.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg

from .exceptions import (
    BudgetExceeded,
    DimensionMismatch,
    NoFixpointAtResolution,
    NotContractive,
)
from .system_model import AffineIFS

__all__ = [
    "BoxCover",
    "AttractorApprox",
    "Strip",
    "INSIDE",
    "BOUNDARY",
    "OUTSIDE",
    "image_cells",
    "hutchinson_step",
    "compute_attractor",
    "contraction_norm",
    "minkowski_sum",
    "embed_cover",
    "strip_predicate",
    "separation_check",
    "cover_to_csv",
    "cover_from_csv",
    "cover_to_svg",
]

INSIDE, BOUNDARY, OUTSIDE = "Inside", "Boundary", "Outside"
DEFAULT_CELL_BUDGET = 4_000_000


def _row_view(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


def _encoder(*arrays):
    # row -> int64 key preserving lexicographic order, or None on overflow
    arrays = [a for a in arrays if len(a)]
    if not arrays:
        return None
    lo = np.min([a.min(axis=0) for a in arrays], axis=0)
    hi = np.max([a.max(axis=0) for a in arrays], axis=0)
    spans = [int(x) for x in hi - lo + 1]
    total = 1
    for sp in spans:
        total *= sp
    if total >= 1 << 62:
        return None
    strides = np.ones(len(spans), dtype=np.int64)
    for j in range(len(spans) - 2, -1, -1):
        strides[j] = strides[j + 1] * spans[j + 1]
    return lo, strides


def _encode(a, enc):
    lo, strides = enc
    return (a - lo[None, :]) @ strides


def _decode(keys, enc):
    lo, strides = enc
    out = np.empty((len(keys), len(strides)), dtype=np.int64)
    rem = keys.copy()
    for j, st in enumerate(strides):
        out[:, j] = rem // st
        rem -= out[:, j] * st
    return out + lo[None, :]


def _unique_rows(a):
    if a.shape[0] <= 1:
        return a.reshape(-1, a.shape[1]).astype(np.int64, copy=True)
    if a.shape[1] == 1:
        return np.unique(a[:, 0]).reshape(-1, 1)
    enc = _encoder(a)
    if enc is None:
        return np.unique(a, axis=0)
    return _decode(np.unique(_encode(a, enc)), enc)


def _isin_rows(a, b):
    enc = _encoder(a, b)
    if enc is None:
        return np.isin(_row_view(a), _row_view(b))
    return np.isin(_encode(a, enc), _encode(b, enc))


class BoxCover:
    """Finite union of closed dyadic grid cells.

    Parameters
    ----------
    cells : array_like of int, shape (n, dim)
        Cell index vectors, deduplicated and sorted on construction.
    level : int
        Grid resolution ``h = 2**-level``; ``level >= 0``.
    dim : int, optional
        Required when ``cells`` is empty.

    Examples
    --------
    >>> c = BoxCover.from_box([0.0], [1.0], level=2)
    >>> len(c), c.bounds()
    (6, (array([-0.25]), array([1.25])))

    The closed interval [0, 1] touches the cells just outside it, which
    is why the cover reaches a quarter beyond each end.
    """

    __slots__ = ("cells", "level", "dim")

    def __init__(self, cells, level: int, dim: int = None):
        level = int(level)
        if level < 0:
            raise ValueError("level must be >= 0")
        arr = np.asarray(cells, dtype=np.int64)
        if arr.size == 0:
            if dim is None:
                dim = arr.shape[1] if arr.ndim == 2 else None
            if dim is None:
                raise ValueError("dim is required for an empty cover")
            arr = np.zeros((0, int(dim)), dtype=np.int64)
        else:
            if arr.ndim == 1:
                arr = arr.reshape(1, -1) if dim is None or dim == arr.size else arr.reshape(-1, dim)
            if dim is not None and arr.shape[1] != dim:
                raise DimensionMismatch(f"cells have dimension {arr.shape[1]}, expected {dim}")
            arr = _unique_rows(arr)
        arr.setflags(write=False)
        self.cells = arr
        self.level = level
        self.dim = arr.shape[1]

    # construction ---------------------------------------------------------
    @classmethod
    def empty(cls, dim: int, level: int) -> "BoxCover":
        return cls(np.zeros((0, dim), dtype=np.int64), level, dim)

    @classmethod
    def from_box(cls, lo, hi, level: int, budget: int = DEFAULT_CELL_BUDGET) -> "BoxCover":
        """All closed cells meeting the closed box ``[lo, hi]``."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        s = 2.0 ** level
        a = np.ceil(lo * s).astype(np.int64) - 1
        b = np.floor(hi * s).astype(np.int64)
        if np.any(b < a):
            return cls.empty(lo.size, level)
        n = int(np.prod((b - a + 1).astype(float)))
        if n > budget:
            raise BudgetExceeded(f"box cover would have {n} cells (budget {budget})")
        grids = np.meshgrid(*[np.arange(x, y + 1) for x, y in zip(a, b)], indexing="ij")
        return cls(np.stack([g.ravel() for g in grids], axis=1), level)

    @classmethod
    def from_points(cls, points, level: int) -> "BoxCover":
        """Closed cells containing the given points (a point on a grid
        line belongs to every cell sharing that line)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        s = 2.0 ** level
        a = np.ceil(pts * s).astype(np.int64) - 1
        b = np.floor(pts * s).astype(np.int64)
        return cls(_enumerate_ranges(a, b), level, pts.shape[1])

    # basic geometry -------------------------------------------------------
    @property
    def h(self) -> float:
        return 2.0 ** -self.level

    def __len__(self):
        return self.cells.shape[0]

    def __iter__(self):
        return iter(map(tuple, self.cells.tolist()))

    def __eq__(self, other):
        if not isinstance(other, BoxCover):
            return NotImplemented
        return (self.dim == other.dim and self.level == other.level
                and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.dim, self.level, self.cells.tobytes()))

    def __repr__(self):
        return f"BoxCover(dim={self.dim}, level={self.level}, cells={len(self)})"

    def is_empty(self) -> bool:
        return len(self) == 0

    def lower(self) -> np.ndarray:
        """Lower corners of the cells."""
        return self.cells * self.h

    def upper(self) -> np.ndarray:
        return (self.cells + 1) * self.h

    def centers(self) -> np.ndarray:
        return (self.cells + 0.5) * self.h

    def bounds(self):
        """Corners of the bounding box of the union of cells."""
        if self.is_empty():
            return np.full(self.dim, np.nan), np.full(self.dim, np.nan)
        return self.cells.min(axis=0) * self.h, (self.cells.max(axis=0) + 1) * self.h

    def diameter(self) -> float:
        lo, hi = self.bounds()
        return float(np.max(hi - lo)) if not self.is_empty() else 0.0

    # set algebra ----------------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")
        if self.level != other.level:
            raise DimensionMismatch(f"levels differ: {self.level} vs {other.level}")

    def _mask_in(self, other) -> np.ndarray:
        self._check(other)
        if self.is_empty() or other.is_empty():
            return np.zeros(len(self), dtype=bool)
        return _isin_rows(self.cells, other.cells)

    def contains_cells(self, cells) -> np.ndarray:
        """Membership mask of index rows (same level and dimension)."""
        cells = np.ascontiguousarray(np.asarray(cells, dtype=np.int64).reshape(-1, self.dim))
        if self.is_empty() or len(cells) == 0:
            return np.zeros(len(cells), dtype=bool)
        return _isin_rows(cells, self.cells)

    def lookup(self):
        """Membership test for repeated queries against this cover.

        The cells are encoded and sorted once; the returned function maps
        an ``(n, dim)`` index array to a boolean mask.
        """
        if self.is_empty():
            return lambda cells: np.zeros(len(cells), dtype=bool)
        enc = _encoder(self.cells)
        if enc is None:
            return self.contains_cells
        lo = enc[0]
        hi = self.cells.max(axis=0)
        keys = np.sort(_encode(self.cells, enc))

        def member(cells):
            cells = np.asarray(cells, dtype=np.int64).reshape(-1, self.dim)
            inb = np.all((cells >= lo) & (cells <= hi), axis=1)
            out = np.zeros(len(cells), dtype=bool)
            if inb.any():
                q = _encode(cells[inb], enc)
                pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
                out[inb] = keys[pos] == q
            return out
        return member

    def union(self, other) -> "BoxCover":
        self._check(other)
        return BoxCover(np.vstack([self.cells, other.cells]), self.level, self.dim)

    def intersection(self, other) -> "BoxCover":
        return BoxCover(self.cells[self._mask_in(other)], self.level, self.dim)

    def difference(self, other) -> "BoxCover":
        return BoxCover(self.cells[~self._mask_in(other)], self.level, self.dim)

    def issubset(self, other) -> bool:
        return bool(np.all(self._mask_in(other)))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __le__ = issubset

    def select(self, mask) -> "BoxCover":
        return BoxCover(self.cells[np.asarray(mask, dtype=bool)], self.level, self.dim)

    # resolution changes ---------------------------------------------------
    def coarsen(self, level: int) -> "BoxCover":
        """Cells of a coarser grid containing the cells of this cover."""
        if level > self.level:
            raise ValueError("coarsen needs a coarser level")
        return BoxCover(self.cells >> (self.level - level), level, self.dim)

    def refine(self, level: int) -> "BoxCover":
        """Subdivide every cell down to a finer level (same point set)."""
        if level < self.level:
            raise ValueError("refine needs a finer level")
        k = level - self.level
        if k == 0:
            return self
        n = 1 << k
        offs = np.stack(np.meshgrid(*[np.arange(n)] * self.dim, indexing="ij"), -1).reshape(-1, self.dim)
        cells = (self.cells[:, None, :] << k) + offs[None, :, :]
        return BoxCover(cells.reshape(-1, self.dim), level, self.dim)

    def negate(self) -> "BoxCover":
        """Cover of the point reflection ``x -> -x``."""
        return BoxCover(-self.cells - 1, self.level, self.dim)

    def project(self, axes) -> "BoxCover":
        """Orthogonal projection onto the given coordinate axes."""
        axes = list(axes)
        return BoxCover(self.cells[:, axes], self.level, len(axes))

    def inflate(self, k: int = 1) -> "BoxCover":
        """Add all cells within ``k`` cells (max-norm) of the cover."""
        offs = np.stack(np.meshgrid(*[np.arange(-k, k + 1)] * self.dim, indexing="ij"), -1).reshape(-1, self.dim)
        return BoxCover((self.cells[:, None, :] + offs[None]).reshape(-1, self.dim), self.level, self.dim)

    def contains_points(self, points, tol: float = 0.0) -> np.ndarray:
        """Point membership in the (closed) union of cells, with an
        optional max-norm slack ``tol``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty():
            return np.zeros(len(pts), dtype=bool)
        s = 2.0 ** self.level
        a = np.ceil((pts - tol) * s).astype(np.int64) - 1
        b = np.floor((pts + tol) * s).astype(np.int64)
        out = np.zeros(len(pts), dtype=bool)
        keys = set(map(tuple, self.cells.tolist()))
        for n in range(len(pts)):
            cand = _enumerate_ranges(a[n:n + 1], b[n:n + 1])
            out[n] = any(tuple(c) in keys for c in cand.tolist())
        return out


def _enumerate_ranges(jlo, jhi):
    """All integer vectors ``j`` with ``jlo[n] <= j <= jhi[n]`` for some row
    ``n``; the rows are concatenated (duplicates kept)."""
    jlo = np.asarray(jlo, dtype=np.int64)
    jhi = np.asarray(jhi, dtype=np.int64)
    n, q = jlo.shape
    cnt = jhi - jlo + 1
    cnt = np.maximum(cnt, 0)
    tot = np.prod(cnt, axis=1)
    total = int(tot.sum())
    if total == 0:
        return np.zeros((0, q), dtype=np.int64)
    rep = np.repeat(np.arange(n), tot)
    local = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(tot) - tot, tot)
    out = np.empty((total, q), dtype=np.int64)
    for r in range(q):
        cr = cnt[rep, r]
        out[:, r] = jlo[rep, r] + local % cr
        local //= cr
    return out


# --------------------------------------------------------------------------
# exact affine images


_MAX_BITS = 36


def _outward(num, den, s):
    # floor and ceil of num/den * 2**s
    lo = (num << s) // den
    hi = -((-num << s) // den)
    return lo, hi


class _DyadicMap:
    """Affine map enclosed by dyadic entries ``[Mlo, Mhi] / 2**s``.

    Entries with at most ``_MAX_BITS`` fractional bits are represented
    exactly (``Mlo == Mhi``). Longer binary expansions, such as the float
    nearest to 1/3, are rounded outward to ``_MAX_BITS`` bits so that
    images can be computed in int64; ``exact`` is then False.
    """

    def __init__(self, M, c):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        c = np.asarray(c, dtype=float).reshape(-1)
        ratios = [float(x).as_integer_ratio() for x in np.concatenate([M.ravel(), c])]
        s = max(den.bit_length() - 1 for _, den in ratios)
        if s <= _MAX_BITS:
            lo = hi = [num << (s - (den.bit_length() - 1)) for num, den in ratios]
        else:
            s = _MAX_BITS
            pairs = [_outward(num, den, s) for num, den in ratios]
            lo = [a for a, _ in pairs]
            hi = [b for _, b in pairs]
        k = M.size
        self.shape = M.shape
        self.s = s
        self.exact = lo == hi
        self.Mlo = np.array(lo[:k], dtype=object).reshape(M.shape)
        self.Mhi = np.array(hi[:k], dtype=object).reshape(M.shape)
        self.clo = np.array(lo[k:], dtype=object)
        self.chi = np.array(hi[k:], dtype=object)
        self.has_pos = np.array([any(x > 0 for x in row) for row in self.Mhi])
        self.absrow = max((sum(max(abs(a), abs(b)) for a, b in zip(r1, r2))
                           for r1, r2 in zip(self.Mlo, self.Mhi)), default=0)
        self.cmax = max((max(abs(a), abs(b)) for a, b in zip(self.clo, self.chi)), default=0)

    def numerators(self, cells, level):
        """Lower and upper bounds of each output coordinate over each
        closed cell, as integers to be divided by ``2**(s + level)``.
        The bounds are the exact inf and sup when ``exact``."""
        imax = int(np.abs(cells).max()) + 1 if cells.size else 1
        bound = self.absrow * (imax + 1) + (self.cmax << level)
        native = bound.bit_length() < 62
        dt = np.int64 if native else object
        X = cells.astype(dt)
        Mlo, Mhi = self.Mlo.astype(dt), self.Mhi.astype(dt)
        lo = np.tile(np.array([int(x) << level for x in self.clo], dtype=object).astype(dt), (len(cells), 1))
        hi = np.tile(np.array([int(x) << level for x in self.chi], dtype=object).astype(dt), (len(cells), 1))
        for j in range(self.shape[1]):
            a = X[:, j:j + 1]
            b = a + 1
            if self.exact:
                m = Mlo[:, j][None, :]
                pa, pb = a * m, b * m
                lo = lo + np.minimum(pa, pb)
                hi = hi + np.maximum(pa, pb)
            else:
                cand = [a * Mlo[:, j][None, :], b * Mlo[:, j][None, :],
                        a * Mhi[:, j][None, :], b * Mhi[:, j][None, :]]
                lo = lo + np.minimum(np.minimum(cand[0], cand[1]), np.minimum(cand[2], cand[3]))
                hi = hi + np.maximum(np.maximum(cand[0], cand[1]), np.maximum(cand[2], cand[3]))
        return lo, hi, native


def _floor_shift(x, s, native):
    if native:
        return x >> s if s < 63 else np.where(x < 0, -1, 0).astype(np.int64)
    return np.array((x >> s).tolist(), dtype=np.int64).reshape(x.shape)


def _ceil_shift(x, s, native):
    return -_floor_shift(-x, s, native)


_MAP_CACHE = {}


def _dyadic(M, c):
    key = (np.asarray(M, dtype=float).tobytes(), np.asarray(M).shape, np.asarray(c, dtype=float).tobytes())
    dm = _MAP_CACHE.get(key)
    if dm is None:
        if len(_MAP_CACHE) > 512:
            _MAP_CACHE.clear()
        dm = _DyadicMap(M, c)
        _MAP_CACHE[key] = dm
    return dm


def image_ranges(cells, level, M, c, half_open=False):
    """Index ranges of the grid cells met by the image of each cell.

    Parameters
    ----------
    cells : (n, q_in) int array
    level : int
    M : (q_out, q_in) array
    c : (q_out,) array
    half_open : bool
        Read cells as ``[i h, (i+1) h)`` instead of closed boxes. Images
        then meet exactly the half-open cells returned.

    Returns
    -------
    jlo, jhi : (n, q_out) int arrays
    """
    cells = np.asarray(cells, dtype=np.int64)
    dm = _dyadic(M, c)
    lo, hi, native = dm.numerators(cells, level)
    s = dm.s
    if not half_open:
        return _ceil_shift(lo, s, native) - 1, _floor_shift(hi, s, native)
    jlo = _floor_shift(lo, s, native)
    # the sup over a half-open cell is attained when no coefficient of
    # the row is positive; with rounded entries stay conservative
    attained = ~dm.has_pos if dm.exact else np.ones(len(dm.has_pos), dtype=bool)
    jhi_closed = _floor_shift(hi, s, native)
    jhi_open = _ceil_shift(hi, s, native) - 1
    jhi = np.where(attained[None, :], jhi_closed, jhi_open)
    return jlo, jhi


def image_cells(cover: BoxCover, M, c, half_open=False) -> BoxCover:
    """Outer cover (at the same level) of the image ``M cover + c``.

    ``M`` may be rectangular, which embeds or projects the cover.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != cover.dim:
        raise DimensionMismatch(f"map expects dimension {M.shape[1]}, cover has {cover.dim}")
    if cover.is_empty():
        return BoxCover.empty(M.shape[0], cover.level)
    jlo, jhi = image_ranges(cover.cells, cover.level, M, c, half_open)
    return BoxCover(_enumerate_ranges(jlo, jhi), cover.level, M.shape[0])


def hutchinson_step(cover: BoxCover, ifs: AffineIFS, half_open: bool = False) -> BoxCover:
    """Outer grid rounding of ``union_maps (M cover + c)``.

    With ``half_open`` the cells are read as ``[i h, (i+1) h)`` on input
    and output (see :func:`image_ranges`).
    """
    if cover.dim != ifs.dim_q:
        raise DimensionMismatch(f"cover dimension {cover.dim} vs IFS dimension {ifs.dim_q}")
    if cover.is_empty():
        return cover
    parts = []
    for M, c in ifs.maps:
        jlo, jhi = image_ranges(cover.cells, cover.level, M, c, half_open=half_open)
        parts.append(_enumerate_ranges(jlo, jhi))
    return BoxCover(np.vstack(parts), cover.level, cover.dim)


# --------------------------------------------------------------------------
# attractors


def contraction_norm(ifs: AffineIFS):
    """Quadratic norm ``||x||_X = sqrt(x^T X x)`` in which every map
    contracts.

    Returns
    -------
    X : ndarray
    rho : float
        Common contraction factor, ``< 1``.

    Raises
    ------
    NotContractive
    """
    mats = [M for M, _ in ifs.maps]
    for M in mats:
        r = max(abs(np.linalg.eigvals(M))) if M.size else 0.0
        if r >= 1.0:
            raise NotContractive(f"spectral radius {r:.6g} >= 1")
    best = None
    candidates = []
    seen = set()
    for M in mats:
        key = M.tobytes()
        if key in seen:
            continue
        seen.add(key)
        candidates.append(scipy.linalg.solve_discrete_lyapunov(M.T, np.eye(M.shape[0])))
    if len(candidates) > 1:
        candidates.append(sum(candidates))
    for X in candidates:
        X = (X + X.T) / 2
        rho = 0.0
        for M in mats:
            G = M.T @ X @ M
            ev = scipy.linalg.eigh(G, X, eigvals_only=True)
            rho = max(rho, math.sqrt(max(ev.max(), 0.0)))
        if best is None or rho < best[1]:
            best = (X, rho)
    X, rho = best
    if not rho < 1.0:
        raise NotContractive(f"no common quadratic norm found (best factor {rho:.6g})")
    # float slack on the factor
    rho = min(1.0 - 1e-12, rho * (1 + 1e-10) + 1e-15)
    if rho >= 1.0:
        raise NotContractive("contraction factor indistinguishable from 1")
    return X, rho


@dataclass(frozen=True, eq=False)
class AttractorApprox:
    """Certified outer approximation of an IFS attractor.

    Attributes
    ----------
    cover : BoxCover
        Contains the attractor and is a fixed point of
        :func:`hutchinson_step`.
    ifs : AffineIFS
    hausdorff_bound : float
        Every point of the cover lies within this max-norm distance of
        the attractor.
    rho : float
        Contraction factor in the norm ``X``.
    X : ndarray
    iterations : int
        Total number of cover iterations over all levels.
    radius : float
        Radius of the starting ball in the ``X`` norm.
    """

    cover: BoxCover
    ifs: AffineIFS
    hausdorff_bound: float
    rho: float
    X: np.ndarray
    iterations: int
    radius: float

    @property
    def level(self) -> int:
        return self.cover.level


def _hull_halfwidth(ifs):
    return max(float(np.abs(M).sum(axis=1).max()) for M, _ in ifs.maps) / 2.0


def _initial_cover(ifs, X, rho, level, budget):
    q = ifs.dim_q
    h = 2.0 ** -level
    lam = scipy.linalg.eigvalsh(X)
    kappa = math.sqrt(lam.max() * q)
    cmax = max(math.sqrt(max(float(c @ X @ c), 0.0)) for _, c in ifs.maps)
    w = _hull_halfwidth(ifs) * h
    R = (cmax + kappa * (w + h / 2)) / (1.0 - rho)
    R = R * (1 + 1e-9) + 1e-12
    Xinv = np.linalg.inv(X)
    ext = R * np.sqrt(np.maximum(np.diag(Xinv), 0.0)) + h
    box = BoxCover.from_box(-ext, ext, level, budget=budget)
    ctr = box.centers()
    vals = np.einsum("ij,jk,ik->i", ctr, X, ctr)
    return box.select(vals <= R * R), R


def compute_attractor(ifs: AffineIFS, level: int, max_iters: int = 10_000,
                      start_level: int = None, budget: int = DEFAULT_CELL_BUDGET,
                      half_open: bool = False, max_cells: int = None) -> AttractorApprox:
    """Outer approximation of the attractor of a contractive IFS.

    The iteration starts from the cells whose centres lie in an ellipsoid
    ``||x||_X <= R``. That starting set is mapped into itself by the
    rounded operator, so the iterates decrease to a fixed cover. To keep
    the cell count small the computation starts on a coarse grid, and
    each fixed cover is subdivided to seed the next finer level.
    Subdivision preserves forward invariance, so the covers are nested
    across levels.

    Parameters
    ----------
    ifs : AffineIFS
        Jointly contractive maps.
    level : int
        Target resolution.
    max_iters : int
        Cap on the total number of cover iterations.
    start_level : int, optional
        First (coarse) level; chosen automatically when omitted.
    budget : int
        Maximal number of cells in any intermediate cover.
    half_open : bool
        Use half-open cells, so that each point of the attractor lies in
        exactly one cell of the cover.
    max_cells : int, optional
        Stop refining (below ``level``) when the subdivided cover would
        exceed this many cells. The returned ``level`` tells where the
        refinement stopped.

    Raises
    ------
    NotContractive, NoFixpointAtResolution, BudgetExceeded
    """
    X, rho = contraction_norm(ifs)
    q = ifs.dim_q
    if start_level is None:
        # coarse enough for a small starting ball
        Xinv = np.linalg.inv(X)
        cmax = max(math.sqrt(max(float(c @ X @ c), 0.0)) for _, c in ifs.maps)
        ext = (cmax + 1.0) / (1 - rho) * np.sqrt(np.diag(Xinv))
        start_level = level
        while start_level > 0 and np.prod(2 * ext * 2.0 ** start_level + 3) > 20_000:
            start_level -= 1
    start_level = min(start_level, level)
    cover, R = _initial_cover(ifs, X, rho, start_level, budget)
    iters = 0
    lev = start_level
    while True:
        while True:
            nxt = hutchinson_step(cover, ifs, half_open).intersection(cover)
            iters += 1
            if nxt == cover:
                break
            cover = nxt
            if iters >= max_iters:
                raise NoFixpointAtResolution(
                    f"cover did not stabilise within {max_iters} iterations at level {lev}", cover=cover)
        if lev == level:
            break
        if max_cells is not None and len(cover) * 2 ** q > max_cells:
            break
        lev += 1
        if len(cover) * 2 ** q > budget:
            raise BudgetExceeded(f"refining to level {lev} needs {len(cover) * 2 ** q} cells")
        cover = cover.refine(lev)
    h = 2.0 ** -lev
    lam = scipy.linalg.eigvalsh(X)
    excess = 0.0 if q == 1 else _hull_halfwidth(ifs) * h
    delta_x = math.sqrt(lam.max() * q) * (h + excess) if q > 1 else math.sqrt(lam.max()) * h
    bound = delta_x / ((1 - rho) * math.sqrt(lam.min()))
    return AttractorApprox(cover, ifs, bound, rho, X, iters, R)


# --------------------------------------------------------------------------
# Minkowski sums and embeddings


def embed_cover(cover: BoxCover, E) -> BoxCover:
    """Outer cover of ``E @ cover`` for a ``d x k`` basis matrix ``E``."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    return image_cells(cover, E, np.zeros(E.shape[0]))


def minkowski_sum(a: BoxCover, b: BoxCover, budget: int = DEFAULT_CELL_BUDGET) -> BoxCover:
    """Outer cover of ``{x + y : x in a, y in b}``.

    Covers must share dimension; the coarser one is refined first.
    Two closed cells add up to a box two cells wide, hence the
    ``{0, 1}^dim`` offsets.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    if a.level != b.level:
        lev = max(a.level, b.level)
        a, b = a.refine(lev), b.refine(lev)
    if a.is_empty() or b.is_empty():
        return BoxCover.empty(a.dim, a.level)
    if len(a) < len(b):
        a, b = b, a
    n_out = len(a) * len(b) * 2 ** a.dim
    if n_out > 50 * budget:
        raise BudgetExceeded(f"Minkowski sum needs {n_out} cell candidates")
    offs = np.stack(np.meshgrid(*[np.arange(2)] * a.dim, indexing="ij"), -1).reshape(-1, a.dim)
    shifts = _unique_rows((b.cells[:, None, :] + offs[None]).reshape(-1, a.dim))
    acc = None
    chunk = max(1, budget // max(1, len(a)))
    for i in range(0, len(shifts), chunk):
        part = (a.cells[None, :, :] + shifts[i:i + chunk, None, :]).reshape(-1, a.dim)
        part = _unique_rows(part)
        acc = part if acc is None else _unique_rows(np.vstack([acc, part]))
        if len(acc) > budget:
            raise BudgetExceeded(f"Minkowski sum exceeds {budget} cells")
    return BoxCover(acc, a.level, a.dim)


# --------------------------------------------------------------------------
# the quantization strip


class Strip:
    """Open strip ``(-1, 1)^p x R^(d-p)`` on the first ``p`` coordinates.

    :meth:`classify` labels closed cells INSIDE (in the open strip),
    BOUNDARY (meeting ``|x_j| = 1`` for some ``j <= p`` and not leaving
    the closed strip) or OUTSIDE (disjoint from the closed strip).
    """

    def __init__(self, p: int, offset: int = 0):
        self.p = int(p)
        self.offset = int(offset)

    def __repr__(self):
        return f"Strip(p={self.p})"

    def classify(self, cells, level) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64)
        n = 1 << level
        sub = cells[:, self.offset:self.offset + self.p]
        outside = np.any((sub < -n - 1) | (sub > n), axis=1)
        touch = np.any((sub <= -n) | (sub >= n - 1), axis=1)
        out = np.full(len(cells), INSIDE, dtype=object)
        out[touch] = BOUNDARY
        out[outside] = OUTSIDE
        return out

    def meets(self, cells, level) -> np.ndarray:
        """Cells having points in the open strip."""
        cells = np.asarray(cells, dtype=np.int64)
        n = 1 << level
        sub = cells[:, self.offset:self.offset + self.p]
        return np.all((sub >= -n) & (sub <= n - 1), axis=1)


def strip_predicate(cover: BoxCover, p: int) -> str:
    """Position of a cover relative to ``(-1, 1)^p x R^(d-p)``.

    Returns
    -------
    {"Inside", "Outside", "Boundary"}
        Inside when every cell lies in the open strip; Boundary when some
        cell touches ``|x_j| = 1``; Outside otherwise (some cell misses the
        closed strip, none touches its boundary).
    """
    if cover.is_empty():
        return INSIDE
    lab = Strip(p).classify(cover.cells, cover.level)
    if np.any(lab == BOUNDARY):
        return BOUNDARY
    if np.any(lab == OUTSIDE):
        return OUTSIDE
    return INSIDE


def separation_check(cover: BoxCover, ifs: AffineIFS, p: int, proper=None) -> dict:
    """One-step separation of the strip part of a cover.

    For every map flagged proper (default: nonzero translate), decide
    whether the image of ``cover ∩ strip`` is certifiably disjoint from
    ``cover ∩ strip``. Improper maps are reported as ``None``.

    Returns
    -------
    dict
        Map label -> True (disjoint), False (overlap possible) or None.
    """
    strip = Strip(p)
    inner = cover.select(strip.meets(cover.cells, cover.level))
    out = {}
    for idx, (M, c) in enumerate(ifs.maps):
        is_proper = bool(np.any(c != 0)) if proper is None else bool(proper[idx])
        label = ifs.labels[idx]
        if not is_proper:
            out[label] = None
            continue
        img = image_cells(inner, M, c)
        img = img.select(strip.meets(img.cells, img.level))
        out[label] = img.intersection(inner).is_empty()
    return out


# --------------------------------------------------------------------------
# export


def cover_to_csv(cover: BoxCover) -> str:
    """``dim,level`` header line, then one comma separated index row per cell."""
    lines = [f"dim,level", f"{cover.dim},{cover.level}"]
    lines.extend(",".join(str(int(x)) for x in row) for row in cover.cells)
    return "\n".join(lines) + "\n"


def cover_from_csv(text: str) -> BoxCover:
    rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
    if len(rows) < 2 or rows[0].replace(" ", "") != "dim,level":
        raise ValueError("missing 'dim,level' header")
    dim, level = (int(x) for x in rows[1].split(","))
    cells = [[int(x) for x in r.split(",")] for r in rows[2:]]
    if any(len(c) != dim for c in cells):
        raise ValueError("row length does not match dim")
    return BoxCover(np.array(cells, dtype=np.int64).reshape(-1, dim), level, dim)


def cover_to_svg(cover: BoxCover, plane=(0, 1), width: int = 600, title: str = None,
                 strip_p: int = None) -> str:
    """Plain SVG 1.1 drawing of a 2-D projection, one rect per cell.

    Parameters
    ----------
    plane : pair of int
        Coordinate axes shown horizontally and vertically. A 1-D cover is
        drawn on a thin band.
    strip_p : int, optional
        Draw the lines ``x = +-1`` (and ``y = +-1`` when ``strip_p >= 2``
        and the vertical axis is quantized).
    """
    if cover.dim == 1:
        cells = np.hstack([cover.cells, np.zeros((len(cover), 1), dtype=np.int64)])
        proj = BoxCover(cells, cover.level, 2)
        ax = (0, 1)
    else:
        ax = tuple(int(a) for a in plane)
        if len(ax) != 2 or ax[0] == ax[1] or max(ax) >= cover.dim or min(ax) < 0:
            raise ValueError(f"invalid projection plane {plane} for dimension {cover.dim}")
        proj = cover.project(ax)
    h = proj.h
    if proj.is_empty():
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    else:
        lo, hi = proj.bounds()
    span = np.maximum(hi - lo, h)
    pad = 0.05 * float(span.max())
    lo, hi = lo - pad, hi + pad
    span = hi - lo
    scale = width / float(span[0])
    height = max(int(round(float(span[1]) * scale)), 40)
    if height > 4 * width:
        scale = 4 * width / float(span[1])
        height = 4 * width
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{int(round(float(span[0]) * scale))}" height="{height}">']
    if title:
        out.append(f"<title>{title}</title>")
    out.append('<g fill="#1f3b73" stroke="none">')
    w = h * scale
    for i, j in proj.cells.tolist():
        x = (i * h - lo[0]) * scale
        y = (hi[1] - (j + 1) * h) * scale
        out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{w:.3f}"/>')
    out.append("</g>")
    if strip_p:
        out.append('<g stroke="#c0392b" stroke-width="1" stroke-dasharray="4,3">')
        if ax[0] < strip_p:
            for v in (-1.0, 1.0):
                x = (v - lo[0]) * scale
                out.append(f'<line x1="{x:.3f}" y1="0" x2="{x:.3f}" y2="{height}"/>')
        if cover.dim > 1 and ax[1] < strip_p:
            for v in (-1.0, 1.0):
                y = (hi[1] - v) * scale
                out.append(f'<line x1="0" y1="{y:.3f}" x2="{width}" y2="{y:.3f}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
