"""Decision pipelines.

* :func:`decide_uldi`: uniform left D-invertibility of a canonical
  system, from the attractor of the difference system, the shift graph
  over its pieces and the exact window language.
* :func:`decide_uli_contractive`: uniform left invertibility of a jointly
  contractive system, from the doubled system and the quantization set.
* :func:`classify_1d`: the complete table for scalar systems.
* :func:`brute_force_oracle`: independent check by orbit enumeration.
* :func:`lw_matrix`, :func:`kronecker_witness`: helpers around algebraic
  independence and the density of fractional parts.

Semantics. An orbit of the difference system *remains in the strip*
when ``|pi_p z(t)| < 1`` for every ``t >= 0``. The system is ULDI in
``k`` steps with waiting time ``l`` when no such orbit has a nonzero
input at a time ``m >= l`` and stays in the strip up to ``m + k``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import datetime
import hashlib
import itertools
import math

import numpy as np
import yaml

from .attractor import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    BoxCover,
    Strip,
    compute_attractor,
    embed_cover,
    image_cells,
    minkowski_sum,
    separation_check,
    strip_predicate,
    DEFAULT_CELL_BUDGET,
)
from .exceptions import (
    BudgetExceeded,
    InvalidSystem,
    NotContractive,
    RepeatedExponent,
    UnboundedTrap,
)
from .invgraph import build_graph, has_arbitrarily_long_proper_paths, longest_proper_run, prune_internal
from .polyhedral import WindowProblem, explore_language, periodic_orbit
from .spectral import invariant_subspace_in_kernel, spectral_split, trap_set
from .system_model import (
    AffineIFS,
    QuantizedSystem,
    build_difference,
    build_doubled,
    build_inverse,
    canonicalize,
    to_fraction,
)

__all__ = [
    "ULDI",
    "ULI",
    "NOT_ULDI",
    "NOT_ULI",
    "INCONCLUSIVE",
    "Verdict",
    "SeparationCert",
    "PathWitness",
    "AttractorInStrip",
    "OneDRule",
    "QuantizationSetQ",
    "UldiAttractors",
    "uldi_attractors",
    "decide_uldi",
    "decide_uli_contractive",
    "classify_1d",
    "scalar_system",
    "OracleReport",
    "brute_force_oracle",
    "lw_matrix",
    "kronecker_witness",
    "replay_witness",
    "verdict_report",
    "REPORT_VERSION",
]

ULDI = "ULDI"
ULI = "ULI"
NOT_ULDI = "NotULDI"
NOT_ULI = "NotULI"
INCONCLUSIVE = "Inconclusive"

REPORT_VERSION = 1
WORK_CELLS = 300_000


# --------------------------------------------------------------------------
# certificates


@dataclass
class SeparationCert:
    """Evidence that nonzero inputs are detected.

    Attributes
    ----------
    method : {"polyhedral", "graph", "quantization-set"}
        ``polyhedral``: no feasible in-strip window of length
        ``waiting_l + steps_k`` carries a nonzero symbol at position
        ``waiting_l`` (every window decided in rational arithmetic).
        ``graph``: the shift graph over attractor pieces has no
        arbitrarily long proper walk. ``quantization-set``: the image of
        the quantization set under every pair of distinct inputs misses
        it.
    labels : dict
        Per symbol (or input pair) separation flags of the one-step check
        on the attractor cover, when computed.
    depth : int
        Word length of the polyhedral language or graph depth.
    sizes : list of int
        Language sizes by length (polyhedral).
    exact : bool
    """

    method: str
    labels: dict = field(default_factory=dict)
    depth: int = 0
    sizes: list = field(default_factory=list)
    exact: bool = True

    kind = "SeparationCert"


@dataclass
class PathWitness:
    """Orbit driven by a nonzero input that never leaves the safe set.

    ``word`` is one period of a periodic input (labels), ``orbit`` the
    states of one period. ``exact`` marks rational states.
    """

    word: tuple
    orbit: list
    periodic: bool = True
    exact: bool = False
    replay_ok: bool = None

    kind = "PathWitness"


@dataclass
class AttractorInStrip:
    """The difference attractor lies inside the open strip."""

    cover: BoxCover
    predicate: str
    subspace: str = "R^d"

    kind = "AttractorInStrip"


@dataclass
class OneDRule:
    """Rule of the scalar classification table."""

    rule: str
    params: dict = field(default_factory=dict)

    kind = "OneDRule"


@dataclass
class Verdict:
    """Three-valued analysis result.

    Attributes
    ----------
    property : {"ULDI", "ULI", "NotULDI", "NotULI", "Inconclusive"}
    steps_k, waiting_l : int or None
    certificate : SeparationCert, PathWitness, AttractorInStrip, OneDRule or None
    resolution_level : int or None
    question : {"ULDI", "ULI"}
        Property that was asked for (relevant for Inconclusive).
    assumptions : dict
        Declared ``algebraically_independent`` / ``transcendental``
        flags. They are asserted, never checked.
    companion : Verdict or None
        Status of the other property when it follows from this one.
    notes : list of str
    artifacts : dict
        Covers and other by-products for export.
    """

    property: str
    steps_k: int = None
    waiting_l: int = None
    certificate: object = None
    resolution_level: int = None
    question: str = ULDI
    assumptions: dict = field(default_factory=dict)
    companion: "Verdict" = None
    notes: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def decided(self) -> bool:
        return self.property != INCONCLUSIVE

    @property
    def uli(self):
        """The ULI status attached to this verdict (itself or the companion)."""
        if self.question == ULI:
            return self
        return self.companion

    def __str__(self):
        s = self.property
        if self.steps_k is not None:
            s += f"(k={self.steps_k}"
            s += f", l={self.waiting_l})" if self.waiting_l is not None else ")"
        if self.certificate is not None:
            s += f" [{self.certificate.kind}]"
        return s


# --------------------------------------------------------------------------
# quantization set


class QuantizationSetQ:
    """Pairs of states of ``R^d`` sharing a quantization cell.

    ``(x, x') in Q`` iff ``floor(pi_p x) == floor(pi_p x')``. Box covers in
    ``R^{2d}`` are read with half-open cells, on which the floor is
    constant, so every cell is either inside ``Q`` or disjoint from it.
    """

    def __init__(self, d: int, p: int):
        self.d = int(d)
        self.p = int(p)

    def __repr__(self):
        return f"QuantizationSetQ(d={self.d}, p={self.p})"

    def contains(self, x, xp) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        xp = np.asarray(xp, dtype=float).reshape(-1)
        return bool(np.array_equal(np.floor(x[:self.p]), np.floor(xp[:self.p])))

    def _same(self, cells, level):
        cells = np.asarray(cells, dtype=np.int64)
        a = cells[:, :self.p] >> level
        b = cells[:, self.d:self.d + self.p] >> level
        return np.all(a == b, axis=1)

    def classify(self, cells, level) -> np.ndarray:
        out = np.full(len(cells), OUTSIDE, dtype=object)
        out[self._same(cells, level)] = INSIDE
        return out

    def meets(self, cells, level) -> np.ndarray:
        return self._same(cells, level)


# --------------------------------------------------------------------------
# helpers


def _fr(x):
    return x if isinstance(x, Fraction) else to_fraction(x)


def _label(v):
    v = tuple(v)
    if len(v) == 1:
        return _num(v[0])
    return [_num(x) for x in v]


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def _exact_affine(A_exact, translates, word):
    """Exact periodic point of ``z -> A z + t_s`` composed along ``word``.

    Returns the states of one period or None (singular system)."""
    import sympy
    d = len(A_exact)
    A = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in A_exact])
    off = sympy.zeros(d, 1)
    P = sympy.eye(d)
    for s in word:
        t = sympy.Matrix([sympy.Rational(x.numerator, x.denominator) for x in translates[s]])
        off = A * off + t
        P = A * P
    M = sympy.eye(d) - P
    if M.det() == 0:
        return None
    z = M.LUsolve(off)
    orbit = []
    for s in word:
        orbit.append([Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in z])
        t = sympy.Matrix([sympy.Rational(x.numerator, x.denominator) for x in translates[s]])
        z = A * z + t
    return orbit


def _float_periodic(A, translates, word):
    d = A.shape[0]
    off = np.zeros(d)
    P = np.eye(d)
    for s in word:
        off = A @ off + translates[s]
        P = A @ P
    try:
        z = np.linalg.solve(np.eye(d) - P, off)
    except np.linalg.LinAlgError:
        return None
    orbit = []
    for s in word:
        orbit.append(z.copy())
        z = A @ z + translates[s]
    return orbit


def replay_witness(diff, witness: PathWitness, periods: int = 3, tol: float = 1e-9) -> bool:
    """Replay a witness through the difference system.

    The word is repeated ``periods`` times from the first orbit state;
    every state must keep ``|pi_p z| <= 1 + tol``. Exact witnesses are
    replayed in rational arithmetic (and must stay in the open strip).
    """
    labels = list(diff.diff_alphabet)
    idx = [labels.index(tuple(_fr(x) for x in (w if isinstance(w, (list, tuple)) else [w])))
           for w in witness.word]
    p = diff.p
    if witness.exact and diff.A_exact is not None:
        prob = WindowProblem(diff)
        states = prob.states([_fr(x) for x in witness.orbit[0]], idx * periods)
        return all(prob.in_strip(z) for z in states)
    A = np.asarray(diff.A, dtype=float)
    T = diff.ifs().translates()
    z = np.array([float(x) for x in witness.orbit[0]])
    for s in idx * periods:
        if np.any(np.abs(z[:p]) > 1 + tol):
            return False
        z = A @ z + T[s]
    return bool(np.all(np.abs(z[:p]) <= 1 + tol))


def _has_exact(sys) -> bool:
    return sys.A_exact is not None and sys.B_exact is not None


def _assumptions(assume):
    assume = dict(assume or {})
    return {"algebraically_independent": bool(assume.get("algebraically_independent", False)),
            "transcendental": bool(assume.get("transcendental", False))}


def _uli_from_uldi(v: Verdict, assumptions) -> Verdict:
    """ULI status implied by a ULDI verdict.

    ULDI implies ULI in the same number of steps. The converse direction
    (NotULDI implies NotULI) is only available under the declared
    algebraic independence assumption.
    """
    if v.property == ULDI:
        return Verdict(ULI, v.steps_k, v.waiting_l, v.certificate, v.resolution_level,
                       question=ULI, assumptions=assumptions, notes=["implied by the ULDI certificate"])
    if v.property == NOT_ULDI and (assumptions.get("algebraically_independent")
                                   or assumptions.get("transcendental")):
        return Verdict(NOT_ULI, None, None, v.certificate, v.resolution_level, question=ULI,
                       assumptions=assumptions,
                       notes=["NotULDI implies NotULI under the declared independence assumption"])
    return Verdict(INCONCLUSIVE, resolution_level=v.resolution_level, question=ULI, assumptions=assumptions,
                   notes=["no bridge from the ULDI verdict without an independence assumption"])


# --------------------------------------------------------------------------
# ULDI


@dataclass
class UldiAttractors:
    """Attractor covers of the difference system.

    ``Tc`` is the attractor of the forward difference maps restricted to
    ``E_c`` (in ``E_c`` coordinates), ``Te`` the attractor of the inverse
    maps on ``E_e``; ``T`` covers ``Tc + Te`` embedded in ``R^d``.
    """

    diff: object
    split: object
    chain: object
    Tc: object = None
    Te: object = None
    T: BoxCover = None
    level_T: int = None


def _embedded_level(level, covers, budget):
    # lower the level of the embedded sum until the product fits
    lev = level
    while lev > 0:
        n = 1
        for c, dim_in, dim_out in covers:
            n *= max(1, len(c.coarsen(min(lev, c.level)))) * 2 ** max(0, dim_out - dim_in)
        if n * 2 ** covers[0][2] <= budget:
            return lev
        lev -= 1
    return 0


def uldi_attractors(sys: QuantizedSystem, level: int = 8, budget: int = DEFAULT_CELL_BUDGET,
                    work_cells: int = WORK_CELLS) -> UldiAttractors:
    """Compute ``T^c``, ``T^e`` and ``T = T^c + T^e``.

    Each attractor is refined up to ``level`` or until its cover would
    exceed ``work_cells`` cells; the sum is formed at the finest level
    that fits in ``budget``.

    Raises
    ------
    MarginalSpectrum, UnboundedTrap, BudgetExceeded
    """
    if not sys.is_canonical:
        sys = canonicalize(sys)
    diff = build_difference(sys)
    split = spectral_split(diff.A)
    chain = invariant_subspace_in_kernel(diff.A, diff.p)
    if chain.verdict:
        raise UnboundedTrap("A has an invariant subspace inside the unquantized coordinates", chain=chain)
    ifs = diff.ifs()
    res = UldiAttractors(diff, split, chain)
    parts = []
    if split.dc:
        ifs_c = ifs.restrict(split.Lc, split.Ec_basis)
        res.Tc = compute_attractor(ifs_c, level, budget=budget, max_cells=work_cells)
        parts.append((res.Tc.cover, split.dc, diff.dim_d, split.Ec_basis))
    if split.de:
        ifs_e = build_inverse(ifs.restrict(split.Le, split.Ee_basis))
        res.Te = compute_attractor(ifs_e, level, budget=budget, max_cells=work_cells)
        parts.append((res.Te.cover, split.de, diff.dim_d, split.Ee_basis))
    lev = _embedded_level(level, [(c, a, b) for c, a, b, _ in parts], budget)
    emb = [embed_cover(c.coarsen(min(lev, c.level)), E) for c, _, _, E in parts]
    T = emb[0]
    for other in emb[1:]:
        T = minkowski_sum(T, other, budget=budget)
    res.T = T
    res.level_T = T.level
    return res


def _coordinate_strip(split, p):
    # E_c coordinates and strip width when E_c is spanned by unit vectors
    E = split.Ec_basis
    if not split.dc:
        return None
    idx = []
    for col in E.T:
        nz = np.flatnonzero(col)
        if len(nz) != 1 or col[nz[0]] != 1.0:
            return None
        idx.append(int(nz[0]))
    if idx != sorted(idx):
        return None
    pc = sum(1 for i in idx if i < p)
    if pc == 0:
        return None
    return pc


def _fixed_point_witness(diff):
    """Exact (or float) fixed point of a nonzero constant input lying in the strip."""
    labels = list(diff.diff_alphabet)
    exact = diff.A_exact is not None and diff.B_exact is not None
    A = np.asarray(diff.A, dtype=float)
    T = diff.ifs().translates()
    prob = WindowProblem(diff) if exact else None
    for s, v in enumerate(labels):
        if diff.is_zero(s):
            continue
        if exact:
            orbit = periodic_orbit(prob, (s,))
            if orbit is not None:
                return PathWitness((_label(v),), [[_num(x) for x in z] for z in orbit], True, True)
        else:
            orbit = _float_periodic(A, T, (s,))
            if orbit is not None and np.all(np.abs(orbit[0][:diff.p]) < 1):
                return PathWitness((_label(v),), [[float(x) for x in orbit[0]]], True, False)
    return None


def _cycle_witness(diff, word):
    """Check a periodic input word; returns a PathWitness or None."""
    labels = list(diff.diff_alphabet)
    word = tuple(word)
    if diff.A_exact is not None and diff.B_exact is not None:
        orbit = periodic_orbit(WindowProblem(diff), word)
        if orbit is None:
            return None
        return PathWitness(tuple(_label(labels[s]) for s in word),
                           [[_num(x) for x in z] for z in orbit], True, True)
    A = np.asarray(diff.A, dtype=float)
    orbit = _float_periodic(A, diff.ifs().translates(), word)
    if orbit is None or any(np.any(np.abs(z[:diff.p]) >= 1) for z in orbit):
        return None
    return PathWitness(tuple(_label(labels[s]) for s in word), [[float(x) for x in z] for z in orbit],
                       True, False)


def _graph_stage(att: UldiAttractors, k_max, vertex_budget, strict):
    """Shift graph over pieces of ``T`` confined to the strip.

    Returns ``(status, k, steps, witness, note)`` with status in
    ULDI / NotULDI / Inconclusive.
    """
    diff = att.diff
    ifs = diff.ifs()
    S = Strip(diff.p)
    proper = tuple(not diff.is_zero(s) for s in range(len(diff.diff_alphabet)))
    note = ""
    for k in range(k_max + 1):
        try:
            g = build_graph(att.T, ifs, k, proper=proper, confine=S, vertex_budget=vertex_budget)
        except BudgetExceeded as exc:
            return INCONCLUSIVE, k, None, None, f"graph budget: {exc}"
        straddle = [w for w, pc in g.pieces.items() if S.classify(pc.cells, pc.level).tolist().count(INSIDE) != len(pc)]
        if strict and straddle:
            pr = prune_internal(g, S, strict=True)
            if pr.inconclusive:
                note = f"{len(straddle)} pieces meet the strip boundary at depth {k}"
                continue
        # pieces already lie in cells meeting the strip; keeping the
        # straddling ones over-approximates the in-strip orbits
        long_paths, wit = has_arbitrarily_long_proper_paths(g)
        if not long_paths:
            run = longest_proper_run(g)
            return ULDI, k, run + 1, None, "no arbitrarily long proper walk"
        if wit is not None and wit.periodic:
            pw = _cycle_witness(diff, wit.lead)
            if pw is not None:
                return NOT_ULDI, k, None, pw, "periodic orbit along a graph cycle"
        note = f"proper cycles remain at depth {k}"
    return INCONCLUSIVE, k_max, None, None, note


def _retry(level):
    if level + 2 <= 16:
        return f"suggestion: retry at level {level + 2}"
    return "finest supported level reached"


def decide_uldi(sys: QuantizedSystem, level: int = 8, k_max: int = 4, budget: int = DEFAULT_CELL_BUDGET,
                strict_boundary: bool = False, max_word: int = 8, lp_budget: int = 20_000,
                vertex_budget: int = 1_000_000, assume=None) -> Verdict:
    """Decide uniform left D-invertibility.

    Pipeline: difference system, spectral splitting, attractor covers
    ``T^c`` (forward maps on ``E_c``) and ``T^e`` (inverse maps on
    ``E_e``), ``T = T^c + T^e`` and its position with respect to the
    strip.

    * Inside: every bounded difference orbit stays in the strip, in
      particular the fixed point of any nonzero constant input; NotULDI.
    * Otherwise the shift graph over pieces of ``T`` (confined to the
      strip) and, for systems with rational entries, the exact window
      language decide. A boundary contact with ``strict_boundary`` set
      stops the analysis with Inconclusive.

    Parameters
    ----------
    sys : QuantizedSystem
    level : int
        Cover resolution ``2^-level``.
    k_max : int
        Largest graph depth.
    budget : int
        Cell budget of the covers.
    strict_boundary : bool
    max_word, lp_budget : int
        Limits of the exact window stage.
    vertex_budget : int
    assume : dict, optional
        Declared independence flags; they only affect the ULI companion.

    Raises
    ------
    MarginalSpectrum, UnboundedTrap, BudgetExceeded
    """
    assumptions = _assumptions(assume)
    if not sys.is_canonical:
        sys = canonicalize(sys)
    att = uldi_attractors(sys, level, budget)
    diff = att.diff
    pred = strip_predicate(att.T, diff.p)
    artifacts = {"T": att.T, "Tc": att.Tc, "Te": att.Te, "predicate": pred, "split": att.split,
                 "chain": att.chain}
    notes = [f"T predicate: {pred}", f"T level: {att.level_T}"]

    def done(v: Verdict) -> Verdict:
        v.assumptions = assumptions
        v.artifacts = artifacts
        v.notes = notes + v.notes
        v.companion = _uli_from_uldi(v, assumptions)
        if isinstance(v.certificate, PathWitness):
            v.certificate.replay_ok = replay_witness(diff, v.certificate)
        return v

    if pred == INSIDE:
        wit = _fixed_point_witness(diff)
        cert = AttractorInStrip(att.T, pred, "E_e" if att.split.dc == 0 else "R^d")
        v = Verdict(NOT_ULDI, certificate=cert, resolution_level=level)
        if wit is not None:
            wit.replay_ok = replay_witness(diff, wit)
            v.artifacts["witness"] = wit
            v.notes.append("fixed point of constant input " + str(wit.word[0]) + " lies in the strip")
        out = done(v)
        out.artifacts["witness"] = wit
        return out
    if pred == BOUNDARY and strict_boundary:
        return done(Verdict(INCONCLUSIVE, resolution_level=level,
                            notes=["T meets the strip boundary (strict mode)", _retry(level)]))
    labels = {}
    pc = _coordinate_strip(att.split, diff.p)
    if att.Tc is not None and pc is not None:
        sep = separation_check(att.Tc.cover, att.Tc.ifs, pc)
        labels = {str(_label(k)): v for k, v in sep.items() if v is not None}
    exact = _has_exact(sys)

    def polyhedral():
        res = explore_language(diff, max_length=max_word, budget=lp_budget)
        notes.append(f"window language: {res.status} ({res.reason}; sizes {res.sizes}, {res.lp_count} LPs)")
        if res.status == ULDI:
            cert = SeparationCert("polyhedral", labels, res.depth, res.sizes, res.exact)
            return Verdict(ULDI, res.steps_k, res.waiting_l, cert, level)
        if res.status == NOT_ULDI:
            lab = list(diff.diff_alphabet)
            wit = PathWitness(tuple(_label(lab[s]) for s in res.witness_word),
                              [[_num(x) for x in z] for z in res.witness_orbit], True, True)
            return Verdict(NOT_ULDI, certificate=wit, resolution_level=level)
        return None

    if pred == BOUNDARY and exact:
        v = polyhedral()
        if v is not None:
            return done(v)
    status, k, steps, wit, note = _graph_stage(att, k_max, vertex_budget, strict_boundary)
    notes.append(f"graph stage: {status} at depth {k} ({note})")
    if status == NOT_ULDI:
        return done(Verdict(NOT_ULDI, certificate=wit, resolution_level=level))
    if status == ULDI:
        cert = SeparationCert("graph", labels, k, [], False)
        v = Verdict(ULDI, steps, None, cert, level,
                    notes=["certificate holds once the orbit has entered the cover of T"])
        return done(v)
    if pred != BOUNDARY and exact:
        v = polyhedral()
        if v is not None:
            return done(v)
    if not exact:
        notes.append("exact window stage skipped: entries are not rational")
    return done(Verdict(INCONCLUSIVE, resolution_level=level, notes=[_retry(level)]))


# --------------------------------------------------------------------------
# ULI, contractive case


def _qpart(cover: BoxCover, d: int, p: int) -> BoxCover:
    """Cells of ``cover x cover`` inside ``Q`` (half-open cells)."""
    cells = cover.cells
    L = cover.level
    keys = cells[:, :p] >> L
    order = np.lexsort(keys.T[::-1]) if p > 1 else np.argsort(keys[:, 0], kind="stable")
    keys, cells = keys[order], cells[order]
    _, starts = np.unique(keys, axis=0, return_index=True)
    bounds = list(starts) + [len(cells)]
    blocks = []
    for a, b in zip(bounds, bounds[1:]):
        blk = cells[a:b]
        n = len(blk)
        left = np.repeat(blk, n, axis=0)
        right = np.tile(blk, (n, 1))
        blocks.append(np.hstack([left, right]))
    if not blocks:
        return BoxCover.empty(2 * d, L)
    return BoxCover(np.vstack(blocks), L, 2 * d)


def scalar_system(a, alphabet) -> QuantizedSystem:
    """``x(k+1) = a x(k) + u(k)``, ``y = floor(x)``."""
    return QuantizedSystem([[a]], [[1]], [[u] for u in alphabet], 1)


def decide_uli_contractive(sys: QuantizedSystem, level: int = 6, k_max: int = 4,
                           budget: int = DEFAULT_CELL_BUDGET, vertex_budget: int = 1_000_000,
                           assume=None) -> Verdict:
    """Uniform left invertibility of a jointly contractive system.

    The doubled system acts on ``R^{2d}``; its attractor is the product
    of two copies of the attractor ``X`` of the system, and every orbit
    eventually enters the cover of ``X``. ULI in one step holds when, for
    every pair ``u != u'``, the image of ``(X x X) ∩ Q`` under the paired
    map misses ``Q``. Otherwise a shift graph over pieces confined to
    ``Q`` is explored; a cycle through a pair ``u != u'`` is checked for
    an exact periodic orbit in ``Q`` (NotULI).

    Raises
    ------
    NotContractive
    """
    assumptions = _assumptions(assume)
    if not sys.is_canonical:
        sys = canonicalize(sys)
    d, p = sys.dim_d, sys.p
    fwd = sys.ifs()
    X = compute_attractor(fwd, level, budget=budget, half_open=True)
    Q = QuantizationSetQ(d, p)
    dbl = build_doubled(sys)
    difs = dbl.ifs()
    H = _qpart(X.cover, d, p)
    if len(H) > budget:
        raise BudgetExceeded(f"{len(H)} cells in (X x X) ∩ Q exceed the budget")
    proper = tuple(u != up for u, up in dbl.pairs)
    artifacts = {"X": X, "XxX_in_Q": H}
    base = dict(resolution_level=level, question=ULI, assumptions=assumptions, artifacts=artifacts)
    labels = {}
    ok = True
    for (M, c), pair, pr in zip(difs.maps, dbl.pairs, proper):
        if not pr:
            continue
        img = image_cells(H, M, c, half_open=True)
        hit = img.select(Q.meets(img.cells, img.level))
        # both components must be reachable states
        hit = hit.select(X.cover.contains_cells(hit.cells[:, :d]) & X.cover.contains_cells(hit.cells[:, d:]))
        sep = hit.is_empty()
        labels[f"{_label(pair[0])},{_label(pair[1])}"] = sep
        ok &= sep
    if ok:
        return Verdict(ULI, 1, None, SeparationCert("quantization-set", labels, 1), **base,
                       notes=["certificate holds once the orbit has entered the attractor cover"])
    # constant-input witnesses
    wit = _uli_fixed_pair(sys)
    if wit is not None:
        return Verdict(NOT_ULI, None, None, wit, **base,
                       notes=["two fixed points in one quantization cell"])
    wit = _uli_merge_pair(sys)
    if wit is not None:
        return Verdict(NOT_ULI, None, None, wit, **base,
                       notes=["two states of one cell merge after one step under distinct inputs"])
    wit = _uli_periodic_search(sys, dbl, proper)
    if wit is not None:
        return Verdict(NOT_ULI, None, None, wit, **base,
                       notes=["periodic pair of orbits in Q with distinct inputs"])
    keep = _DoubledConfine(Q, X.cover, d)
    for k in range(1, k_max + 1):
        try:
            g = build_graph(H, difs, k, proper=proper, confine=keep, vertex_budget=vertex_budget,
                            half_open=True)
        except BudgetExceeded:
            break
        long_paths, gw = has_arbitrarily_long_proper_paths(g)
        if not long_paths:
            run = longest_proper_run(g)
            return Verdict(ULI, run + 1, None, SeparationCert("quantization-set", labels, k), **base,
                           notes=["certificate holds once the orbit has entered the attractor cover"])
        if gw is not None and gw.periodic:
            pw = _uli_cycle_witness(sys, dbl, gw.lead)
            if pw is not None:
                return Verdict(NOT_ULI, None, None, pw, **base,
                               notes=["periodic pair of orbits in Q with distinct inputs"])
    return Verdict(INCONCLUSIVE, **base, notes=[f"undecided up to graph depth {k_max}"])


class _DoubledConfine:
    # cells of Q whose two halves lie in the attractor cover
    def __init__(self, Q, cover, d):
        self.Q, self.cover, self.d = Q, cover, d

    def meets(self, cells, level):
        m = self.Q.meets(cells, level)
        return m & self.cover.contains_cells(cells[:, :self.d]) & self.cover.contains_cells(cells[:, self.d:])

    def classify(self, cells, level):
        return self.Q.classify(cells, level)


def _sys_translates_exact(sys):
    B = sys.B_exact or tuple(tuple(Fraction(float(x)) for x in r) for r in sys.B)
    out = []
    for u in sys.alphabet:
        out.append(tuple(sum((B[i][j] * u[j] for j in range(len(u))), Fraction(0)) for i in range(len(B))))
    return out


def _uli_fixed_pair(sys):
    d, p = sys.dim_d, sys.p
    fixed = []
    exact = _has_exact(sys)
    T = _sys_translates_exact(sys) if exact else sys.ifs().translates()
    for s in range(len(sys.alphabet)):
        if exact:
            orb = _exact_affine(sys.A_exact, T, (s,))
        else:
            orb = _float_periodic(np.asarray(sys.A, dtype=float), T, (s,))
        fixed.append(None if orb is None else orb[0])
    for (i, x), (j, y) in itertools.combinations(enumerate(fixed), 2):
        if x is None or y is None:
            continue
        fx = [math.floor(v) for v in x[:p]]
        fy = [math.floor(v) for v in y[:p]]
        if fx == fy:
            lab = (_label(sys.alphabet[i]), _label(sys.alphabet[j]))
            orbit = [[_num(v) for v in list(x) + list(y)]]
            return PathWitness((lab,), orbit, True, exact)
    return None


def _uli_merge_pair(sys):
    """States ``x, x + delta`` of one cell with ``A x + B u = A (x + delta) + B u'``.

    Then ``delta = A^-1 B (u - u')`` and both orbits coincide after one
    step, so their outputs agree forever. Exact when the entries are.
    """
    d, p = sys.dim_d, sys.p
    exact = _has_exact(sys)
    if exact:
        import sympy
        A = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in sys.A_exact])
        if A.det() == 0:
            return None
        Ainv = A.inv()
        T = _sys_translates_exact(sys)
    else:
        A = np.asarray(sys.A, dtype=float)
        if abs(np.linalg.det(A)) < 1e-12:
            return None
        Ainv = np.linalg.inv(A)
        T = sys.ifs().translates()
    for i, j in itertools.permutations(range(len(sys.alphabet)), 2):
        if exact:
            dt = sympy.Matrix([sympy.Rational(a.numerator, a.denominator) - sympy.Rational(b.numerator, b.denominator)
                               for a, b in zip(T[i], T[j])])
            delta = [Fraction(str(v)) for v in Ainv * dt]
        else:
            delta = list(Ainv @ (np.asarray(T[i]) - np.asarray(T[j])))
        if not all(abs(delta[k]) < 1 for k in range(p)):
            continue
        # x_k in [max(0, -delta_k), min(1, 1 - delta_k)) keeps both in cell 0
        x = [max(Fraction(0), -Fraction(delta[k])) if exact else max(0.0, -delta[k]) for k in range(p)]
        x += [0] * (d - p)
        xp = [x[k] + delta[k] for k in range(d)]
        lab = (_label(sys.alphabet[i]), _label(sys.alphabet[j]))
        return PathWitness((lab,), [[_num(v) for v in list(x) + list(xp)]], False, exact)
    return None


def _uli_periodic_search(sys, dbl, proper, max_len: int = 4, max_words: int = 10_000):
    """Short periodic pair words whose two orbits share every cell.

    Candidates are screened in floating point and confirmed by
    :func:`_uli_cycle_witness`.
    """
    p = sys.p
    A = np.asarray(sys.A, dtype=float)
    T = sys.ifs().translates()
    idx = {u: i for i, u in enumerate(sys.alphabet)}
    first = [idx[a] for a, _ in dbl.pairs]
    second = [idx[b] for _, b in dbl.pairs]
    n = len(dbl.pairs)
    tried = 0
    for length in range(1, max_len + 1):
        if tried + n ** length > max_words:
            break
        tried += n ** length
        for word in itertools.product(range(n), repeat=length):
            if not any(proper[s] for s in word) or not _primitive_word(word):
                continue
            o1 = _float_periodic(A, T, [first[s] for s in word])
            o2 = _float_periodic(A, T, [second[s] for s in word])
            if o1 is None or o2 is None:
                continue
            if all(np.array_equal(np.floor(x[:p]), np.floor(y[:p])) for x, y in zip(o1, o2)):
                wit = _uli_cycle_witness(sys, dbl, list(word))
                if wit is not None:
                    return wit
    return None


def _primitive_word(word):
    n = len(word)
    return not any(n % k == 0 and word == word[:k] * (n // k) for k in range(1, n))


def _uli_cycle_witness(sys, dbl, word):
    d, p = sys.dim_d, sys.p
    exact = _has_exact(sys)
    T1 = _sys_translates_exact(sys) if exact else sys.ifs().translates()
    labels = list(sys.alphabet)
    idx = {u: i for i, u in enumerate(labels)}
    w1 = [idx[dbl.pairs[s][0]] for s in word]
    w2 = [idx[dbl.pairs[s][1]] for s in word]
    if exact:
        o1 = _exact_affine(sys.A_exact, T1, w1)
        o2 = _exact_affine(sys.A_exact, T1, w2)
    else:
        A = np.asarray(sys.A, dtype=float)
        o1 = _float_periodic(A, T1, w1)
        o2 = _float_periodic(A, T1, w2)
    if o1 is None or o2 is None:
        return None
    for x, y in zip(o1, o2):
        if [math.floor(v) for v in x[:p]] != [math.floor(v) for v in y[:p]]:
            return None
    word_lab = tuple((_label(dbl.pairs[s][0]), _label(dbl.pairs[s][1])) for s in word)
    orbit = [[_num(v) for v in list(x) + list(y)] for x, y in zip(o1, o2)]
    return PathWitness(word_lab, orbit, True, exact)


# --------------------------------------------------------------------------
# scalar systems


def classify_1d(a, alphabet, level: int = 6, transcendental: bool = False, k_max: int = 4) -> Verdict:
    """Classify ``x(k+1) = a x(k) + u(k)``, ``y = floor(x)``.

    Rules, in order:

    * (i) ``|a| < 1``: ULDI by the rule below, ULI from the contractive
      check;
    * (ii) ``|a| > 2`` and ``min |u - u'| < |a|``: NotULI;
    * (iii) ``min |u - u'| > |a| + 1``: ULI in one step;
    * (iv) otherwise: ULDI in one step iff ``min |v| >= |a| + 1`` over
      nonzero ``v``; else NotULDI with a periodic witness. ULI then
      follows the ULDI status under the transcendence assumption and is
      Inconclusive without it.

    Witnesses for ``|v| < |a| + 1``: for ``a >= 0`` the period-2 orbit
    ``{-v/(a+1), v/(a+1)}`` under inputs ``(v, -v)``; for ``a < 0`` the
    fixed point ``v/(1-a)`` under the constant input ``v``.

    Parameters
    ----------
    a : number
    alphabet : sequence of numbers
    level : int
        Resolution of the contractive ULI check.
    transcendental : bool
        Declared assumption that ``a`` is transcendental.
    """
    a_ex = _fr(a)
    U = sorted({_fr(u) for u in (x[0] if isinstance(x, (list, tuple)) else x for x in alphabet)})
    if not U:
        raise InvalidSystem("empty alphabet")
    assumptions = {"algebraically_independent": False, "transcendental": bool(transcendental)}
    aa = abs(a_ex)
    gaps = [abs(x - y) for x, y in itertools.combinations(U, 2)]
    dmin = min(gaps) if gaps else None
    params = {"a": _num(a_ex) if isinstance(a, (int, Fraction, str)) else float(a),
              "min_diff": None if dmin is None else _num(dmin)}

    def uldi_rule(rule):
        if dmin is None:
            return Verdict(ULDI, 1, 0, OneDRule(rule, dict(params, note="single input")), question=ULDI,
                           assumptions=assumptions)
        if dmin >= aa + 1:
            return Verdict(ULDI, 1, 0, OneDRule(rule, dict(params, test="min|v| >= |a|+1")), question=ULDI,
                           assumptions=assumptions)
        v = dmin
        if a_ex >= 0:
            x1 = -v / (a_ex + 1)
            word, orbit = (_num(v), _num(-v)), [[_num(x1)], [_num(-x1)]]
        else:
            word, orbit = (_num(v),), [[_num(v / (1 - a_ex))]]
        wit = PathWitness(word, orbit, True, True)
        diff = build_difference(scalar_system(a_ex, U))
        wit.replay_ok = replay_witness(diff, wit)
        return Verdict(NOT_ULDI, None, None, wit, question=ULDI, assumptions=assumptions,
                       notes=[f"rule {rule}: min|v| < |a|+1"])

    if aa < 1:
        v = uldi_rule("i")
        if v.property == ULDI:
            v.companion = _uli_from_uldi(v, assumptions)
        else:
            uli = decide_uli_contractive(scalar_system(a_ex, U), level=level, k_max=k_max)
            uli.assumptions = assumptions
            v.companion = uli
        v.resolution_level = level
        return v
    if dmin is not None and aa > 2 and dmin < aa:
        uli = Verdict(NOT_ULI, None, None, OneDRule("ii", params), question=ULI, assumptions=assumptions)
        uli.companion = Verdict(NOT_ULDI, certificate=OneDRule("ii", params), question=ULDI,
                                assumptions=assumptions, notes=["NotULI implies NotULDI"])
        return uli
    if dmin is None or dmin > aa + 1:
        uli = Verdict(ULI, 1, 0, OneDRule("iii", params), question=ULI, assumptions=assumptions)
        uli.companion = Verdict(ULDI, 1, 0, OneDRule("iii", params), question=ULDI, assumptions=assumptions)
        return uli
    v = uldi_rule("iv")
    v.companion = _uli_from_uldi(v, assumptions)
    return v


# --------------------------------------------------------------------------
# brute force oracle


@dataclass
class OracleReport:
    """Outcome of :func:`brute_force_oracle`.

    Attributes
    ----------
    collision : bool
        Two orbits from one quantization cell with different first inputs
        gave equal outputs for ``depth`` steps.
    window : int or None
        Without collision: the largest number of steps any pair with
        different first inputs needed to be told apart.
    pair : tuple or None
        ``(x0, x0', word, word')`` of the reported collision.
    pairs_checked, nodes : int
    """

    collision: bool
    window: int = None
    pair: tuple = None
    pairs_checked: int = 0
    nodes: int = 0
    depth: int = 0
    grid_density: int = 32

    @property
    def conclusive(self) -> bool:
        return self.collision


def _oracle_region(sys, density, region):
    d = sys.dim_d
    if region is None:
        try:
            X = compute_attractor(sys.ifs(), 6)
            pts = []
            lo, hi = X.cover.bounds()
            axes = [np.arange(math.floor(l * density), math.ceil(h * density) + 1) / density
                    for l, h in zip(lo, hi)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
            grid = grid[X.cover.contains_points(grid)]
            return grid
        except NotContractive:
            region = [(-2.0, 2.0)] * d
    axes = [np.arange(math.ceil(l * density), math.floor(h * density) + 1) / density for l, h in region]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)


def brute_force_oracle(sys: QuantizedSystem, depth: int, grid_density: int = 32, region=None,
                       budget: int = 5_000_000, max_pairs: int = 20_000) -> OracleReport:
    """Enumerate input-word pairs from grid pairs of initial states.

    Initial pairs ``(x, x')`` share a quantization cell. They are the
    grid pairs (``grid_density`` points per unit and coordinate) inside
    the attractor cover for contractive systems, or inside ``region``
    (default ``[-2, 2]^d``), together with *merge partners*
    ``x' = x + A^-1 B (u - u')`` whose orbit meets that of ``x`` after
    one step. For each pair the words are explored depth first; a branch
    dies as soon as the outputs differ.

    Raises
    ------
    BudgetExceeded
        More than ``budget`` search nodes.
    """
    if not sys.is_canonical:
        sys = canonicalize(sys)
    d, p = sys.dim_d, sys.p
    A = np.asarray(sys.A, dtype=float)
    T = sys.ifs().translates()
    n = len(T)
    grid = _oracle_region(sys, grid_density, region)
    cells = np.floor(grid[:, :p]).astype(np.int64)
    pairs = []
    # merge partners first: these collide whenever they share a cell
    try:
        Ainv = np.linalg.inv(A)
        for x in grid:
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    xp = x + Ainv @ (T[i] - T[j])
                    if np.array_equal(np.floor(x[:p]), np.floor(xp[:p])):
                        pairs.append((x, xp))
                        break
                if len(pairs) >= max_pairs // 2:
                    break
            if len(pairs) >= max_pairs // 2:
                break
    except np.linalg.LinAlgError:
        pass
    order = np.lexsort(cells.T[::-1]) if len(cells) else np.arange(0)
    grid_s, cells_s = grid[order], cells[order]
    _, starts = np.unique(cells_s, axis=0, return_index=True) if len(cells_s) else (None, [])
    bounds = list(starts) + [len(grid_s)]
    for a_, b_ in zip(bounds, bounds[1:]):
        blk = grid_s[a_:b_]
        for i in range(len(blk)):
            for j in range(i, len(blk)):
                pairs.append((blk[i], blk[j]))
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(0)
        keep = np.sort(rng.choice(len(pairs), max_pairs, replace=False))
        merge = [q for q in range(len(pairs)) if q < max_pairs // 2]
        keep = sorted(set(keep.tolist()) | set(merge))
        pairs = [pairs[q] for q in keep]
    nodes = 0
    window = 0
    for x0, y0 in pairs:
        # stack of (x, y, level, word_x, word_y)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                stack = [(A @ x0 + T[i], A @ y0 + T[j], 1, (i,), (j,))]
                while stack:
                    x, y, lev, wx, wy = stack.pop()
                    nodes += 1
                    if nodes > budget:
                        raise BudgetExceeded(f"oracle exceeded {budget} nodes")
                    if not np.array_equal(np.floor(x[:p]), np.floor(y[:p])):
                        window = max(window, lev)
                        continue
                    if lev >= depth:
                        return OracleReport(True, None, (x0.tolist(), y0.tolist(), wx, wy), len(pairs),
                                            nodes, depth, grid_density)
                    if np.allclose(x, y, rtol=0, atol=1e-12):
                        # merged orbits: equal outputs forever with equal inputs
                        return OracleReport(True, None, (x0.tolist(), y0.tolist(), wx, wy), len(pairs),
                                            nodes, depth, grid_density)
                    for a in range(n):
                        xa = A @ x + T[a]
                        for b in range(n):
                            stack.append((xa, A @ y + T[b], lev + 1, wx + (a,), wy + (b,)))
    return OracleReport(False, window, None, len(pairs), nodes, depth, grid_density)


# --------------------------------------------------------------------------
# algebraic independence and density


def _squarefree(n: int) -> bool:
    if n < 1:
        return False
    f = 2
    while f * f <= n:
        if n % (f * f) == 0:
            return False
        f += 1
    return True


def lw_matrix(exponents):
    """Matrix with entries ``exp(sqrt(n_ij))``.

    Square roots of distinct square-free integers are linearly
    independent over the rationals, so the entries form an algebraically
    independent set.

    Parameters
    ----------
    exponents : (d, d) nested sequence of int
        Distinct square-free positive integers.

    Returns
    -------
    A : ndarray
    algebraically_independent : bool
        Always True; asserted by construction.

    Raises
    ------
    RepeatedExponent
        A value repeats.
    InvalidSystem
        Not square, or a value is not a square-free positive integer.
    """
    E = np.asarray(exponents, dtype=object)
    if E.ndim == 0:
        E = E.reshape(1, 1)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise InvalidSystem("exponents must form a square matrix")
    flat = [int(x) for x in E.ravel()]
    if any(int(x) != x for x in E.ravel()):
        raise InvalidSystem("exponents must be integers")
    seen = set()
    for n in flat:
        if n in seen:
            raise RepeatedExponent(f"exponent {n} appears more than once")
        seen.add(n)
        if not _squarefree(n):
            raise InvalidSystem(f"{n} is not a square-free positive integer")
    A = np.array([[math.exp(math.sqrt(n)) for n in row] for row in E.tolist()], dtype=float)
    return A, True


def kronecker_witness(theta, alphas, eps: float, l_range=(0.0, 500.0), l_step: float = 1e-3):
    """Smallest grid point ``l`` with small fractional parts.

    Searches ``l = l_lo + i * l_step`` for ``frac(alpha_j + l theta_j) < eps``
    for every ``j``. When ``alphas`` has one more entry than ``theta``, its
    first entry ``alpha_0`` adds the condition ``frac(alpha_0 + l) < eps``.

    Returns
    -------
    float or None
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if len(alphas) == len(theta) + 1:
        a0, alphas = alphas[0], alphas[1:]
        theta = np.concatenate([[1.0], theta])
        alphas = np.concatenate([[a0], alphas])
    elif len(alphas) != len(theta):
        raise ValueError("alphas must match theta (optionally with a leading alpha_0)")
    lo, hi = float(l_range[0]), float(l_range[1])
    n = int(math.floor((hi - lo) / l_step + 1e-9)) + 1
    chunk = 1 << 18
    for start in range(0, n, chunk):
        i = np.arange(start, min(n, start + chunk))
        l = lo + i * l_step
        vals = alphas[None, :] + l[:, None] * theta[None, :]
        fr = vals - np.floor(vals)
        ok = np.all(fr < eps, axis=1)
        if ok.any():
            return float(l[np.argmax(ok)])
    return None


# --------------------------------------------------------------------------
# report


def _cert_payload(cert):
    if cert is None:
        return None
    if isinstance(cert, SeparationCert):
        return {"type": cert.kind, "method": cert.method, "depth": cert.depth,
                "language_sizes": list(cert.sizes), "exact": cert.exact,
                "one_step_cover_check": {str(k): bool(v) for k, v in cert.labels.items()}}
    if isinstance(cert, PathWitness):
        return {"type": cert.kind, "word": [_yaml_val(w) for w in cert.word],
                "orbit": [[_yaml_val(x) for x in z] for z in cert.orbit],
                "periodic": cert.periodic, "exact": cert.exact, "replay_ok": cert.replay_ok}
    if isinstance(cert, AttractorInStrip):
        lo, hi = cert.cover.bounds()
        return {"type": cert.kind, "predicate": cert.predicate, "subspace": cert.subspace,
                "cells": len(cert.cover), "level": cert.cover.level,
                "bounds": [[float(x) for x in lo], [float(x) for x in hi]]}
    if isinstance(cert, OneDRule):
        return {"type": cert.kind, "rule": cert.rule, "params": {k: _yaml_val(v) for k, v in cert.params.items()}}
    return {"type": type(cert).__name__}


def _yaml_val(x):
    if isinstance(x, (list, tuple)):
        return [_yaml_val(y) for y in x]
    if isinstance(x, Fraction):
        return _num(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _verdict_dict(v: Verdict):
    out = {"property": v.property, "question": v.question, "steps_k": v.steps_k,
           "waiting_l": v.waiting_l, "resolution_level": v.resolution_level,
           "certificate": _cert_payload(v.certificate)}
    if v.notes:
        out["notes"] = list(v.notes)
    return out


def verdict_report(v: Verdict, system_text: str = "", system_name: str = None, command: str = "analyze",
                   timestamp: str = None) -> str:
    """Structured text report (YAML) of a verdict.

    Field names are stable for a given ``report_version``. The timestamp
    is isolated on the last line so that runs can be compared byte by
    byte after dropping it.
    """
    body = {
        "report_version": REPORT_VERSION,
        "command": command,
        "system": system_name,
        "system_sha256": hashlib.sha256(system_text.encode()).hexdigest(),
        "assumptions": dict(v.assumptions),
        "verdict": _verdict_dict(v),
        "companion": _verdict_dict(v.companion) if v.companion is not None else None,
    }
    text = yaml.safe_dump(body, sort_keys=False, default_flow_style=None, width=100)
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return text + f"timestamp: '{timestamp}'\n"
