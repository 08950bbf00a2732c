"""Exact analysis of short in-strip windows of the difference system.

For a word ``w = (v_0, ..., v_{n-1})`` over the difference alphabet, the
initial states ``z_0`` whose orbit keeps ``z_0, ..., z_n`` in the open
strip ``|pi_p z_j| < 1`` form an open polyhedron ``{z : G z < b}``. The
word is *feasible* when that polyhedron is nonempty. Feasible words form
a factorial language ``L_n``, which is explored by increasing length.

Each feasibility decision is certified in rational arithmetic:

* feasible: an interior point is checked with exact Fractions;
* infeasible: a Motzkin multiplier ``y >= 0`` with ``y G = 0``,
  ``sum y = 1`` and ``y b <= 0`` is recovered from the LP dual on its
  support and checked exactly;
* otherwise an exact simplex (sympy) settles the case.

The window language gives the decision used for systems whose attractor
touches the strip boundary, where box covers cannot separate anything.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import itertools

import numpy as np
from scipy.optimize import linprog

from .exceptions import BudgetExceeded

__all__ = [
    "WindowProblem",
    "WordDecision",
    "LanguageResult",
    "explore_language",
    "periodic_orbit",
]

_TOL = 1e-7


def _mat_vec(M, v):
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in M]


def _mat_mul(M, N):
    cols = list(zip(*N))
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols] for row in M]


@dataclass
class WordDecision:
    feasible: bool
    exact: bool
    margin: float
    point: tuple = None           # exact interior point when feasible
    multipliers: dict = None      # support -> Fraction, when infeasible


class WindowProblem:
    """Constraint builder for in-strip windows of one difference system.

    Parameters
    ----------
    diff : DifferenceSystem
        Exact matrices are taken from ``diff.exact_matrices()``.
    """

    def __init__(self, diff):
        self.diff = diff
        self.d = diff.dim_d
        self.p = diff.p
        A, _ = diff.exact_matrices()
        self.A = A
        self.translates = diff.translates_exact()
        self.nonzero = [any(x != 0 for x in t) or any(x != 0 for x in v)
                        for t, v in zip(self.translates, diff.diff_alphabet)]
        self.proper = [any(x != 0 for x in v) for v in diff.diff_alphabet]
        self._powers = [[[Fraction(int(i == j)) for j in range(self.d)] for i in range(self.d)]]
        self.n_lp = 0
        self.n_exact = 0

    def power(self, j):
        while len(self._powers) <= j:
            self._powers.append(_mat_mul(self.A, self._powers[-1]))
        return self._powers[j]

    def constraints(self, word):
        """Exact rows ``g`` and right-hand sides ``b`` with ``g z_0 < b``."""
        d, p = self.d, self.p
        rows, rhs = [], []
        off = [Fraction(0)] * d
        for j in range(len(word) + 1):
            P = self.power(j)
            for r in range(p):
                rows.append(list(P[r]))
                rhs.append(1 - off[r])
                rows.append([-x for x in P[r]])
                rhs.append(1 + off[r])
            if j < len(word):
                off = [a + b for a, b in zip(_mat_vec(self.A, off), self.translates[word[j]])]
        return rows, rhs

    def states(self, z0, word):
        """Exact orbit ``z_0, ..., z_n``."""
        out = [list(z0)]
        for s in word:
            out.append([a + b for a, b in zip(_mat_vec(self.A, out[-1]), self.translates[s])])
        return out

    def in_strip(self, z):
        return all(-1 < z[r] < 1 for r in range(self.p))

    # ------------------------------------------------------------------
    def decide(self, word) -> WordDecision:
        rows, rhs = self.constraints(word)
        self.n_lp += 1
        G = np.array([[float(x) for x in r] for r in rows])
        b = np.array([float(x) for x in rhs])
        scale = np.maximum(1.0, np.abs(G).max(axis=1))
        Gs, bs = G / scale[:, None], b / scale
        d = self.d
        A_ub = np.hstack([Gs, np.ones((len(bs), 1))])
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        res = linprog(cost, A_ub=A_ub, b_ub=bs, bounds=[(None, None)] * d + [(None, 1.0)],
                      method="highs")
        if res.status != 0:
            return self._exact(rows, rhs)
        t = float(res.x[-1])
        if t > _TOL:
            z = tuple(Fraction(float(x)) for x in res.x[:d])
            if all(sum((a * zz for a, zz in zip(r, z)), Fraction(0)) < bb for r, bb in zip(rows, rhs)):
                return WordDecision(True, True, t, point=z)
        y = -np.asarray(res.ineqlin.marginals)
        if t < _TOL:
            cert = self._motzkin(rows, rhs, y / scale)
            if cert is not None:
                return WordDecision(False, True, t, multipliers=cert)
        return self._exact(rows, rhs)

    def _motzkin(self, rows, rhs, y):
        # rebuild an exact multiplier on the LP support
        import sympy
        if y is None or not np.all(np.isfinite(y)):
            return None
        order = np.argsort(-y)
        supp = [int(i) for i in order if y[i] > 1e-10 * max(1.0, y.max())]
        if not supp:
            return None
        d = self.d
        for cut in (len(supp), min(len(supp), d + 1)):
            S = supp[:cut]
            M = sympy.Matrix([[rows[i][c] for i in S] for c in range(d)] + [[1] * len(S)])
            rhs_v = sympy.Matrix([0] * d + [1])
            try:
                sol, params = M.gauss_jordan_solve(rhs_v)
            except ValueError:
                continue
            if params.shape[0]:
                guess = {p: 0 for p in params}
                sol = sol.subs(guess)
            vals = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in sol]
            if any(v < 0 for v in vals):
                continue
            if sum((v * rhs[i] for v, i in zip(vals, S)), Fraction(0)) <= 0:
                return {i: v for i, v in zip(S, vals) if v != 0}
        return None

    def _exact(self, rows, rhs) -> WordDecision:
        import sympy
        from sympy.solvers.simplex import lpmax
        self.n_exact += 1
        zs = sympy.symbols(f"z0:{self.d}")
        t = sympy.Symbol("t")
        cons = [sum((sympy.Rational(a.numerator, a.denominator) * z for a, z in zip(r, zs)), sympy.Integer(0)) + t
                <= sympy.Rational(bb.numerator, bb.denominator) for r, bb in zip(rows, rhs)]
        cons.append(t <= 1)
        opt, arg = lpmax(t, cons)
        opt = Fraction(int(sympy.fraction(opt)[0]), int(sympy.fraction(opt)[1]))
        if opt > 0:
            z = tuple(Fraction(int(sympy.fraction(arg[z])[0]), int(sympy.fraction(arg[z])[1]))
                      if z in arg else Fraction(0) for z in zs)
            return WordDecision(True, True, float(opt), point=z)
        return WordDecision(False, True, float(opt))


def periodic_orbit(problem: WindowProblem, word):
    """Exact periodic orbit driven by repeating ``word``, or None.

    Solves ``(I - A^n) z = c_w`` where ``c_w`` collects the translates.
    Returns the ``n`` states of one period when they all lie in the open
    strip.
    """
    import sympy
    d = problem.d
    n = len(word)
    off = [Fraction(0)] * d
    for s in word:
        off = [a + b for a, b in zip(_mat_vec(problem.A, off), problem.translates[s])]
    P = problem.power(n)
    M = sympy.Matrix([[sympy.Rational(int(i == j)) - sympy.Rational(P[i][j].numerator, P[i][j].denominator)
                       for j in range(d)] for i in range(d)])
    if M.det() == 0:
        return None
    sol = M.LUsolve(sympy.Matrix([sympy.Rational(x.numerator, x.denominator) for x in off]))
    z0 = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in sol]
    orbit = problem.states(z0, word)
    if orbit[-1] != orbit[0]:
        return None
    orbit = orbit[:-1]
    if all(problem.in_strip(z) for z in orbit):
        return orbit
    return None


@dataclass
class LanguageResult:
    """Outcome of :func:`explore_language`.

    Attributes
    ----------
    status : {"ULDI", "NotULDI", "Inconclusive"}
    steps_k, waiting_l : int or None
        For ULDI: no feasible window of length ``l + k`` carries a nonzero
        symbol at position ``l``.
    depth : int
        Longest word length explored.
    sizes : list of int
        ``|L_1|, |L_2|, ...``.
    witness_word : tuple or None
        Symbol indices of a periodic witness (NotULDI).
    witness_orbit : list or None
        Exact states of one period.
    exact : bool
        Every feasibility decision was certified in rational arithmetic.
    lp_count, exact_lp_count : int
    reason : str
    """

    status: str
    steps_k: int = None
    waiting_l: int = None
    depth: int = 0
    sizes: list = field(default_factory=list)
    witness_word: tuple = None
    witness_orbit: list = None
    exact: bool = True
    lp_count: int = 0
    exact_lp_count: int = 0
    reason: str = ""


def _primitive(word):
    n = len(word)
    for k in range(1, n):
        if n % k == 0 and word == word[:k] * (n // k):
            return False
    return True


def explore_language(diff, max_length: int = 8, budget: int = 20_000,
                     max_cycle: int = 6) -> LanguageResult:
    """Explore in-strip windows by increasing length.

    Parameters
    ----------
    diff : DifferenceSystem
    max_length : int
        Longest word examined.
    budget : int
        Maximal number of LPs.
    max_cycle : int
        Longest word tested as a periodic witness.
    """
    prob = WindowProblem(diff)
    nsym = len(diff.diff_alphabet)
    proper = prob.proper
    all_exact = True
    sizes = []
    language = None
    for n in range(1, max_length + 1):
        if language is None:
            cands = [(s,) for s in range(nsym)]
        else:
            cands = []
            for w in language:
                for s in range(nsym):
                    if n == 1 or (w[1:] + (s,)) in language:
                        cands.append(w + (s,))
        feasible = set()
        for w in cands:
            if prob.n_lp >= budget:
                return LanguageResult("Inconclusive", depth=n - 1, sizes=sizes, exact=all_exact,
                                      lp_count=prob.n_lp, exact_lp_count=prob.n_exact,
                                      reason=f"LP budget {budget} exhausted at length {n}")
            dec = prob.decide(w)
            all_exact &= dec.exact
            if dec.feasible:
                feasible.add(w)
        language = feasible
        sizes.append(len(language))
        # periodic witnesses among the new words
        if n <= max_cycle:
            for w in sorted(language):
                if any(proper[s] for s in w) and _primitive(w):
                    orbit = periodic_orbit(prob, w)
                    if orbit is not None:
                        return LanguageResult("NotULDI", depth=n, sizes=sizes, witness_word=w,
                                              witness_orbit=orbit, exact=all_exact,
                                              lp_count=prob.n_lp, exact_lp_count=prob.n_exact,
                                              reason="periodic in-strip orbit with a nonzero input")
        for k in range(1, n + 1):
            l = n - k
            if not any(proper[w[l]] for w in language):
                return LanguageResult("ULDI", steps_k=k, waiting_l=l, depth=n, sizes=sizes,
                                      exact=all_exact, lp_count=prob.n_lp,
                                      exact_lp_count=prob.n_exact,
                                      reason=f"no feasible window of length {n} has a nonzero "
                                             f"symbol at position {l}")
    return LanguageResult("Inconclusive", depth=max_length, sizes=sizes, exact=all_exact,
                          lp_count=prob.n_lp, exact_lp_count=prob.n_exact,
                          reason=f"no decision up to length {max_length}")
