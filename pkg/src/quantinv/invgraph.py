"""Depth-k graphs over attractor pieces.

Vertices are input words ``w = (v_0, ..., v_k)`` carrying the piece
``H_w = f_{v_k} o ... o f_{v_0}(H)`` as a box cover; an edge ``w -> w'``
exists when ``w'`` is ``w`` shifted by one symbol, and it is *proper*
when the new symbol ``w'[-1]`` is nonzero. Pruning removes vertices whose
piece is not inside the safe set, giving the internal invertibility
graph. Orbits that remain in the safe set forever follow infinite walks,
so the question becomes whether proper edges lie on walks of unbounded
length.
"""

from dataclasses import dataclass, field
import math

import networkx as nx
import numpy as np

from .attractor import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    AttractorApprox,
    BoxCover,
    Strip,
    image_cells,
)
from .exceptions import BudgetExceeded, KMaxExceeded, NotSeparated

__all__ = [
    "InvGraph",
    "GraphWitness",
    "build_graph",
    "prune_internal",
    "stopping_k",
    "has_arbitrarily_long_proper_paths",
    "longest_proper_run",
    "graph_to_edgelist",
    "piece_status",
    "STRADDLE",
]

STRADDLE = "Straddle"
DEFAULT_VERTEX_BUDGET = 1_000_000


def _fmt_symbol(sym):
    if isinstance(sym, tuple):
        if len(sym) == 1:
            return str(sym[0])
        return "[" + ";".join(str(x) for x in sym) + "]"
    return str(sym)


@dataclass(eq=False)
class InvGraph:
    """Shift graph over input words with attached pieces.

    Attributes
    ----------
    depth_k : int
    labels : tuple
        Symbol labels (one per map of the IFS).
    proper_symbols : tuple of bool
    pieces : dict
        Word (tuple of symbol indices) -> BoxCover.
    graph : networkx.DiGraph
        Nodes are words; edge attributes ``proper`` and ``symbol``.
    status : dict
        Word -> Inside / Outside / Straddle, filled by pruning.
    inconclusive : bool
        Set by strict pruning when some piece straddles the boundary.
    """

    depth_k: int
    labels: tuple
    proper_symbols: tuple
    pieces: dict
    graph: nx.DiGraph
    status: dict = field(default_factory=dict)
    inconclusive: bool = False

    @property
    def vertices(self):
        return list(self.graph.nodes)

    @property
    def edges(self):
        return [(a, b, d["proper"]) for a, b, d in self.graph.edges(data=True)]

    def word_labels(self, word):
        return tuple(self.labels[s] for s in word)

    def __repr__(self):
        return (f"InvGraph(k={self.depth_k}, vertices={self.graph.number_of_nodes()}, "
                f"edges={self.graph.number_of_edges()})")


def _cover_of(H):
    return H.cover if isinstance(H, AttractorApprox) else H


def build_graph(H, ifs, k: int, proper=None, confine=None,
                vertex_budget: int = DEFAULT_VERTEX_BUDGET, half_open: bool = False) -> InvGraph:
    """Materialise the depth-``k`` graph.

    Parameters
    ----------
    H : AttractorApprox or BoxCover
        Forward-invariant cover the pieces are taken from.
    ifs : AffineIFS
    k : int
        Words have length ``k + 1``.
    proper : sequence of bool, optional
        Which symbols are proper; default: maps with nonzero translate.
    confine : safe set, optional
        When given, every intermediate piece is intersected with ``H``
        and with the cells meeting the safe set, so pieces describe
        orbit segments that stay in ``H ∩ S``. Words with empty pieces
        are dropped.
    vertex_budget : int
    half_open : bool
        Cell semantics for images (see :func:`image_cells`).

    Raises
    ------
    BudgetExceeded
        If ``|V|^(k+1)`` exceeds ``vertex_budget``.
    """
    cover = _cover_of(H)
    n = len(ifs.maps)
    if n ** (k + 1) > vertex_budget:
        raise BudgetExceeded(f"{n}^{k + 1} vertices exceed the budget {vertex_budget}")
    if proper is None:
        proper = tuple(bool(np.any(c != 0)) for _, c in ifs.maps)
    proper = tuple(bool(x) for x in proper)
    keep = None
    if confine is not None:
        keep = cover.select(confine.meets(cover.cells, cover.level))
        in_keep = keep.lookup()
    shared = {}

    def _share(c):
        key = hash(c)
        for other in shared.get(key, ()):
            if other == c:
                return other
        shared.setdefault(key, []).append(c)
        return c

    pieces = {}
    frontier = {(): keep if keep is not None else cover}
    for depth in range(k + 1):
        nxt = {}
        for w, pc in frontier.items():
            for s, (M, c) in enumerate(ifs.maps):
                img = image_cells(pc, M, c, half_open=half_open)
                if keep is not None:
                    img = img.select(in_keep(img.cells))
                    if img.is_empty():
                        continue
                nxt[w + (s,)] = _share(img)
        frontier = nxt
    pieces = frontier
    G = nx.DiGraph()
    G.add_nodes_from(sorted(pieces))
    for w in sorted(pieces):
        for s in range(n):
            w2 = w[1:] + (s,)
            if w2 in pieces:
                G.add_edge(w, w2, proper=proper[s], symbol=s)
    return InvGraph(k, tuple(ifs.labels), proper, pieces, G)


def piece_status(cover: BoxCover, safe) -> str:
    """Inside / Outside / Straddle of a piece against a safe set."""
    if cover.is_empty():
        return OUTSIDE
    lab = safe.classify(cover.cells, cover.level)
    if np.all(lab == INSIDE):
        return INSIDE
    if np.all(lab == OUTSIDE):
        return OUTSIDE
    return STRADDLE


def prune_internal(g: InvGraph, S, strict: bool = False) -> InvGraph:
    """Keep only vertices whose piece lies inside the safe set ``S``.

    Parameters
    ----------
    g : InvGraph
    S : safe set (``Strip`` or ``QuantizationSetQ``) or int
        An integer ``p`` stands for ``Strip(p)``.
    strict : bool
        When True, any piece straddling the boundary marks the result
        ``inconclusive``.
    """
    if isinstance(S, (int, np.integer)):
        S = Strip(int(S))
    status = {w: piece_status(pc, S) for w, pc in g.pieces.items()}
    keep = [w for w, st in status.items() if st == INSIDE]
    H = g.graph.subgraph(keep).copy()
    out = InvGraph(g.depth_k, g.labels, g.proper_symbols,
                   {w: g.pieces[w] for w in keep}, H, status)
    out.inconclusive = g.inconclusive or (strict and any(st == STRADDLE for st in status.values()))
    return out


def stopping_k(H, ifs, S, k_max: int, proper=None, vertex_budget: int = DEFAULT_VERTEX_BUDGET,
               half_open: bool = False) -> int:
    """Smallest ``k <= k_max`` at which no piece straddles ``S``.

    At that depth every piece is either inside ``S`` or disjoint from
    it, so the pruned graph is exact up to the cover resolution.

    Raises
    ------
    NotSeparated
        The cover of ``H`` touches the boundary of ``S``.
    KMaxExceeded
    """
    if isinstance(S, (int, np.integer)):
        S = Strip(int(S))
    cover = _cover_of(H)
    lab = S.classify(cover.cells, cover.level)
    if np.any(lab == BOUNDARY):
        raise NotSeparated("the cover touches the boundary of the safe set")
    for k in range(k_max + 1):
        g = build_graph(H, ifs, k, proper=proper, vertex_budget=vertex_budget, half_open=half_open)
        if all(piece_status(pc, S) != STRADDLE for pc in g.pieces.values()):
            return k
    raise KMaxExceeded(f"pieces still straddle the safe set at k = {k_max}")


@dataclass
class GraphWitness:
    """Infinite walk through a proper edge.

    The walk is ``lead^inf, bridge_in, proper_edge, bridge_out, tail^inf``
    written as symbol sequences. When the proper edge lies on a cycle
    ``lead`` is that cycle and the other parts are empty.
    """

    proper_edge: tuple
    lead: list
    bridge: list
    tail: list
    start_vertex: tuple

    @property
    def periodic(self) -> bool:
        return not self.bridge and not self.tail

    def symbols(self, repeats: int = 3):
        """Finite word: ``repeats`` turns of each cycle around the bridge."""
        return list(self.start_vertex) + self.lead * repeats + self.bridge + self.tail * repeats


def _nontrivial_sccs(G):
    out = []
    for comp in nx.strongly_connected_components(G):
        if len(comp) > 1:
            out.append(comp)
        else:
            (v,) = comp
            if G.has_edge(v, v):
                out.append(comp)
    return out


def _path_symbols(G, path):
    return [G.edges[a, b]["symbol"] for a, b in zip(path, path[1:])]


def has_arbitrarily_long_proper_paths(g: InvGraph):
    """Do proper edges lie on walks of unbounded length?

    A walk through an edge ``a -> b`` can be made arbitrarily long iff a
    cycle reaches ``a`` or ``b`` reaches a cycle.

    Returns
    -------
    answer : bool
    witness : GraphWitness or None
    """
    G = g.graph
    proper_edges = [(a, b) for a, b, d in G.edges(data=True) if d["proper"]]
    if not proper_edges:
        return False, None
    sccs = _nontrivial_sccs(G)
    if not sccs:
        return False, None
    comp_of = {}
    for i, comp in enumerate(sccs):
        for v in comp:
            comp_of[v] = i
    # 1) proper edge on a cycle
    for a, b in sorted(proper_edges):
        if a in comp_of and comp_of.get(b) == comp_of[a]:
            back = nx.shortest_path(G, b, a) if a != b else [a]
            cycle = [a] + back
            syms = _path_symbols(G, cycle)
            return True, GraphWitness((a, b), syms, [], [], a)
    # 2) reachable from, or reaching, a cycle
    cyc_nodes = set(comp_of)
    from_cycle = set()
    for v in cyc_nodes:
        if v not in from_cycle:
            from_cycle |= nx.descendants(G, v) | {v}
    to_cycle = set()
    for v in cyc_nodes:
        if v not in to_cycle:
            to_cycle |= nx.ancestors(G, v) | {v}
    for a, b in sorted(proper_edges):
        if a in from_cycle or b in to_cycle:
            lead, bridge_in, tail, bridge_out = [], [], [], []
            start = a
            if a in from_cycle:
                src = next(v for v in sorted(cyc_nodes) if v == a or nx.has_path(G, v, a))
                loop = _cycle_at(G, src)
                lead = _path_symbols(G, loop)
                bridge_in = _path_symbols(G, nx.shortest_path(G, src, a))
                start = src
            if b in to_cycle:
                dst = next(v for v in sorted(cyc_nodes) if v == b or nx.has_path(G, b, v))
                bridge_out = _path_symbols(G, nx.shortest_path(G, b, dst))
                loop = _cycle_at(G, dst)
                tail = _path_symbols(G, loop)
            bridge = bridge_in + [G.edges[a, b]["symbol"]] + bridge_out
            return True, GraphWitness((a, b), lead, bridge, tail, start)
    return False, None


def _cycle_at(G, v):
    if G.has_edge(v, v):
        return [v, v]
    for w in sorted(G.successors(v)):
        try:
            back = nx.shortest_path(G, w, v)
        except nx.NetworkXNoPath:
            continue
        return [v] + back
    raise ValueError("vertex is not on a cycle")


def longest_proper_run(g: InvGraph):
    """Longest number of vertices visited after entering through a
    proper edge (the graph must have no unbounded proper walks).

    Returns
    -------
    int
        0 when no proper edge survives.
    """
    G = g.graph
    proper_targets = {b for a, b, d in G.edges(data=True) if d["proper"]}
    if not proper_targets:
        return 0
    reach = set()
    for v in proper_targets:
        reach |= nx.descendants(G, v) | {v}
    sub = G.subgraph(reach)
    if not nx.is_directed_acyclic_graph(sub):
        return math.inf
    longest = {}
    for v in reversed(list(nx.topological_sort(sub))):
        longest[v] = 1 + max((longest[w] for w in sub.successors(v)), default=0)
    return max(longest[v] for v in proper_targets)


def graph_to_edgelist(g: InvGraph) -> str:
    """Edge list text dump.

    Comment lines start with ``#``; vertex words are written as comma
    separated symbol labels. Each edge line reads
    ``<source word> <target word> <proper: 0|1>``.
    """
    def lab(w):
        return ",".join(_fmt_symbol(g.labels[s]) for s in w)

    lines = [f"# depth_k {g.depth_k}",
             f"# vertices {g.graph.number_of_nodes()}",
             f"# edges {g.graph.number_of_edges()}",
             "# source target proper"]
    for w in sorted(g.graph.nodes):
        if g.graph.degree(w) == 0:
            lines.append(f"# isolated {lab(w)}")
    for a, b, d in sorted(g.graph.edges(data=True), key=lambda e: (e[0], e[1])):
        lines.append(f"{lab(a)} {lab(b)} {int(d['proper'])}")
    return "\n".join(lines) + "\n"
