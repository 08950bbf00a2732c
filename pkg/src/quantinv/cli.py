"""Command line front end.

Commands
--------
analyze     decide ULDI (and ULI where possible), write a verdict report
attractor   export attractor covers as CSV and SVG
graph       dump the depth-k shift graph over pieces of the difference attractor
classify1d  classify a scalar system ``x(k+1) = a x(k) + u(k)``
oracle      brute force search for colliding output windows
examples    run the bundled golden examples

Exit codes: 0 decided / success, 2 Inconclusive, 1 error or mismatch.
System paths that do not exist are looked up among the bundled systems
by file name, so ``quantinv analyze ex1.sys`` works from any directory.
"""

import argparse
import hashlib
from fractions import Fraction
from importlib import resources
from pathlib import Path
import sys as _sys
import time

import numpy as np

from . import analyzer as an
from .attractor import DEFAULT_CELL_BUDGET, Strip, compute_attractor, cover_to_csv, cover_to_svg
from .exceptions import NotContractive, QuantinvError, SystemFileError
from .invgraph import build_graph, graph_to_edgelist, has_arbitrarily_long_proper_paths
from .sysfile import load_system, parse_number
from .system_model import canonicalize

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
COMMANDS = ("analyze", "attractor", "graph", "classify1d", "oracle", "examples")


class CliError(QuantinvError):
    """Invalid command line usage detected after argument parsing."""


# --------------------------------------------------------------------------
# arguments


def _level(text):
    v = int(text)
    if not 4 <= v <= 16:
        raise argparse.ArgumentTypeError(f"level must lie in [4, 16], got {v}")
    return v


def _positive(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _common(p, level=8):
    p.add_argument("--level", type=_level, default=level, help=f"cover resolution 2^-N, 4..16 (default {level})")
    p.add_argument("--kmax", type=_nonneg, default=4, help="largest graph depth (default 4)")
    p.add_argument("--budget", type=_positive, default=DEFAULT_CELL_BUDGET,
                   help=f"cell budget of covers (default {DEFAULT_CELL_BUDGET})")
    p.add_argument("--strict-boundary", action="store_true",
                   help="stop with Inconclusive when the difference attractor meets the strip boundary")
    p.add_argument("--out", default="quantinv-out", help="output directory (default ./quantinv-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantinv",
                                     description="Left invertibility of systems with quantized outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="decide ULDI / ULI and write a verdict report")
    p.add_argument("system", help="system file")
    _common(p)

    p = sub.add_parser("attractor", help="export attractor covers (CSV + SVG)")
    p.add_argument("system")
    _common(p)
    p.add_argument("--plane", nargs=2, type=_nonneg, metavar=("I", "J"), default=(0, 1),
                   help="coordinates of the SVG projection (default 0 1)")

    p = sub.add_parser("graph", help="dump the depth-k graph over attractor pieces")
    p.add_argument("system")
    _common(p, level=6)
    p.add_argument("--depth", type=_nonneg, default=None, help="graph depth k (default: --kmax)")

    p = sub.add_parser("classify1d", help="classify x(k+1) = a x(k) + u(k)")
    p.add_argument("a", help="coefficient a, or a 1-D system file")
    p.add_argument("alphabet", nargs="*", help="input symbols")
    p.add_argument("--transcendental", action="store_true", help="declare a transcendental")
    _common(p, level=6)

    p = sub.add_parser("oracle", help="brute force output-window search")
    p.add_argument("system")
    p.add_argument("--depth", type=_positive, default=12, help="window length (default 12)")
    p.add_argument("--density", type=_positive, default=32, help="grid points per unit (default 32)")
    p.add_argument("--budget", type=_positive, default=5_000_000, help="search node budget")

    p = sub.add_parser("examples", help="run the bundled golden examples")
    p.add_argument("directory", nargs="?", default=None, help="directory with ex1.sys, ex2.sys, ex3.sys")
    p.add_argument("--level", type=_level, default=8)
    return parser


# --------------------------------------------------------------------------
# helpers


def data_dir() -> Path:
    """Directory of the bundled system files."""
    return Path(str(resources.files("quantinv") / "data"))


def resolve_system(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = data_dir() / p.name
    if bundled.exists():
        return bundled
    raise SystemFileError("no such file", str(path))


def _load(path):
    p = resolve_system(path)
    text = p.read_text()
    sys, meta = load_system(p)
    return p, text, sys, meta


def _scalar_params(sys):
    """``a`` and the canonical inputs ``b . u`` of a 1-D system."""
    if sys.A_exact is not None and sys.B_exact is not None:
        a = sys.A_exact[0][0]
        b = sys.B_exact[0]
        U = [sum((Fraction(x) * y for x, y in zip(b, u)), Fraction(0)) for u in sys.alphabet]
    else:
        a = float(sys.A[0, 0])
        U = [float(np.dot(sys.B[0], [float(x) for x in u])) for u in sys.alphabet]
    return a, U


def _run_hash(text, args, command):
    cfg = f"{command}|level={getattr(args, 'level', '')}|kmax={getattr(args, 'kmax', '')}" \
          f"|budget={getattr(args, 'budget', '')}|strict={getattr(args, 'strict_boundary', '')}"
    return hashlib.sha256((text + "\0" + cfg).encode()).hexdigest()[:16]


def _strip_timestamp(text):
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("timestamp:"))


def write_report(out_dir: Path, stem: str, text: str) -> Path:
    """Append-only write: an identical report (timestamp aside) is kept,
    a differing one gets the next free suffix."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n = 0
    while True:
        path = out_dir / (f"{stem}.yaml" if n == 0 else f"{stem}.{n}.yaml")
        if not path.exists():
            path.write_text(text)
            return path
        if _strip_timestamp(path.read_text()) == _strip_timestamp(text):
            return path
        n += 1


def _contractive(sys) -> bool:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(sys.A, dtype=float))))) < 1


def run_analysis(sys, meta, level=8, k_max=4, budget=DEFAULT_CELL_BUDGET, strict_boundary=False):
    """Dispatch by dimension and spectrum.

    Scalar systems go to :func:`classify_1d`. Otherwise ULDI is decided
    and, for contractive systems whose ULI status does not follow, the
    contractive ULI check runs as well.
    """
    assume = meta.get("assume", {}) if meta else {}
    csys = canonicalize(sys)
    if csys.dim_d == 1:
        a, U = _scalar_params(csys)
        return an.classify_1d(a, U, level=level, transcendental=assume.get("transcendental", False),
                              k_max=k_max)
    v = an.decide_uldi(csys, level=level, k_max=k_max, budget=budget, strict_boundary=strict_boundary,
                       assume=assume)
    if _contractive(csys) and (v.companion is None or not v.companion.decided):
        uli = an.decide_uli_contractive(csys, level=min(level, 6), k_max=k_max, budget=budget, assume=assume)
        v.companion = uli
    return v


def headline_exit(v) -> int:
    return EXIT_OK if v.decided else EXIT_INCONCLUSIVE


def _print_verdict(v, out):
    print(f"verdict:   {v}", file=out)
    if v.companion is not None:
        print(f"companion: {v.companion}", file=out)
    cert = v.certificate
    if isinstance(cert, an.PathWitness):
        print(f"witness:   word {list(cert.word)} orbit {cert.orbit} replay_ok={cert.replay_ok}", file=out)
    for note in v.notes:
        print(f"  - {note}", file=out)


# --------------------------------------------------------------------------
# commands


def cmd_analyze(args, out=_sys.stdout) -> int:
    path, text, sys, meta = _load(args.system)
    t0 = time.perf_counter()
    v = run_analysis(sys, meta, args.level, args.kmax, args.budget, args.strict_boundary)
    dt = time.perf_counter() - t0
    name = meta.get("name") or path.stem
    report = an.verdict_report(v, text, name, "analyze")
    stem = _run_hash(text, args, "analyze")
    out_dir = Path(args.out)
    rpath = write_report(out_dir, f"{stem}-analyze", report)
    print(f"system:    {name} ({path})", file=out)
    _print_verdict(v, out)
    cert = v.certificate
    if isinstance(cert, an.AttractorInStrip):
        cpath = out_dir / f"{stem}-certificate.csv"
        cpath.write_text(cover_to_csv(cert.cover))
        print(f"certificate cover: {cpath}", file=out)
    print(f"time:      {dt:.2f} s", file=out)
    print(f"report:    {rpath}", file=out)
    return headline_exit(v)


def _export(out_dir, stem, label, cover, plane, strip_p, out):
    csv_path = out_dir / f"{stem}-{label}.csv"
    csv_path.write_text(cover_to_csv(cover))
    # subspace covers of lower dimension fall back to their own axes
    pl = tuple(plane) if max(plane) < cover.dim else (0, 1)
    svg_path = out_dir / f"{stem}-{label}.svg"
    svg_path.write_text(cover_to_svg(cover, plane=pl, title=f"{stem} {label} (level {cover.level})",
                                     strip_p=strip_p))
    lo, hi = cover.bounds()
    print(f"{label:>2}: {len(cover)} cells at level {cover.level}, dim {cover.dim}, "
          f"bounds {np.round(lo, 4).tolist()} .. {np.round(hi, 4).tolist()}", file=out)
    print(f"    {csv_path}\n    {svg_path}", file=out)


def cmd_attractor(args, out=_sys.stdout) -> int:
    path, text, sys, meta = _load(args.system)
    csys = canonicalize(sys)
    d = csys.dim_d
    plane = tuple(args.plane)
    if d > 2 and (max(plane) >= d or plane[0] == plane[1]):
        raise CliError(f"--plane {plane[0]} {plane[1]}: need two distinct axes below {d}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = meta.get("name") or path.stem
    att = an.uldi_attractors(csys, args.level, args.budget)
    p = att.diff.p
    coord = att.split.Ec_basis if att.split.dc else att.split.Ee_basis
    aligned = coord.shape[1] == d and np.allclose(coord, np.eye(d))
    if att.Tc is not None:
        _export(out_dir, stem, "Tc", att.Tc.cover, plane, p if aligned else None, out)
    if att.Te is not None:
        _export(out_dir, stem, "Te", att.Te.cover, plane, p if aligned else None, out)
    _export(out_dir, stem, "T", att.T, plane, p, out)
    if _contractive(csys):
        try:
            X = compute_attractor(csys.ifs(), args.level, budget=args.budget, max_cells=an.WORK_CELLS)
            _export(out_dir, stem, "X", X.cover, plane, p, out)
        except NotContractive:
            pass
    return EXIT_OK


def cmd_graph(args, out=_sys.stdout) -> int:
    path, text, sys, meta = _load(args.system)
    csys = canonicalize(sys)
    k = args.kmax if args.depth is None else args.depth
    att = an.uldi_attractors(csys, args.level, args.budget)
    diff = att.diff
    proper = tuple(not diff.is_zero(s) for s in range(len(diff.diff_alphabet)))
    g = build_graph(att.T, diff.ifs(), k, proper=proper, confine=Strip(diff.p))
    long_paths, wit = has_arbitrarily_long_proper_paths(g)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = meta.get("name") or path.stem
    epath = out_dir / f"{stem}-graph-k{k}.txt"
    epath.write_text(graph_to_edgelist(g))
    print(f"graph depth {k} over T (level {att.T.level}): {len(g.vertices)} vertices, {len(g.edges)} edges",
          file=out)
    print(f"arbitrarily long proper walks: {'yes' if long_paths else 'no'}", file=out)
    if wit is not None:
        labels = [an._label(v) for v in diff.diff_alphabet]
        kind = "proper cycle" if wit.periodic else "proper walk"
        # the graph over-approximates; analyze checks such words for real orbits
        print(f"candidate {kind} (unchecked): {[labels[s] for s in wit.symbols(1)]}", file=out)
    print(f"edge list: {epath}", file=out)
    return EXIT_OK


def cmd_classify1d(args, out=_sys.stdout) -> int:
    transcendental = args.transcendental
    if not args.alphabet:
        path, text, sys, meta = _load(args.a)
        csys = canonicalize(sys)
        if csys.dim_d != 1:
            raise CliError(f"classify1d needs a 1-D system, {path} has dimension {csys.dim_d}")
        a, U = _scalar_params(csys)
        transcendental = transcendental or meta["assume"].get("transcendental", False)
    else:
        a = parse_number(args.a, exact=True)
        U = [parse_number(u, exact=True) for u in args.alphabet]
        a = a if isinstance(a, Fraction) else float(a)
    v = an.classify_1d(a, U, level=args.level, transcendental=transcendental, k_max=args.kmax)
    _print_verdict(v, out)
    return headline_exit(v)


def cmd_oracle(args, out=_sys.stdout) -> int:
    path, text, sys, meta = _load(args.system)
    csys = canonicalize(sys)
    if csys.dim_d > 2:
        raise CliError("the oracle handles systems of dimension at most 2")
    rep = an.brute_force_oracle(csys, args.depth, grid_density=args.density, budget=args.budget)
    print(f"depth {rep.depth}, grid density {rep.grid_density}, {rep.pairs_checked} initial pairs, "
          f"{rep.nodes} search nodes", file=out)
    if rep.collision:
        x0, x1, w0, w1 = rep.pair
        print("collision: equal outputs from one cell with different first inputs", file=out)
        print(f"  x0 = {list(x0)} word {list(w0)}", file=out)
        print(f"  x0' = {list(x1)} word {list(w1)}", file=out)
    else:
        print(f"no collision; every pair separated within {rep.window} step(s)", file=out)
    return EXIT_OK


# golden expectations of the bundled examples
def _check_ex1(v):
    return v.property == an.NOT_ULDI and isinstance(v.certificate, an.AttractorInStrip)


def _check_ex2(v):
    return v.property == an.ULDI and v.steps_k == 1 and isinstance(v.certificate, an.SeparationCert)


def _check_ex3(v):
    c = v.certificate
    orbit_ok = isinstance(c, an.PathWitness) and \
        sorted(Fraction(z[0]) for z in c.orbit) == [Fraction(-2, 3), Fraction(2, 3)]
    uli = v.uli
    return v.property == an.NOT_ULDI and orbit_ok and uli is not None and uli.property == an.ULI \
        and uli.steps_k == 1


GOLDEN = (
    ("ex1.sys", "NotULDI [AttractorInStrip]", _check_ex1),
    ("ex2.sys", "ULDI k=1 [SeparationCert]", _check_ex2),
    ("ex3.sys", "NotULDI witness +-2/3, ULI k=1", _check_ex3),
)


def cmd_examples(args, out=_sys.stdout) -> int:
    directory = Path(args.directory) if args.directory else data_dir()
    if not directory.is_dir():
        raise CliError(f"examples directory not found: {directory}")
    rows, failed = [], 0
    for fname, expect, check in GOLDEN:
        t0 = time.perf_counter()
        try:
            sys, meta = load_system(directory / fname)
            v = run_analysis(sys, meta, level=args.level)
            ok = check(v)
            got = str(v) + (f" / {v.companion}" if v.companion is not None else "")
        except QuantinvError as exc:
            ok, got = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        rows.append((fname, expect, got, "PASS" if ok else "FAIL", time.perf_counter() - t0))
    w = max(len(r[2]) for r in rows)
    print(f"{'example':<8}  {'expected':<32}  {'obtained':<{w}}  result  time", file=out)
    for fname, expect, got, res, dt in rows:
        print(f"{fname:<8}  {expect:<32}  {got:<{w}}  {res:<6}  {dt:5.1f} s", file=out)
    print(f"{len(rows) - failed}/{len(rows)} pass", file=out)
    return EXIT_ERROR if failed else EXIT_OK


HANDLERS = {"analyze": cmd_analyze, "attractor": cmd_attractor, "graph": cmd_graph,
            "classify1d": cmd_classify1d, "oracle": cmd_oracle, "examples": cmd_examples}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return HANDLERS[args.command](args, _sys.stdout)
    except QuantinvError as exc:
        print(f"quantinv {args.command}: error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
