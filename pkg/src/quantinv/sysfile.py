"""Reading and writing system description files.

A system file is a single YAML mapping::

    name: example-2            # optional
    A:                         # row-major, one list per row
      - [2, 0, 0]
      - [0, 1/2, 1]
      - [0, 0, 1/3]
    B: [[2], [3], [6]]         # d x m; a flat list is a column
    alphabet: [0, 1]           # scalars when m == 1, else lists of length m
    p: 2
    delta: 1                   # optional, default 1
    C: [[1, 0, 0], [0, 1, 0]]  # optional, default first p rows of I
    assume:                    # optional declared assumptions
      algebraically_independent: false

Scalars may be integers, decimals, ``p/q`` literals or arithmetic
expressions over ``exp sqrt log sin cos pi e`` such as ``exp(sqrt(5))``.
Input symbols given as rational literals are kept exact. Ragged
matrices, unknown keys and bad expressions are rejected with the line
number of the offending node.
"""

import ast
import math
import re
from fractions import Fraction
from pathlib import Path

import yaml

from .exceptions import InvalidSystem, SystemFileError
from .system_model import QuantizedSystem

__all__ = ["load_system", "parse_system", "dump_system", "parse_number", "SYSTEM_KEYS"]

SYSTEM_KEYS = ("name", "A", "B", "alphabet", "p", "delta", "C", "assume")
_REQUIRED = ("A", "B", "alphabet", "p")
_ASSUMPTIONS = ("algebraically_independent", "transcendental")

_RATIONAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/[+-]?\d+)?$")
_FUNCS = {"exp": math.exp, "sqrt": math.sqrt, "log": math.log, "sin": math.sin, "cos": math.cos}
_CONSTS = {"pi": math.pi, "e": math.e}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand)
        return v if isinstance(node.op, ast.UAdd) else -v
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
        a, b = _eval_node(node.left), _eval_node(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        return a ** b
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def parse_number(text, exact=False):
    """Read a scalar literal or expression.

    Parameters
    ----------
    text : str or number
    exact : bool
        Return a Fraction for rational literals (``"0.1"``, ``"-3/4"``).
        Expressions always give floats.
    """
    if isinstance(text, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(text, (int, float)):
        return Fraction(text) if exact else float(text)
    s = str(text).strip()
    if _RATIONAL.match(s):
        q = Fraction(s)
        return q if exact else float(q)
    try:
        tree = ast.parse(s, mode="eval")
        val = float(_eval_node(tree))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise ValueError(f"cannot evaluate {s!r}") from exc
    if not math.isfinite(val):
        raise ValueError(f"{s!r} is not finite")
    return val


def _line(node):
    return node.start_mark.line + 1


def _scalar(node, path, what, exact=False):
    if not isinstance(node, yaml.ScalarNode):
        raise SystemFileError(f"{what}: expected a number", path, _line(node))
    try:
        return parse_number(node.value, exact=exact)
    except ValueError as exc:
        raise SystemFileError(f"{what}: {exc}", path, _line(node)) from None


def _matrix(node, path, what, exact=True):
    if not isinstance(node, yaml.SequenceNode) or not node.value:
        raise SystemFileError(f"{what}: expected a non-empty list", path, _line(node))
    if all(isinstance(n, yaml.ScalarNode) for n in node.value):
        return [[_scalar(n, path, what, exact)] for n in node.value], True
    rows = []
    width = None
    for rn in node.value:
        if not isinstance(rn, yaml.SequenceNode):
            raise SystemFileError(f"{what}: every row must be a list", path, _line(rn))
        row = [_scalar(n, path, what, exact) for n in rn.value]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SystemFileError(
                f"{what}: ragged matrix (row has {len(row)} entries, expected {width})",
                path, _line(rn))
        if width == 0:
            raise SystemFileError(f"{what}: empty row", path, _line(rn))
        rows.append(row)
    return rows, False


def parse_system(text, path=None):
    """Parse system file contents.

    Returns
    -------
    system : QuantizedSystem
        Raw system (not canonicalized).
    meta : dict
        ``name`` and the declared ``assume`` flags.
    """
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SystemFileError(f"invalid YAML: {getattr(exc, 'problem', exc)}", path,
                              mark.line + 1 if mark else None) from None
    if root is None:
        raise SystemFileError("empty document", path, 1)
    if not isinstance(root, yaml.MappingNode):
        raise SystemFileError("top level must be a mapping", path, _line(root))
    fields = {}
    for knode, vnode in root.value:
        key = knode.value
        if key not in SYSTEM_KEYS:
            raise SystemFileError(f"unknown key {key!r}", path, _line(knode))
        if key in fields:
            raise SystemFileError(f"duplicate key {key!r}", path, _line(knode))
        fields[key] = vnode
    for key in _REQUIRED:
        if key not in fields:
            raise SystemFileError(f"missing required key {key!r}", path, _line(root))

    A, _ = _matrix(fields["A"], path, "A")
    B, _ = _matrix(fields["B"], path, "B")

    anode = fields["alphabet"]
    if not isinstance(anode, yaml.SequenceNode) or not anode.value:
        raise SystemFileError("alphabet: expected a non-empty list", path, _line(anode))
    alphabet = []
    for sn in anode.value:
        if isinstance(sn, yaml.SequenceNode):
            alphabet.append(tuple(_scalar(n, path, "alphabet", exact=True) for n in sn.value))
        else:
            alphabet.append((_scalar(sn, path, "alphabet", exact=True),))

    pnode = fields["p"]
    if not isinstance(pnode, yaml.ScalarNode) or not re.match(r"^\d+$", pnode.value.strip()):
        raise SystemFileError("p: expected a positive integer", path, _line(pnode))
    p = int(pnode.value)
    delta = 1
    if "delta" in fields:
        delta = _scalar(fields["delta"], path, "delta", exact=True)
    C = None
    if "C" in fields:
        C, flat_c = _matrix(fields["C"], path, "C")
        if flat_c:
            C = [[v[0] for v in C]]
    meta = {"name": None, "assume": {k: False for k in _ASSUMPTIONS}}
    if "name" in fields:
        meta["name"] = str(fields["name"].value)
    if "assume" in fields:
        an = fields["assume"]
        if not isinstance(an, yaml.MappingNode):
            raise SystemFileError("assume: expected a mapping", path, _line(an))
        for kn, vn in an.value:
            if kn.value not in _ASSUMPTIONS:
                raise SystemFileError(f"assume: unknown flag {kn.value!r}", path, _line(kn))
            val = str(vn.value).strip().lower()
            if val not in ("true", "false"):
                raise SystemFileError(f"assume.{kn.value}: expected true/false", path, _line(vn))
            meta["assume"][kn.value] = val == "true"
    try:
        sys = QuantizedSystem(A, B, alphabet, p, delta, C)
    except InvalidSystem as exc:
        raise SystemFileError(str(exc), path, _line(root)) from None
    return sys, meta


def load_system(path):
    """Read and parse a system file from disk."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SystemFileError(f"cannot read file: {exc.strerror}", str(path)) from None
    return parse_system(text, str(path))


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def dump_system(sys, name=None, assume=None) -> str:
    """Serialise a system in the file format (floats written with
    ``repr`` so they read back bit-identically)."""
    lines = []
    if name:
        lines.append(f"name: {name}")
    # exact entries are written as p/q literals so they read back exactly
    lines.append("A:")
    for row in (sys.A_exact or sys.A):
        lines.append("  - [" + ", ".join(_fmt(x) for x in row) + "]")
    lines.append("B:")
    for row in (sys.B_exact or sys.B):
        lines.append("  - [" + ", ".join(_fmt(x) for x in row) + "]")
    if sys.dim_m == 1:
        lines.append("alphabet: [" + ", ".join(_fmt(v[0]) for v in sys.alphabet) + "]")
    else:
        lines.append("alphabet:")
        for v in sys.alphabet:
            lines.append("  - [" + ", ".join(_fmt(x) for x in v) + "]")
    lines.append(f"p: {sys.p}")
    if sys.delta != 1:
        lines.append(f"delta: {_fmt(sys.delta)}")
    if not sys.is_canonical:
        lines.append("C:")
        for row in sys.C:
            lines.append("  - [" + ", ".join(_fmt(x) for x in row) + "]")
    if assume:
        lines.append("assume:")
        for k, v in assume.items():
            lines.append(f"  {k}: {'true' if v else 'false'}")
    return "\n".join(lines) + "\n"
