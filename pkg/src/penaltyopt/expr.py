"""Arithmetic expressions over x1..xn with max, min and abs.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' integer)?
    atom   := number | 'x' integer | '(' expr ')' | func '(' expr (',' expr)* ')'
    func   := max | min | abs

Parsed trees normalize to a single smooth function, a max of smooth pieces
or a min of smooth pieces. Anything that would need a second level of
nonsmoothness is rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import ParseError, ValidationError
from .model import MaxOfSmooth, MinOfSmooth, Smooth

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)"
    r"|(?P<func>max|min|abs)"
    r"|(?P<op>[-+*^(),]))"
)


@dataclass(frozen=True)
class Num:
    text: str


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


def tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", column=col)
        kind = m.lastgroup
        start = m.start(kind) + 1
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of expression"
            raise ParseError(f"expected {want!r}, found {got!r}", column=tok[2])
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            node = BinOp("*", node, self.factor())
        return node

    def factor(self):
        node = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.take("num")
            if not re.fullmatch(r"\d+", tok[1]):
                raise ParseError("exponent must be a nonnegative integer", column=tok[2])
            node = Pow(node, int(tok[1]))
        return node

    def atom(self):
        kind, val, col = self.peek()
        if kind == "num":
            self.take()
            return Num(val)
        if kind == "var":
            self.take()
            idx = int(val[1:])
            if idx < 1:
                raise ParseError("variables are numbered from x1", column=col)
            return Var(idx)
        if kind == "func":
            self.take()
            self.take("op", "(")
            args = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.take()
                args.append(self.expr())
            self.take("op", ")")
            if val == "abs" and len(args) != 1:
                raise ParseError("abs takes exactly one argument", column=col)
            return Call(val, tuple(args))
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise ParseError(f"unexpected {val or 'end of expression'!r}", column=col)


def parse(text):
    """Parse an expression string into a tree."""
    p = _Parser(text)
    node = p.expr()
    kind, val, col = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r} after expression", column=col)
    return node


_PREC = {"+": 1, "-": 1, "*": 2}


def render(node, parent=0, right=False):
    """Print a tree back to text that parses to the same tree."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.func}(" + ", ".join(render(a) for a in node.args) + ")"
    if isinstance(node, Pow):
        base = render(node.base, 3)
        if isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exp}"
    prec = _PREC[node.op]
    s = f"{render(node.left, prec)} {node.op} {render(node.right, prec, True)}"
    if prec < parent or (right and prec == parent):
        return f"({s})"
    return s


def variables(node):
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, (BinOp,)):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Pow):
        return variables(node.base)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= variables(a)
        return out
    return set()


def _symbols(n):
    return tuple(sp.Symbol(f"x{i}", real=True) for i in range(1, n + 1))


def _normal(node, syms):
    """('smooth', e) | ('max', [e...]) | ('min', [e...]) with sympy pieces."""
    if isinstance(node, Num):
        return "smooth", sp.Rational(node.text) if "e" not in node.text.lower() else sp.Float(node.text)
    if isinstance(node, Var):
        return "smooth", syms[node.index - 1]
    if isinstance(node, Call):
        parts = [_normal(a, syms) for a in node.args]
        if any(k != "smooth" for k, _ in parts):
            raise ValidationError(f"{node.func}() arguments must be smooth; nested max/min/abs is not supported")
        exprs = [e for _, e in parts]
        if node.func == "abs":
            return "max", [exprs[0], -exprs[0]]
        return (node.func, exprs) if len(exprs) > 1 else ("smooth", exprs[0])
    if isinstance(node, Pow):
        k, e = _normal(node.base, syms)
        if k != "smooth":
            raise ValidationError("powers of max/min/abs are not supported")
        return "smooth", e ** node.exp
    a = _normal(node.left, syms)
    b = _normal(node.right, syms)
    if node.op == "-":
        b = _negate(b)
    if node.op in "+-":
        return _add(a, b)
    return _mul(a, b)


def _negate(part):
    k, e = part
    if k == "smooth":
        return k, -e
    return ("min" if k == "max" else "max"), [-p for p in e]


def _add(a, b):
    (ka, ea), (kb, eb) = a, b
    if ka == "smooth" and kb == "smooth":
        return "smooth", ea + eb
    if ka == "smooth":
        return kb, [ea + p for p in eb]
    if kb == "smooth":
        return ka, [p + eb for p in ea]
    if ka != kb:
        raise ValidationError("a sum of a max and a min is not supported")
    return ka, [p + q for p in ea for q in eb]


def _mul(a, b):
    (ka, ea), (kb, eb) = a, b
    if ka == "smooth" and kb == "smooth":
        return "smooth", ea * eb
    if ka != "smooth" and kb != "smooth":
        raise ValidationError("a product of two max/min terms is not supported")
    (kc, c), (kn, pieces) = (a, b) if ka == "smooth" else (b, a)
    if c.free_symbols:
        raise ValidationError("max/min/abs terms may only be multiplied by constants")
    c = float(c)
    if c == 0.0:
        return "smooth", sp.Integer(0)
    scaled = [c * p for p in pieces]
    if c < 0:
        kn = "min" if kn == "max" else "max"
    return kn, scaled


def _smooth_model(e, syms, n, source=None):
    args = list(syms)
    f = sp.lambdify(args, e, "numpy")
    grads = sp.lambdify(args, [sp.diff(e, s) for s in syms], "numpy")

    def fun(x):
        return float(f(*x))

    def jac(x):
        return np.array([float(v) for v in grads(*x)])

    def fun_batch(X):
        v = np.asarray(f(*X.T), dtype=float)
        return np.broadcast_to(v, (X.shape[0],)).reshape(-1, 1).copy()

    return Smooth(fun, jac, n, 1, fun_batch, source=source if source is not None else str(e))


def to_model(node, n, source=None):
    """Build the function model for a tree over n variables."""
    bad = [i for i in variables(node) if i > n]
    if bad:
        raise ValidationError(f"x{max(bad)} referenced but only {n} variables are declared")
    syms = _symbols(n)
    kind, e = _normal(node, syms)
    src = source if source is not None else render(node)
    if kind == "smooth":
        return _smooth_model(e, syms, n, src)
    pieces = [_smooth_model(p, syms, n) for p in e]
    cls = MaxOfSmooth if kind == "max" else MinOfSmooth
    return cls(pieces, source=src)


def compile_expr(text, n):
    """Parse ``text`` and return (tree, model)."""
    node = parse(text)
    return node, to_model(node, n, text)
