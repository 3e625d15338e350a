"""Line-oriented problem documents.

Each non-blank line is ``key = value``; ``#`` starts a comment. Values
starting with ``[``, ``{`` or a number are JSON, everything else is taken
as raw text. Keys::

    variables  = 2
    objective  = x1 + x2
    constraint = {"expr": "x1^2 + x2^2 - 2", "set": "orthant-"}
    start      = [-1, -1]
    M          = 3
    rho0       = 0
    alpha      = 2

``constraint`` may repeat; its ``expr`` is a string or a list of strings and
its ``set`` a kind tag or a descriptor object.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import expr as _expr
from . import sets as _sets
from .errors import ParseError, ValidationError
from .model import Problem, Stack, validate_gradient

KEYS = ("variables", "objective", "constraint", "start", "M", "rho0", "alpha")
_JSONISH = re.compile(r"^[\[{\-+.\d]")


@dataclass
class ProblemSource:
    n: int
    objective: object
    constraints: list = field(default_factory=list)
    start: list = None
    M: float = None
    rho0: float = None
    alpha: float = None


def _json_value(raw, line, col):
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad value: {exc.msg}", line=line, column=col + exc.colno - 1) from None


def _expr_at(text, line, col, n):
    try:
        node = _expr.parse(text)
    except ParseError as exc:
        raise ParseError(str(exc).split(" (column")[0], line=line,
                         column=None if exc.column is None else col + exc.column - 1) from None
    try:
        return node, _expr.to_model(node, n, text)
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}") from None


def _number(value, key, line):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{key} must be a number", line=line)
    return float(value)


def read_entries(text):
    """List of (key, raw value, line, value column)."""
    out = []
    for ln, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ParseError("expected 'key = value'", line=ln, column=col)
        key, val = body.split("=", 1)
        key = key.strip()
        if key not in KEYS:
            raise ParseError(f"unknown key {key!r}", line=ln, column=body.index(key) + 1)
        vcol = len(body) - len(val) + (len(val) - len(val.lstrip())) + 1
        out.append((key, val.strip(), ln, vcol))
    return out


def parse_problem(text, validate=True):
    """Build a validated Problem from a document."""
    entries = read_entries(text)
    seen = {}
    for key, val, ln, col in entries:
        if key != "constraint" and key in seen:
            raise ParseError(f"duplicate key {key!r}", line=ln, column=1)
        seen.setdefault(key, (val, ln, col))
    if "variables" not in seen:
        raise ValidationError("missing 'variables'")
    if "objective" not in seen:
        raise ValidationError("missing 'objective'")
    val, ln, col = seen["variables"]
    n = _json_value(val, ln, col) if _JSONISH.match(val) else None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("variables must be a positive integer", line=ln, column=col)

    val, ln, col = seen["objective"]
    obj_node, obj_model = _expr_at(val, ln, col, n)
    src = ProblemSource(n, obj_node)

    constraints = []
    for key, val, ln, col in entries:
        if key != "constraint":
            continue
        spec = _json_value(val, ln, col)
        if not isinstance(spec, dict) or "expr" not in spec or "set" not in spec:
            raise ParseError("constraint needs an object with 'expr' and 'set'", line=ln, column=col)
        exprs = spec["expr"]
        single = isinstance(exprs, str)
        exprs = [exprs] if single else exprs
        if not exprs or not all(isinstance(e, str) for e in exprs):
            raise ParseError("constraint expr must be a string or a nonempty list of strings", line=ln, column=col)
        nodes, models = [], []
        for e in exprs:
            ecol = val.find(json.dumps(e)[1:-1])
            node, model = _expr_at(e, ln, col + max(ecol, 0), n)
            nodes.append(node)
            models.append(model)
        try:
            target = _sets.from_descriptor(spec["set"], len(exprs))
        except (ValueError, KeyError, TypeError) as exc:
            raise ValidationError(f"line {ln}: bad set descriptor: {exc}") from None
        if target.dim != len(exprs):
            raise ValidationError(f"line {ln}: set has dimension {target.dim} but {len(exprs)} expressions are given")
        fmodel = models[0] if single else Stack(models)
        constraints.append((fmodel, target))
        src.constraints.append((nodes, single, spec["set"]))

    kw = {}
    if "start" in seen:
        val, ln, col = seen["start"]
        start = _json_value(val, ln, col)
        if not isinstance(start, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in start):
            raise ParseError("start must be a list of numbers", line=ln, column=col)
        if len(start) != n:
            raise ValidationError(f"line {ln}: start has {len(start)} entries, expected {n}")
        kw["x0"] = np.array(start, dtype=float)
        src.start = start
    for key in ("M", "rho0", "alpha"):
        if key in seen:
            val, ln, col = seen[key]
            v = _number(_json_value(val, ln, col) if _JSONISH.match(val) else val, key, ln)
            kw[key] = v
            setattr(src, key, v)
    if validate:
        validate_gradient(obj_model)
        for f, _ in constraints:
            validate_gradient(f)
    return Problem(obj_model, constraints, source=src, **kw)


def _fmt(v):
    return json.dumps(v)


def render_problem(problem):
    """Document text for a problem that was read by :func:`parse_problem`."""
    src = problem.source
    if not isinstance(src, ProblemSource):
        raise ValidationError("only problems read from a document can be rendered")
    lines = [f"variables = {src.n}", f"objective = {_expr.render(src.objective)}"]
    for nodes, single, desc in src.constraints:
        texts = [_expr.render(nd) for nd in nodes]
        body = {"expr": texts[0] if single else texts, "set": desc}
        lines.append(f"constraint = {json.dumps(body)}")
    if src.start is not None:
        lines.append(f"start = {_fmt(src.start)}")
    for key in ("M", "rho0", "alpha"):
        v = getattr(src, key)
        if v is not None:
            lines.append(f"{key} = {v!r}")
    return "\n".join(lines) + "\n"
