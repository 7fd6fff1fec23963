"""A small expression language for user-defined metrics and scalar forms.

Grammar (loosest to tightest)::

    expr   := expr ('+' | '-') expr
            | expr ('*' | '/') expr
            | '-' expr
            | expr '^' expr            (right-associative)
            | NUMBER | x1..xn | y1..yn | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sqrt | exp | sin | cos

Expressions evaluate over jets (for exact derivatives) or over plain numpy
arrays (for finite-difference oracles) through the same tree walk.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets
from .connections import ScalarPiForm, component_form
from .jets import Jet, JetContext
from .metrics import ChartPoint, DomainError, FinslerMetric, MetricValidationError

__all__ = [
    "ParseError",
    "EvalError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "pretty",
    "evaluate",
    "eval_expr",
    "metric_from_expr",
    "form_from_exprs",
]

FUNCTIONS = ("sqrt", "exp", "sin", "cos")
MAX_DEPTH = 200


class ParseError(ValueError):
    def __init__(self, position: int, expected: str, found: str):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"at offset {position}: expected {expected}, found {found}")


class EvalError(ArithmeticError):
    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"at offset {position}: {message}")


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "y"
    index: int  # 1-based
    pos: int = 0


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = 0


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _byte_offset(src: str, i: int) -> int:
    return len(src[:i].encode("utf-8"))


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    i = 0
    while True:
        while i < len(src) and src[i].isspace():
            i += 1
        if i == len(src):
            toks.append(_Tok("end", "", _byte_offset(src, i)))
            return toks
        m = _TOKEN.match(src, i)
        if m is None or m.end() == i:
            raise ParseError(_byte_offset(src, i), "a number, name or operator", repr(src[i]))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), _byte_offset(src, start)))
        i = m.end()


def _describe(tok: _Tok) -> str:
    return "end of input" if tok.kind == "end" else repr(tok.text)


_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.n = n
        self.depth = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(tok.pos, repr(text), _describe(tok))
        return self.advance()

    def expr(self, rbp: int = 0) -> Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError(self.peek().pos, "a shallower expression", "nesting too deep")
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX or _INFIX[tok.text] <= rbp:
                break
            self.advance()
            lbp = _INFIX[tok.text]
            # right-associative power; its exponent may carry a unary minus
            right = self.expr(lbp - 1 if tok.text == "^" else lbp)
            left = BinOp(tok.text, left, right, tok.pos)
        self.depth -= 1
        return left

    def nud(self, tok: _Tok) -> Expr:
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(tok.pos, "a finite number", repr(tok.text))
            return Num(value, tok.pos)
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg, tok.pos)
            m = re.fullmatch(r"([xy])([1-9][0-9]*)", tok.text)
            if m is None:
                raise ParseError(tok.pos, "a variable x1..xn, y1..yn or a function", f"unknown identifier {tok.text!r}")
            index = int(m.group(2))
            if index > self.n:
                raise ParseError(tok.pos, f"a variable index <= {self.n}", f"unknown variable {tok.text!r}")
            return Var(m.group(1), index, tok.pos)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expr(_UNARY_BP), tok.pos)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(tok.pos, "an operand", _describe(tok))


def parse(src: str, n: int) -> Expr:
    """Parse ``src`` for a chart of dimension ``n``; raises :class:`ParseError`."""
    if not isinstance(src, str):
        raise TypeError("source must be a string")
    p = _Parser(src, n)
    e = p.expr()
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(tok.pos, "an operator or end of input", _describe(tok))
    return e


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _INFIX[e.op]
    if isinstance(e, Neg):
        return _UNARY_BP
    return 100


def pretty(e: Expr) -> str:
    """Canonical text with the fewest parentheses that reparse to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"{e.kind}{e.index}"
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        inner = pretty(e.operand)
        return f"-({inner})" if _prec(e.operand) < _UNARY_BP else f"-{inner}"
    p = _INFIX[e.op]
    left, right = pretty(e.left), pretty(e.right)
    if e.op == "^":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < p:
            right = f"({right})"
    else:
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
    return f"{left}{e.op}{right}"


def _strip_positions(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(e.value)
    if isinstance(e, Var):
        return Var(e.kind, e.index)
    if isinstance(e, Neg):
        return Neg(_strip_positions(e.operand))
    if isinstance(e, Call):
        return Call(e.func, _strip_positions(e.arg))
    return BinOp(e.op, _strip_positions(e.left), _strip_positions(e.right))


def same_tree(a: Expr, b: Expr) -> bool:
    """Structural equality ignoring source positions."""
    return _strip_positions(a) == _strip_positions(b)


_FUNCS = {"sqrt": jets.sqrt, "exp": jets.exp, "sin": jets.sin, "cos": jets.cos}


def evaluate(e: Expr, x: Sequence, y: Sequence):
    """Evaluate over jets or arrays; ``x[i-1]`` and ``y[i-1]`` supply the variables."""
    try:
        if isinstance(e, Num):
            return e.value
        if isinstance(e, Var):
            return (x if e.kind == "x" else y)[e.index - 1]
        if isinstance(e, Neg):
            return -evaluate(e.operand, x, y)
        if isinstance(e, Call):
            return _FUNCS[e.func](evaluate(e.arg, x, y))
        a = evaluate(e.left, x, y)
        b = evaluate(e.right, x, y)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if not isinstance(b, Jet) and np.any(np.asarray(b) == 0):
                raise jets.JetDomainError("division by zero")
            return a / b
        if isinstance(b, Jet):
            raise jets.JetDomainError("exponent must not depend on the chart variables")
        if isinstance(a, Jet):
            return a ** float(b)
        return np.power(a, b)
    except jets.JetDomainError as exc:
        raise EvalError(e.pos, str(exc)) from exc


def eval_expr(e: Expr, ctx: JetContext, p: ChartPoint) -> Jet:
    x, y = jets.point_jets(ctx, p.x, p.y)
    v = evaluate(e, x, y)
    return v if isinstance(v, Jet) else jets.jet_constant(ctx, v)


def _default_probe_points(n: int, count: int = 8, seed: int = 0) -> list[ChartPoint]:
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        x = rng.uniform(-0.3, 0.3, n)
        y = rng.normal(size=n)
        pts.append(ChartPoint(tuple(x), tuple(y)))
    return pts


def metric_from_expr(
    src: str,
    n: int,
    name: str | None = None,
    probe_points: Sequence[ChartPoint] | None = None,
) -> FinslerMetric:
    """Build and validate a metric from DSL source.

    The Euler identity, positivity and positive-definiteness are checked at
    ``probe_points`` (a seeded default set near x = 0); any failure raises
    :class:`MetricValidationError`.
    """
    expr = parse(src, n)

    def L(x, y):
        return evaluate(expr, x, y)

    def domain(p: ChartPoint) -> bool:
        with np.errstate(all="ignore"):
            try:
                v = float(evaluate(expr, np.array(p.x), np.array(p.y)))
            except (EvalError, ZeroDivisionError, OverflowError):
                return False
        return math.isfinite(v) and v > 0

    m = FinslerMetric(name=name or pretty(expr), dim=n, L=L, domain=domain, params={"expr": expr})
    pts = list(probe_points) if probe_points is not None else _default_probe_points(n)
    try:
        m.validate(pts)
    except (EvalError, DomainError) as exc:
        raise MetricValidationError(f"{m.name}: {exc}") from exc
    return m


def form_from_exprs(srcs: Sequence[str], n: int, name: str | None = None) -> ScalarPiForm:
    """Scalar pi-1-form with components ``A_1..A_n`` given as DSL sources."""
    if len(srcs) != n:
        raise ValueError(f"a form on a {n}-dimensional chart needs {n} components, got {len(srcs)}")
    exprs = [parse(s, n) for s in srcs]
    label = name or "form(" + ", ".join(pretty(e) for e in exprs) + ")"
    return component_form(label, lambda x, y: [evaluate(e, x, y) for e in exprs])
