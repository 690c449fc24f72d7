"""Scalar expression language: parsing, evaluation, differentiation, compilation.

Expressions are written over the variables ``t``, ``lambda`` and ``x1..xn``.
Grammar (``^`` binds tighter than unary minus, which binds tighter than
``*`` and ``/``)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

The identifier ``pi`` is read as the constant 3.14159...
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import ExprDomainError, ExprSyntaxError, NonDifferentiableError

FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "exp": 1,
    "ln": 1,
    "sqrt": 1,
    "abs": 1,
    "heaviside": 1,
    "pow": 2,
    "max": 2,
    "min": 2,
}

NAMED_CONSTANTS = {"pi": math.pi}

_VAR_RE = re.compile(r"x([1-9][0-9]*)$")


@dataclass(frozen=True)
class ExprNode:
    """Immutable AST node.

    ``kind`` is one of ``const``, ``var``, ``unary``, ``binary``, ``call``.
    ``value`` holds the float for constants, the name for variables, and the
    operator or function symbol otherwise. ``pos`` is the byte offset in the
    source (``-1`` for synthesized nodes) and does not take part in equality.
    """

    kind: str
    value: object
    children: tuple["ExprNode", ...] = ()
    pos: int = field(default=-1, compare=False)

    def __str__(self) -> str:
        return to_string(self)

    def variables(self) -> set[str]:
        if self.kind == "var":
            return {self.value}
        out: set[str] = set()
        for c in self.children:
            out |= c.variables()
        return out

    @property
    def is_const(self) -> bool:
        return self.kind == "const"

    def is_zero(self) -> bool:
        return self.kind == "const" and self.value == 0.0

    def is_one(self) -> bool:
        return self.kind == "const" and self.value == 1.0


@dataclass(frozen=True)
class EvalContext:
    t: float = 0.0
    lam: float = 0.0
    x: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))


def const(v: float) -> ExprNode:
    return ExprNode("const", float(v))


def var(name: str) -> ExprNode:
    return ExprNode("var", name)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int  # byte offset


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    i = 0
    byte = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[i]!r}", byte)
        text = m.group()
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, text, byte))
        byte += len(text.encode("utf-8"))
        i = m.end()
    toks.append(_Tok("end", "", byte))
    return toks


class _Parser:
    def __init__(self, source: str, variables: Callable[[str], bool]):
        self.toks = _tokenize(source)
        self.i = 0
        self.is_var = variables

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _accept(self, text: str) -> _Tok | None:
        if self.tok.kind == "op" and self.tok.text == text:
            tok = self.tok
            self.i += 1
            return tok
        return None

    def _expect(self, text: str) -> _Tok:
        tok = self._accept(text)
        if tok is None:
            self._fail(f"expected {text!r}")
        return tok

    def _fail(self, msg: str):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{msg}, found {found}", tok.pos)

    def parse(self) -> ExprNode:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("unexpected token")
        return node

    def expr(self) -> ExprNode:
        node = self.term()
        while True:
            tok = self._accept("+") or self._accept("-")
            if tok is None:
                return node
            node = ExprNode("binary", tok.text, (node, self.term()), tok.pos)

    def term(self) -> ExprNode:
        node = self.unary()
        while True:
            tok = self._accept("*") or self._accept("/")
            if tok is None:
                return node
            node = ExprNode("binary", tok.text, (node, self.unary()), tok.pos)

    def unary(self) -> ExprNode:
        tok = self._accept("-")
        if tok is not None:
            return ExprNode("unary", "-", (self.unary(),), tok.pos)
        return self.power()

    def power(self) -> ExprNode:
        base = self.atom()
        tok = self._accept("^")
        if tok is None:
            return base
        return ExprNode("binary", "^", (base, self.unary()), tok.pos)

    def atom(self) -> ExprNode:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return ExprNode("const", float(tok.text), (), tok.pos)
        if tok.kind == "ident":
            self.i += 1
            name = tok.text
            if self._accept("("):
                if name not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {name!r}", tok.pos)
                args = [self.expr()]
                while self._accept(","):
                    args.append(self.expr())
                self._expect(")")
                if len(args) != FUNCTIONS[name]:
                    raise ExprSyntaxError(
                        f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                        tok.pos,
                    )
                return ExprNode("call", name, tuple(args), tok.pos)
            if name in NAMED_CONSTANTS:
                return ExprNode("const", NAMED_CONSTANTS[name], (), tok.pos)
            if name in FUNCTIONS:
                raise ExprSyntaxError(f"function {name!r} used without arguments", tok.pos)
            if not self.is_var(name):
                raise ExprSyntaxError(f"unknown identifier {name!r}", tok.pos)
            return ExprNode("var", name, (), tok.pos)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        self._fail("expected a number, identifier or '('")


def allowed_variables(n: int | None, *, allow_lambda: bool = True, allow_x: bool = True):
    """Predicate accepting the variable names legal for dimension ``n``.

    ``n=None`` accepts any ``xk``.
    """

    def check(name: str) -> bool:
        if name == "t":
            return True
        if name == "lambda":
            return allow_lambda
        m = _VAR_RE.match(name)
        if m is None or not allow_x:
            return False
        return n is None or int(m.group(1)) <= n

    return check


def parse(source: str, n: int | None = None, *, allow_lambda: bool = True,
          allow_x: bool = True) -> ExprNode:
    """Parse ``source`` into an :class:`ExprNode`.

    Raises :class:`ExprSyntaxError` (carrying the byte offset) on malformed
    input, unknown identifiers and arity mismatches.
    """
    return _Parser(source, allowed_variables(n, allow_lambda=allow_lambda,
                                             allow_x=allow_x)).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "unary": 3, "^": 4}


def _fmt_const(v: float) -> str:
    s = repr(float(v))
    if s in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot print non-finite constant {s}")
    return f"({s})" if v < 0 or s.startswith("-") else s


def _prec(node: ExprNode) -> int:
    if node.kind == "binary":
        return _PREC[node.value]
    if node.kind == "unary":
        return _PREC["unary"]
    return 5


def to_string(node: ExprNode) -> str:
    """Render ``node`` in the input grammar; ``parse(to_string(e))`` rebuilds ``e``."""
    k = node.kind
    if k == "const":
        return _fmt_const(node.value)
    if k == "var":
        return node.value
    if k == "call":
        return f"{node.value}({', '.join(to_string(c) for c in node.children)})"
    if k == "unary":
        (c,) = node.children
        inner = to_string(c)
        if _prec(c) < _PREC["unary"]:
            inner = f"({inner})"
        return f"-{inner}"
    op = node.value
    left, right = node.children
    p = _PREC[op]
    ls, rs = to_string(left), to_string(right)
    if op == "^":
        # right associative; the base must be an atom
        if _prec(left) <= p:
            ls = f"({ls})"
        if _prec(right) < _PREC["unary"]:
            rs = f"({rs})"
        return f"{ls}^{rs}"
    if _prec(left) < p:
        ls = f"({ls})"
    if _prec(right) <= p:
        rs = f"({rs})"
    return f"{ls} {op} {rs}"


# ---------------------------------------------------------------------------
# evaluation


def _domain(msg: str, node: ExprNode):
    raise ExprDomainError(msg, node.pos, to_string(node))


def _pow(a: float, b: float, node: ExprNode | None = None) -> float:
    try:
        return math.pow(a, b)
    except (ValueError, ZeroDivisionError):
        if node is None:
            raise
        _domain(f"pow({a!r}, {b!r}) is undefined", node)
    except OverflowError:
        if node is None:
            raise
        _domain(f"pow({a!r}, {b!r}) overflows", node)


def evaluate(e: ExprNode, ctx: EvalContext) -> float:
    """Evaluate ``e`` in IEEE double precision.

    Domain violations raise :class:`ExprDomainError` naming the offending
    node and its source offset.
    """
    k = e.kind
    if k == "const":
        return e.value
    if k == "var":
        name = e.value
        if name == "t":
            return float(ctx.t)
        if name == "lambda":
            return float(ctx.lam)
        idx = int(name[1:]) - 1
        if idx >= len(ctx.x):
            _domain(f"variable {name} is not bound (state has dimension {len(ctx.x)})", e)
        return ctx.x[idx]
    args = [evaluate(c, ctx) for c in e.children]
    if k == "unary":
        return -args[0]
    if k == "binary":
        a, b = args
        op = e.value
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                _domain("division by zero", e)
            return a / b
        return _pow(a, b, e)
    return _call(e, args)


def _call(e: ExprNode, args: list[float]) -> float:
    name = e.value
    u = args[0]
    try:
        if name == "sin":
            return math.sin(u)
        if name == "cos":
            return math.cos(u)
        if name == "tan":
            return math.tan(u)
        if name == "exp":
            return math.exp(u)
        if name == "ln":
            if u <= 0.0:
                _domain(f"ln of non-positive value {u!r}", e)
            return math.log(u)
        if name == "sqrt":
            if u < 0.0:
                _domain(f"sqrt of negative value {u!r}", e)
            return math.sqrt(u)
        if name == "abs":
            return abs(u)
        if name == "heaviside":
            return 1.0 if u > 0.0 else 0.0
        if name == "pow":
            return _pow(u, args[1], e)
        if name == "max":
            return max(u, args[1])
        if name == "min":
            return min(u, args[1])
    except (ValueError, OverflowError) as exc:
        _domain(f"{name} failed: {exc}", e)
    raise AssertionError(f"unhandled function {name}")


# ---------------------------------------------------------------------------
# compilation to Python callables

_PY_FUNCS = {
    "sin": "_m.sin",
    "cos": "_m.cos",
    "tan": "_m.tan",
    "exp": "_m.exp",
    "ln": "_m.log",
    "sqrt": "_m.sqrt",
    "abs": "abs",
    "pow": "_m.pow",
    "max": "max",
    "min": "min",
}


def _emit(e: ExprNode) -> str:
    k = e.kind
    if k == "const":
        return repr(e.value)
    if k == "var":
        if e.value == "t":
            return "t"
        if e.value == "lambda":
            return "lam"
        return f"x[{int(e.value[1:]) - 1}]"
    args = [_emit(c) for c in e.children]
    if k == "unary":
        return f"(-{args[0]})"
    if k == "binary":
        if e.value == "^":
            return f"_m.pow({args[0]}, {args[1]})"
        return f"({args[0]} {e.value} {args[1]})"
    if e.value == "heaviside":
        return f"(1.0 if {args[0]} > 0.0 else 0.0)"
    return f"{_PY_FUNCS[e.value]}({', '.join(args)})"


def _build(src: str):
    return eval(compile(src, "<expr>", "eval"), {"_m": math, "__builtins__": {"abs": abs, "max": max, "min": min}})


def compile_scalar(e: ExprNode) -> Callable[[float, float, Sequence[float]], float]:
    """Compile ``e`` to a fast ``fn(t, lam, x)``.

    Domain failures surface as ``ValueError``/``ZeroDivisionError``/
    ``OverflowError``; call :func:`evaluate` on the same point for a located
    :class:`ExprDomainError`.
    """
    return _build(f"lambda t, lam, x: {_emit(e)}")


def compile_tuple(nodes: Iterable[ExprNode]) -> Callable[[float, float, Sequence[float]], tuple]:
    """Compile several expressions into one function returning a tuple."""
    body = ", ".join(_emit(e) for e in nodes)
    return _build(f"lambda t, lam, x: ({body},)")


def explain_failure(nodes: Iterable[ExprNode], t: float, lam: float, x: Sequence[float]):
    """Re-evaluate ``nodes`` with the checked evaluator to raise a located error."""
    ctx = EvalContext(t, lam, tuple(x))
    for e in nodes:
        evaluate(e, ctx)
    raise ExprDomainError("numeric failure in compiled expression", -1, "")


# ---------------------------------------------------------------------------
# simplifying constructors


def _fold(op, *vals):
    try:
        out = op(*vals)
    except (ArithmeticError, ValueError):
        return None
    return out if math.isfinite(out) else None


def add(a: ExprNode, b: ExprNode) -> ExprNode:
    if a.is_const and b.is_const:
        v = _fold(lambda p, q: p + q, a.value, b.value)
        if v is not None:
            return const(v)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    return ExprNode("binary", "+", (a, b))


def sub(a: ExprNode, b: ExprNode) -> ExprNode:
    if a.is_const and b.is_const:
        v = _fold(lambda p, q: p - q, a.value, b.value)
        if v is not None:
            return const(v)
    if b.is_zero():
        return a
    if a.is_zero():
        return neg(b)
    return ExprNode("binary", "-", (a, b))


def mul(a: ExprNode, b: ExprNode) -> ExprNode:
    if a.is_zero() or b.is_zero():
        return const(0.0)
    if a.is_const and b.is_const:
        v = _fold(lambda p, q: p * q, a.value, b.value)
        if v is not None:
            return const(v)
    if a.is_one():
        return b
    if b.is_one():
        return a
    return ExprNode("binary", "*", (a, b))


def div(a: ExprNode, b: ExprNode) -> ExprNode:
    if a.is_zero() and not b.is_zero():
        return const(0.0)
    if b.is_one():
        return a
    if a.is_const and b.is_const and b.value != 0.0:
        v = _fold(lambda p, q: p / q, a.value, b.value)
        if v is not None:
            return const(v)
    return ExprNode("binary", "/", (a, b))


def neg(a: ExprNode) -> ExprNode:
    if a.is_const:
        return const(-a.value)
    if a.kind == "unary":
        return a.children[0]
    return ExprNode("unary", "-", (a,))


def power(a: ExprNode, b: ExprNode) -> ExprNode:
    if b.is_zero():
        return const(1.0)
    if b.is_one():
        return a
    if a.is_const and b.is_const:
        v = _fold(math.pow, a.value, b.value)
        if v is not None:
            return const(v)
    return ExprNode("binary", "^", (a, b))


def call(name: str, *args: ExprNode) -> ExprNode:
    return ExprNode("call", name, tuple(args))


# ---------------------------------------------------------------------------
# differentiation


def depends_on(e: ExprNode, name: str) -> bool:
    if e.kind == "var":
        return e.value == name
    return any(depends_on(c, name) for c in e.children)


def differentiate(e: ExprNode, wrt: str) -> ExprNode:
    """Symbolic partial derivative of ``e`` with respect to variable ``wrt``.

    Simplification is limited to constant folding and 0/1 elimination.
    ``heaviside`` of an argument that depends on ``wrt`` raises
    :class:`NonDifferentiableError`.
    """
    if not depends_on(e, wrt):
        return const(0.0)
    k = e.kind
    if k == "var":
        return const(1.0)
    if k == "unary":
        return neg(differentiate(e.children[0], wrt))
    if k == "binary":
        u, v = e.children
        op = e.value
        du, dv = differentiate(u, wrt), differentiate(v, wrt)
        if op == "+":
            return add(du, dv)
        if op == "-":
            return sub(du, dv)
        if op == "*":
            return add(mul(du, v), mul(u, dv))
        if op == "/":
            return div(sub(mul(du, v), mul(u, dv)), power(v, const(2.0)))
        return _d_pow(u, v, du, dv)
    return _d_call(e, wrt)


def _d_pow(u, v, du, dv) -> ExprNode:
    if dv.is_zero():
        return mul(mul(v, power(u, sub(v, const(1.0)))), du)
    if du.is_zero():
        return mul(mul(power(u, v), call("ln", u)), dv)
    return mul(power(u, v), add(mul(dv, call("ln", u)), div(mul(v, du), u)))


def _d_call(e: ExprNode, wrt: str) -> ExprNode:
    name = e.value
    if name == "heaviside":
        raise NonDifferentiableError(
            f"heaviside is not differentiable (argument depends on {wrt})", e.pos
        )
    if name == "pow":
        u, v = e.children
        return _d_pow(u, v, differentiate(u, wrt), differentiate(v, wrt))
    if name in ("max", "min"):
        u, v = e.children
        du, dv = differentiate(u, wrt), differentiate(v, wrt)
        sel = call("heaviside", sub(u, v) if name == "max" else sub(v, u))
        return add(mul(sel, du), mul(sub(const(1.0), sel), dv))
    (u,) = e.children
    du = differentiate(u, wrt)
    if name == "sin":
        outer = call("cos", u)
    elif name == "cos":
        outer = neg(call("sin", u))
    elif name == "tan":
        outer = div(const(1.0), power(call("cos", u), const(2.0)))
    elif name == "exp":
        outer = e
    elif name == "ln":
        return div(du, u)
    elif name == "sqrt":
        return div(du, mul(const(2.0), e))
    elif name == "abs":
        outer = div(u, e)
    else:  # pragma: no cover - FUNCTIONS is closed
        raise NonDifferentiableError(f"no derivative rule for {name}", e.pos)
    return mul(outer, du)


def substitute(e: ExprNode, name: str, replacement: ExprNode) -> ExprNode:
    """Replace every occurrence of variable ``name`` by ``replacement``."""
    if e.kind == "var":
        return replacement if e.value == name else e
    if not e.children:
        return e
    return ExprNode(e.kind, e.value, tuple(substitute(c, name, replacement) for c in e.children), e.pos)
