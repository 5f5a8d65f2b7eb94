"""Tiny expression language for real-valued functions of named variables.

Expressions are parsed by recursive descent into an immutable tree and then
compiled to a closure that accepts either Python floats or numpy arrays, so
the same ``Expression`` serves scalar quadrature and vectorised grid scans.

Grammar::

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := "-" factor | power ;
    power  := atom ("^" factor)? ;
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")" ;

Unary minus binds looser than ``^`` (``-x^2 == -(x^2)``) and ``^`` is
right-associative.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    ArityError,
    EvaluationError,
    ExprSyntaxError,
    UnknownNameError,
)

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Node",
    "Expression",
    "parse",
    "evaluate",
    "to_source",
    "FUNCTIONS",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Call]

# name -> (min arity, max arity or None for variadic)
FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "abs": (1, 1),
    "pow": (2, 2),
    "min": (2, None),
    "max": (2, None),
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, allowed: Sequence[str]):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0
        self.allowed = list(allowed)
        self.aliases: dict[str, str] = {}
        if len(self.allowed) == 1 and self.allowed[0] in ("x", "x1"):
            self.aliases = {"x": self.allowed[0], "x1": self.allowed[0]}

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{message}, found {found}", tok.pos, self.source)

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str):
        if not self._accept(text):
            self._fail(f"expected {text!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("unexpected trailing input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self._accept("-"):
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            value = float(tok.text)
            if not math.isfinite(value):
                self._fail("numeric literal overflows", tok)
            return Num(value)
        if tok.kind == "ident":
            self.i += 1
            if self._accept("("):
                return self._call(tok)
            name = self.aliases.get(tok.text, tok.text)
            if name not in self.allowed:
                if tok.text in FUNCTIONS:
                    raise ArityError(f"function {tok.text!r} used without arguments", tok.pos, self.source)
                raise UnknownNameError(f"unknown variable {tok.text!r}", tok.pos, self.source)
            return Var(name)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        self._fail("expected a number, variable, function call or '('")

    def _call(self, name_tok: _Token) -> Node:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownNameError(f"unknown function {name!r}", name_tok.pos, self.source)
        args = [self.expr()]
        while self._accept(","):
            args.append(self.expr())
        self._expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if lo == hi else f"at least {lo}"
            raise ArityError(
                f"function {name!r} takes {want} argument(s), got {len(args)}", name_tok.pos, self.source
            )
        return Call(name, tuple(args))


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC_POW if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def _fmt_num(value: float) -> str:
    return repr(float(value))


def to_source(node: Node) -> str:
    """Render a tree as text that parses back to the identical tree."""

    def wrap(child: Node, min_prec: int) -> str:
        text = to_source(child)
        return f"({text})" if _prec(child) < min_prec else text

    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.operand, _PREC_NEG)
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if node.op == "^":
        # base must be an atom; exponent may be a power or a negation
        return f"{wrap(node.left, _PREC_ATOM)}^{wrap(node.right, _PREC_NEG)}"
    p = _PREC[node.op]
    return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"


def _free_vars(node: Node, out: set[str]) -> set[str]:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _free_vars(node.operand, out)
    elif isinstance(node, BinOp):
        _free_vars(node.left, out)
        _free_vars(node.right, out)
    elif isinstance(node, Call):
        for a in node.args:
            _free_vars(a, out)
    return out


# ---------------------------------------------------------------------------
# Compilation to closures

Value = Union[float, np.ndarray]
_Fn = Callable[[Mapping[str, Value]], Value]


def _fault(node: Node, reason: str) -> EvaluationError:
    return EvaluationError(f"{reason} in '{to_source(node)}'", to_source(node))


def _finite(node: Node, value: Value) -> Value:
    if not np.all(np.isfinite(value)):
        raise _fault(node, "non-finite result")
    return value


def _compile(node: Node) -> _Fn:
    if isinstance(node, Num):
        v = node.value
        return lambda env: v

    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise EvaluationError(f"missing binding for variable {name!r}", name) from None

        return var

    if isinstance(node, Neg):
        inner = _compile(node.operand)
        return lambda env: -inner(env)

    if isinstance(node, BinOp):
        lf, rf, op = _compile(node.left), _compile(node.right), node.op
        if op == "+":
            return lambda env: _finite(node, np.add(lf(env), rf(env)))
        if op == "-":
            return lambda env: _finite(node, np.subtract(lf(env), rf(env)))
        if op == "*":
            return lambda env: _finite(node, np.multiply(lf(env), rf(env)))
        if op == "/":

            def div(env):
                num, den = lf(env), rf(env)
                if np.any(np.asarray(den) == 0):
                    raise _fault(node, "division by zero")
                return _finite(node, np.divide(num, den))

            return div
        return lambda env: _power(node, lf(env), rf(env))

    fn = _compile_call(node)
    return fn


def _power(node: Node, base: Value, expo: Value) -> Value:
    b = np.asarray(base, dtype=float)
    e = np.asarray(expo, dtype=float)
    if np.any((b < 0) & (e != np.round(e))):
        raise _fault(node, "negative base with non-integer exponent")
    if np.any((b == 0) & (e < 0)):
        raise _fault(node, "division by zero")
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.power(b, e)
    out = _finite(node, out)
    return float(out) if out.ndim == 0 else out


def _compile_call(node: Call) -> _Fn:
    args = [_compile(a) for a in node.args]
    name = node.func

    if name in ("min", "max"):
        reduce = np.minimum if name == "min" else np.maximum

        def minmax(env):
            acc = args[0](env)
            for a in args[1:]:
                acc = reduce(acc, a(env))
            return acc

        return minmax

    if name == "pow":
        return lambda env: _power(node, args[0](env), args[1](env))

    (arg,) = args
    if name == "log":

        def log(env):
            v = arg(env)
            if np.any(np.asarray(v) <= 0):
                raise _fault(node, "log of non-positive value")
            return np.log(v)

        return log
    if name == "sqrt":

        def sqrt(env):
            v = arg(env)
            if np.any(np.asarray(v) < 0):
                raise _fault(node, "sqrt of negative value")
            return np.sqrt(v)

        return sqrt
    if name == "exp":

        def exp(env):
            with np.errstate(over="ignore"):
                return _finite(node, np.exp(arg(env)))

        return exp
    ufunc = {"sin": np.sin, "cos": np.cos, "abs": np.abs}[name]
    return lambda env: ufunc(arg(env))


# ---------------------------------------------------------------------------
# Public API


class Expression:
    """A parsed, immutable expression with an ordered variable list."""

    __slots__ = ("root", "variables", "source", "_fn")

    def __init__(self, root: Node, variables: Sequence[str], source: str | None = None):
        self.root = root
        self.variables = tuple(variables)
        self.source = source if source is not None else to_source(root)
        self._fn = _compile(root)

    @property
    def free_variables(self) -> frozenset[str]:
        return frozenset(_free_vars(self.root, set()))

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        result = self._fn(bindings)
        if isinstance(result, np.ndarray):
            return result if result.ndim else float(result)
        return float(result)

    __call__ = evaluate

    def to_source(self) -> str:
        return to_source(self.root)

    def __eq__(self, other):
        if not isinstance(other, Expression):
            return NotImplemented
        return self.root == other.root and self.variables == other.variables

    def __hash__(self):
        return hash((self.root, self.variables))

    def __repr__(self):
        return f"Expression({self.source!r}, variables={list(self.variables)})"


def parse(source: str, allowed_variables: Sequence[str]) -> Expression:
    """Parse ``source`` over ``allowed_variables``.

    When exactly one variable named ``x`` or ``x1`` is declared, both
    spellings refer to it.

    Raises ExprSyntaxError, UnknownNameError or ArityError.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source or "")
    root = _Parser(source, allowed_variables).parse()
    return Expression(root, allowed_variables, source)


def evaluate(expr: Expression, bindings: Mapping[str, Value]) -> Value:
    return expr.evaluate(bindings)
