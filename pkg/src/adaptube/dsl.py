"""A small expression language for component functions.

Grammar (whitespace is insignificant, no implicit multiplication)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := unary                 # constant, integer valued, in [-6, 6]
    atom     := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
    FUNC     := sin | cos | exp | log | sqrt | tanh
    NUMBER   := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]

``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and is right
associative.  Every identifier must be one of the declared coordinates.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import scalar

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ScalarExpr",
    "ExprSyntaxError",
    "UnboundIdentifierError",
    "parse",
    "evaluate",
    "pretty",
    "FUNCTIONS",
]

FUNCTIONS = {
    "sin": scalar.sin,
    "cos": scalar.cos,
    "exp": scalar.exp,
    "log": scalar.log,
    "sqrt": scalar.sqrt,
    "tanh": scalar.tanh,
}
MAX_EXPONENT = 6


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnboundIdentifierError(ValueError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unbound identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


# AST ------------------------------------------------------------------------


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
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]


# lexer ----------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.text = text
        self.coords = set(coords)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            found = "end of input" if kind == "eof" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.text)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"unexpected {text!r}", pos, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            pos = self.peek()[2]
            exponent = self.unary()
            return Pow(base, self._constant_exponent(exponent, pos))
        return base

    def _constant_exponent(self, node: Node, pos: int) -> int:
        if _free_vars(node):
            raise ExprSyntaxError("exponent must be a constant", pos, self.text)
        try:
            value = _compile(node, [])()
        except scalar.EvaluationError:
            raise ExprSyntaxError("exponent is not a finite constant", pos, self.text)
        if value != int(value) or abs(value) > MAX_EXPONENT:
            raise ExprSyntaxError(
                f"exponent must be an integer in [-{MAX_EXPONENT}, {MAX_EXPONENT}]",
                pos,
                self.text,
            )
        return int(value)

    def atom(self) -> Node:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text not in self.coords:
                raise UnboundIdentifierError(text, pos)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "eof" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos, self.text)


def _free_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg,)):
        return _free_vars(node.operand)
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    if isinstance(node, Pow):
        return _free_vars(node.base)
    return _free_vars(node.arg)


# evaluation -----------------------------------------------------------------


def _compile(node: Node, coords: Sequence[str]) -> Callable:
    """Closure taking positional arguments in ``coords`` order."""
    if isinstance(node, Num):
        v = node.value
        return lambda *xs: v
    if isinstance(node, Var):
        i = list(coords).index(node.name)
        return lambda *xs: xs[i]
    if isinstance(node, Neg):
        f = _compile(node.operand, coords)
        return lambda *xs: -f(*xs)
    if isinstance(node, Pow):
        f = _compile(node.base, coords)
        k = node.exponent
        return lambda *xs: scalar.ipow(f(*xs), k)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        f = _compile(node.arg, coords)
        return lambda *xs: fn(f(*xs))
    left = _compile(node.left, coords)
    right = _compile(node.right, coords)
    if node.op == "+":
        return lambda *xs: left(*xs) + right(*xs)
    if node.op == "-":
        return lambda *xs: left(*xs) - right(*xs)
    if node.op == "*":
        return lambda *xs: left(*xs) * right(*xs)

    def div(*xs):
        try:
            return left(*xs) / right(*xs)
        except ZeroDivisionError as exc:
            raise scalar.EvaluationError("division by zero") from exc

    return div


@dataclass(frozen=True)
class ScalarExpr:
    """Parsed expression bound to an ordered coordinate list."""

    root: Node
    coords: tuple[str, ...]
    source: str = field(default="", compare=False)
    fn: Callable = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fn", _compile(self.root, self.coords))

    def __call__(self, *xs):
        """Evaluate positionally (coordinate order) over any numeric-tower type."""
        return self.fn(*xs)

    def __str__(self):
        return pretty(self)


def parse(text: str, coords: Sequence[str]) -> ScalarExpr:
    root = _Parser(text, coords).parse()
    return ScalarExpr(root, tuple(coords), text)


def evaluate(e: ScalarExpr, env: Mapping[str, object]):
    """Evaluate ``e`` with coordinates bound by name in ``env``."""
    try:
        args = [env[c] for c in e.coords]
    except KeyError as exc:
        raise KeyError(f"coordinate {exc.args[0]!r} not bound") from None
    out = e.fn(*args)
    if not np.all(np.isfinite(scalar.value_of(out))):
        raise scalar.EvaluationError("non-finite result")
    return out


# pretty printing ------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _fmt(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_fmt(node.arg)})"
    if isinstance(node, Neg):
        inner = _fmt(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    if isinstance(node, Pow):
        base = _fmt(node.base)
        if _prec(node.base) <= 4:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[node.op]
    left, right = _fmt(node.left), _fmt(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def pretty(e: ScalarExpr | Node) -> str:
    return _fmt(e.root if isinstance(e, ScalarExpr) else e)
