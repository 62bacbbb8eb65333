"""Scalar expressions for potentials, vector potentials and metrics.

Grammar (``^`` is right-associative; unary minus binds looser than ``^``
so ``-x^2`` means ``-(x^2)``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | func '(' expr ')' | '(' expr ')'

Identifiers are ``x``, ``t`` and ``R1`` ... ``Rm``.  Evaluation is
vectorised over ``x`` so a whole grid is evaluated in one call.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import ExprArityError, ExprEvalError, ExprNameError, ExprSyntaxError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    src = src.replace("−", "-")
    toks, pos = [], 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            col = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[col]!r}", col)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(src)))
    return toks


def variables_for(m: int, *, x: bool = True, t: bool = True) -> frozenset[str]:
    names = {f"R{j}" for j in range(1, m + 1)}
    if x:
        names.add("x")
    if t:
        names.add("t")
    return frozenset(names)


class _Parser:
    def __init__(self, src: str, allowed: frozenset[str]):
        self.toks = _tokenize(src)
        self.i = 0
        self.allowed = allowed

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.tok.text == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.text == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                if self.tok.text != "(":
                    raise ExprArityError(f"function {tok.text!r} takes one argument", tok.pos)
                self.take()
                if self.tok.text == ")":
                    raise ExprArityError(f"function {tok.text!r} takes one argument", self.tok.pos)
                arg = self.expr()
                if self.tok.text == ",":
                    raise ExprArityError(f"function {tok.text!r} takes one argument", self.tok.pos)
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text not in self.allowed:
                raise ExprNameError(f"unknown identifier {tok.text!r}", tok.pos)
            return Var(tok.text)
        if tok.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.pos)


def parse(src: str, m: int = 1, variables: Iterable[str] | None = None) -> Expr:
    """Parse ``src`` into an AST.

    ``variables`` restricts the identifier set (defaults to ``x``, ``t``
    and ``R1``..``Rm``).
    """
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    allowed = frozenset(variables) if variables is not None else variables_for(m)
    return _Parser(src, allowed).parse()


def identifiers(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return identifiers(e.operand)
    if isinstance(e, Call):
        return identifiers(e.arg)
    return identifiers(e.left) | identifiers(e.right)


def to_source(e: Expr) -> str:
    """Fully parenthesised source text; ``parse(to_source(e)) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.left)}{e.op}{to_source(e.right)})"


def _eval(e: Expr, env: dict):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ExprNameError(f"unbound identifier {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        return FUNCTIONS[e.func](_eval(e.arg, env))
    a = _eval(e.left, env)
    b = _eval(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return np.divide(a, b)
    return np.power(a, b)


def evaluate(e: Expr, x=0.0, R=(), t: float = 0.0):
    """Evaluate ``e`` at position(s) ``x``, parameter point ``R`` and time ``t``.

    Returns a float for scalar ``x`` and an array for array ``x``.  Any
    non-finite result raises :class:`ExprEvalError`.
    """
    env = {"x": np.asarray(x, dtype=float) if np.ndim(x) else float(x), "t": float(t)}
    for j, r in enumerate(np.atleast_1d(np.asarray(R, dtype=float)), start=1):
        env[f"R{j}"] = float(r)
    with np.errstate(all="ignore"):
        val = _eval(e, env)
    val = np.asarray(val, dtype=float)
    if not np.all(np.isfinite(val)):
        raise ExprEvalError(f"non-finite value from {to_source(e)}")
    if np.ndim(x):
        return np.broadcast_to(val, np.shape(x)).astype(float)
    return float(val)


def is_constant_in(e: Expr, name: str) -> bool:
    return name not in identifiers(e)
