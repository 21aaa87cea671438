"""Small expression language for the depth profiles in run configurations.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Evaluation works on Python floats and on numpy arrays alike.  Domain faults
are raised as :class:`DomainFault` instead of leaking NaN or inf.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "UnboundVariable",
    "DomainFault",
    "parse",
    "evaluate",
    "eval_dual",
    "free_vars",
    "to_source",
    "FUNCTIONS",
    "VARIABLES",
]

VARIABLES = frozenset({"u", "v"})
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at position {position}{detail}")


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r} at position {position}")


class UnboundVariable(ExprError):
    pass


class DomainFault(ExprError):
    def __init__(self, message: str, subexpr: "Expr"):
        self.subexpr = subexpr
        super().__init__(f"{message} in '{to_source(subexpr)}'")


# --------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
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


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


# --------------------------------------------------------------------------
# parser

_ATOM_START = ("number", "identifier", "'('", "'-'")


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(
                f"unexpected {self._describe(self.tok)}", self.tok.pos, (repr(text),)
            )
        self.advance()

    @staticmethod
    def _describe(t: _Tok) -> str:
        return "end of input" if t.kind == "end" else f"token {t.text!r}"

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self._describe(self.tok)}",
                self.tok.pos,
                ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"),
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            # the exponent may carry its own sign: 2^-1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise UnknownIdentifier(t.text, t.pos)
            if t.text in VARIABLES:
                return Var(t.text)
            if t.text in CONSTANTS:
                return Const(t.text)
            raise UnknownIdentifier(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {self._describe(t)}", t.pos, _ATOM_START)


def parse(source: str) -> Expr:
    """Parse ``source`` into an immutable expression tree."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, _ATOM_START)
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# inspection


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, (Num, Const)):
        return frozenset()
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, Call):
        return free_vars(e.arg)
    return free_vars(e.left) | free_vars(e.right)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(e: Expr) -> str:
    """Pretty-print with the minimum parentheses that reparse to the same tree."""
    return _src(e, 0)


def _src(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        # literals are nonnegative after parsing; repr round-trips exactly
        return repr(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_src(e.arg, 0)})"
    if isinstance(e, Neg):
        s = "-" + _src(e.operand, 3)
        return f"({s})" if ctx > 3 else s
    prec = _PREC[e.op]
    if e.op == "^":
        left = _src(e.left, 5)
        right = _src(e.right, 3)
    else:
        left = _src(e.left, prec)
        right = _src(e.right, prec + 1)
    s = f"{left} {e.op} {right}" if prec < 4 else f"{left}^{right}"
    return f"({s})" if prec < ctx else s


# --------------------------------------------------------------------------
# evaluation

Scalar = Union[float, np.ndarray]


def _check_bindings(e: Expr, bindings: Mapping[str, Scalar]) -> None:
    missing = free_vars(e) - set(bindings)
    if missing:
        raise UnboundVariable(f"unbound variable(s): {', '.join(sorted(missing))}")


def evaluate(e: Expr, bindings: Mapping[str, Scalar]) -> Scalar:
    """Evaluate ``e`` in IEEE double precision.

    Scalars in give a float out; any array binding gives an array broadcast
    against the others.
    """
    _check_bindings(e, bindings)
    env = {k: np.asarray(val, dtype=float) for k, val in bindings.items()}
    with np.errstate(all="ignore"):
        out = _ev(e, env)
    out = np.asarray(out, dtype=float)
    if out.ndim == 0:
        return float(out)
    return out


def _ev(e: Expr, env) -> np.ndarray:
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Const):
        return np.float64(CONSTANTS[e.name])
    if isinstance(e, Neg):
        return -_ev(e.operand, env)
    if isinstance(e, Call):
        x = _ev(e.arg, env)
        return _call(e, x)
    a = _ev(e.left, env)
    b = _ev(e.right, env)
    op = e.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(b == 0):
            raise DomainFault("division by zero", e)
        return a / b
    return _pow(e, a, b)


def _pow(e: Expr, a, b):
    b_int = b == np.round(b)
    if np.any((a < 0) & ~b_int):
        raise DomainFault("negative base with non-integer exponent", e)
    if np.any((a == 0) & (b < 0)):
        raise DomainFault("division by zero", e)
    return np.power(a, b)


def _call(e: Call, x):
    f = e.func
    if f == "sin":
        return np.sin(x)
    if f == "cos":
        return np.cos(x)
    if f == "tan":
        return np.tan(x)
    if f == "exp":
        return np.exp(x)
    if f == "abs":
        return np.abs(x)
    if f == "sqrt":
        if np.any(x < 0):
            raise DomainFault("sqrt of negative argument", e)
        return np.sqrt(x)
    if f == "ln":
        if np.any(x <= 0):
            raise DomainFault("ln of nonpositive argument", e)
        return np.log(x)
    raise AssertionError(f)  # parser admits only FUNCTIONS


def eval_dual(e: Expr, bindings: Mapping[str, Scalar], seed: str):
    """Forward-mode derivative: returns ``(value, d value / d seed)``."""
    _check_bindings(e, bindings)
    if seed not in bindings:
        raise UnboundVariable(f"seed variable {seed!r} is not bound")
    env = {}
    for k, val in bindings.items():
        x = np.asarray(val, dtype=float)
        env[k] = (x, np.ones_like(x) if k == seed else np.zeros_like(x))
    with np.errstate(all="ignore"):
        val, der = _dual(e, env)
    val = np.asarray(val, dtype=float)
    der = np.broadcast_to(np.asarray(der, dtype=float), val.shape)
    if val.ndim == 0:
        return float(val), float(der)
    return val, np.array(der)


def _dual(e: Expr, env):
    if isinstance(e, Num):
        return np.float64(e.value), np.float64(0.0)
    if isinstance(e, Const):
        return np.float64(CONSTANTS[e.name]), np.float64(0.0)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        a, da = _dual(e.operand, env)
        return -a, -da
    if isinstance(e, Call):
        x, dx = _dual(e.arg, env)
        y = _call(e, x)
        f = e.func
        if f == "sin":
            return y, np.cos(x) * dx
        if f == "cos":
            return y, -np.sin(x) * dx
        if f == "tan":
            return y, dx / np.cos(x) ** 2
        if f == "exp":
            return y, y * dx
        if f == "ln":
            return y, dx / x
        if f == "sqrt":
            if np.any((x == 0) & (dx != 0)):
                raise DomainFault("derivative of sqrt at zero", e)
            return y, np.where(x == 0, 0.0, dx / (2 * np.where(x == 0, 1.0, y)))
        return y, np.sign(x) * dx  # abs
    a, da = _dual(e.left, env)
    b, db = _dual(e.right, env)
    op = e.op
    if op == "+":
        return a + b, da + db
    if op == "-":
        return a - b, da - db
    if op == "*":
        return a * b, da * b + a * db
    if op == "/":
        if np.any(b == 0):
            raise DomainFault("division by zero", e)
        return a / b, (da * b - a * db) / (b * b)
    y = _pow(e, a, b)
    # d(a^b) = b a^(b-1) da + a^b ln(a) db; the log term only where it matters
    dy = b * np.power(a, b - 1) * da
    if np.any(db != 0):
        if np.any(a <= 0):
            raise DomainFault("derivative of power with nonpositive base", e)
        dy = dy + y * np.log(a) * db
    return y, dy
