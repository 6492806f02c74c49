"""Small arithmetic expression language for user-defined right-hand sides.

Grammar (EBNF, also documented in the README):

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;            (* right associative *)
    atom    = NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")" ;
    IDENT   = ("x" | "y") POSITIVE_INT ;      (* x: current, y: delayed *)
    FUNC    = "sin" | "cos" | "exp" | "tanh" | "abs" ;

Precedence: ^  >  unary -  >  * /  >  + -.  Evaluation is vectorized over
numpy arrays: x_i / y_i index the components of the current and delayed
state.  Jacobians of expression-backed models are finite differences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ExprSyntaxError, UnknownIdentifier
from .rhs import RhsModel, fd_jacobian

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, u, v):
        return np.full(np.shape(u)[:-1], self.value)


@dataclass(frozen=True)
class Var:
    kind: str  # "x" current state, "y" delayed state
    index: int  # 1-based

    def eval(self, u, v):
        src = u if self.kind == "x" else v
        return src[..., self.index - 1]


@dataclass(frozen=True)
class Neg:
    arg: object

    def eval(self, u, v):
        return -self.arg.eval(u, v)


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object

    def eval(self, u, v):
        a, b = self.lhs.eval(u, v), self.rhs.eval(u, v)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return a**b


@dataclass(frozen=True)
class Func:
    name: str
    arg: object

    def eval(self, u, v):
        return _FUNCTIONS[self.name](self.arg.eval(u, v))


class _Tokens:
    def __init__(self, source: str):
        self.source = source
        self.items = []  # (kind, text, column)
        pos = 0
        while pos < len(source):
            match = _TOKEN_RE.match(source, pos)
            if match is None or match.end() == pos:
                rest = source[pos:].lstrip()
                if not rest:
                    break
                col = len(source) - len(rest)
                raise ExprSyntaxError(
                    f"unexpected character {rest[0]!r}", column=col
                )
            kind = match.lastgroup
            if kind == "num":
                # the regex splits mantissa/exponent; keep the full slice
                text = source[match.start() : match.end()].strip()
            else:
                text = match.group(kind)
            self.items.append((kind, text, match.start("num" if kind == "num" else kind)))
            pos = match.end()
        self.pos = 0

    def peek(self):
        if self.pos < len(self.items):
            return self.items[self.pos]
        return ("end", "", len(self.source))

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok


class _Parser:
    def __init__(self, source: str, dim: int):
        self.tokens = _Tokens(source)
        self.dim = dim

    def parse(self):
        node = self._expr()
        kind, text, col = self.tokens.peek()
        if kind != "end":
            raise ExprSyntaxError(
                f"trailing input {text!r}", column=col, expected="end of expression"
            )
        return node

    def _expr(self):
        node = self._term()
        while True:
            kind, text, _ = self.tokens.peek()
            if kind == "op" and text in "+-":
                self.tokens.next()
                node = BinOp(text, node, self._term())
            else:
                return node

    def _term(self):
        node = self._unary()
        while True:
            kind, text, _ = self.tokens.peek()
            if kind == "op" and text in "*/":
                self.tokens.next()
                node = BinOp(text, node, self._unary())
            else:
                return node

    def _unary(self):
        kind, text, _ = self.tokens.peek()
        if kind == "op" and text == "-":
            self.tokens.next()
            return Neg(self._unary())
        return self._power()

    def _power(self):
        node = self._atom()
        kind, text, _ = self.tokens.peek()
        if kind == "op" and text == "^":
            self.tokens.next()
            return BinOp("^", node, self._unary())
        return node

    def _atom(self):
        kind, text, col = self.tokens.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in _FUNCTIONS:
                self._expect("(", "function argument list")
                arg = self._expr()
                self._expect(")", "closing parenthesis")
                return Func(text, arg)
            m = re.fullmatch(r"([xy])([0-9]+)", text)
            if not m:
                raise UnknownIdentifier(
                    f"unknown identifier {text!r} at column {col}; "
                    f"use x1..x{self.dim}, y1..y{self.dim} or "
                    f"{sorted(_FUNCTIONS)}"
                )
            index = int(m.group(2))
            if not 1 <= index <= self.dim:
                raise UnknownIdentifier(
                    f"{text!r} at column {col}: component index out of "
                    f"range 1..{self.dim}"
                )
            return Var(m.group(1), index)
        if kind == "op" and text == "(":
            node = self._expr()
            self._expect(")", "closing parenthesis")
            return node
        raise ExprSyntaxError(
            f"unexpected token {text!r}" if text else "unexpected end of input",
            column=col,
            expected="number, identifier, function call or '('",
        )

    def _expect(self, op: str, what: str):
        kind, text, col = self.tokens.next()
        if kind != "op" or text != op:
            raise ExprSyntaxError(
                f"found {text!r}" if text else "unexpected end of input",
                column=col,
                expected=what,
            )


def parse_expr(source: str, dim: int):
    """Parse one scalar expression over x1..xN, y1..yN."""
    return _Parser(source, dim).parse()


# -- printing (minimal parentheses; reparsing yields an equal tree) ----------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def to_source(node) -> str:
    return _print(node, 0)


def _print(node, parent_prec: int) -> str:
    if isinstance(node, Num):
        text = repr(node.value)
        return text[:-2] if text.endswith(".0") else text
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Func):
        return f"{node.name}({_print(node.arg, 0)})"
    if isinstance(node, Neg):
        inner = _print(node.arg, _PREC["neg"])
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC["neg"] else text
    prec = _PREC[node.op]
    # left operand at own precedence, right one step tighter (left assoc),
    # mirrored for the right-associative power operator
    if node.op == "^":
        lhs = _print(node.lhs, prec + 1)
        rhs = _print(node.rhs, prec)
    else:
        lhs = _print(node.lhs, prec)
        rhs = _print(node.rhs, prec + 1)
    text = f"{lhs} {node.op} {rhs}" if node.op in "+-" else f"{lhs}{node.op}{rhs}"
    return f"({text})" if parent_prec > prec else text


def model_from_exprs(sources: list[str], dim: int | None = None) -> RhsModel:
    """Build an RhsModel from one expression per component (FD Jacobians)."""
    n = dim if dim is not None else len(sources)
    if len(sources) != n:
        raise UnknownIdentifier(
            f"need {n} expressions for dimension {n}, got {len(sources)}"
        )
    asts = [parse_expr(src, n) for src in sources]

    def ev(u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        return np.stack([ast.eval(u, v) for ast in asts], axis=-1)

    return RhsModel(
        dim=n,
        eval_fn=ev,
        jac1_fn=partial(fd_jacobian, ev, which=1),
        jac2_fn=partial(fd_jacobian, ev, which=2),
        jac_kind="fd",
        name="expr",
    )
