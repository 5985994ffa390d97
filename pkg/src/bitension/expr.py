"""Expression trees for chart components.

The grammar is deliberately small: numbers, ``pi``, chart variables
``u1..u6``, named parameters, ``+ - * /``, integer powers ``^``, and the
unary functions ``sin``, ``cos``, ``sqrt`` plus unary minus.  Every catalog
chart is expressible in it, and each primitive has a hand-verified jet lift.

Trees are frozen dataclasses, so structurally equal subtrees hash equal and
the jet evaluator can share work between components (all the catalog charts
reuse sin/cos factors heavily).

``parse(to_string(tree)) == tree`` holds for every tree: the printer inserts
parentheses wherever reparsing would otherwise re-associate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import jets


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class ExprEvalError(ValueError):
    """Evaluation failed (domain violation, unknown parameter, ...)."""


FUNCTIONS = ("sin", "cos", "sqrt")


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 0-based; prints as u<index+1>


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # 'neg' | 'sin' | 'cos' | 'sqrt'
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # '+' | '-' | '*' | '/'
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<ws>\s+)"
)

_VAR_RE = re.compile(r"^u([1-9][0-9]*)$")


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.advance()
        raise ExprSyntaxError(f"expected {text!r}", tok.line, tok.column)

    def parse(self) -> Expr:
        e = self.expression()
        tok = self.peek()
        if tok.kind != "eof":
            raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.line, tok.column)
        return e

    def expression(self) -> Expr:
        left = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            left = Binary(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            nxt = self.peek()
            after = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
            # fold a minus applied directly to a literal into the constant, so
            # printed negative constants reparse to the identical tree;
            # -2^2 keeps the conventional reading -(2^2) and is not folded
            if nxt.kind == "num" and not (
                after is not None and after.kind == "op" and after.text == "^"
            ):
                self.advance()
                return Const(-float(nxt.text))
            return Unary("neg", self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            sign = 1
            tok = self.peek()
            if tok.kind == "op" and tok.text == "-":
                self.advance()
                sign = -1
                tok = self.peek()
            if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
                raise ExprSyntaxError("expected integer exponent", tok.line, tok.column)
            self.advance()
            return Power(base, sign * int(tok.text))
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "ident":
            name = tok.text
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if name not in FUNCTIONS:
                    raise ExprSyntaxError(
                        f"unknown function {name!r}", tok.line, tok.column
                    )
                self.advance()
                arg = self.expression()
                self.expect(")")
                return Unary(name, arg)
            if name == "pi":
                return Pi()
            m = _VAR_RE.match(name)
            if m:
                return Var(int(m.group(1)) - 1)
            return Param(name)
        if tok.kind == "op" and tok.text == "(":
            e = self.expression()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected token {tok.text or 'end of input'!r}",
                              tok.line, tok.column)


def parse(source: str) -> Expr:
    return _Parser(_tokenize(source)).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_NEG
    if isinstance(e, Power):
        return _PREC_POW
    if isinstance(e, Const) and e.value < 0:
        return _PREC_NEG
    return _PREC_ATOM


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return f"u{e.index + 1}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.arg)
            # constants are always parenthesized: "-2.0" would reparse as the
            # folded negative literal rather than an explicit negation node
            if _prec(e.arg) < _PREC_NEG or isinstance(e.arg, Const):
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({to_string(e.arg)})"
    if isinstance(e, Binary):
        left = to_string(e.left)
        if _prec(e.left) < _PREC[e.op]:
            left = f"({left})"
        right = to_string(e.right)
        # strict on the right so reparsing cannot re-associate the chain
        if _prec(e.right) <= _PREC[e.op]:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, Power):
        base = to_string(e.base)
        if _prec(e.base) <= _PREC_POW:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def free_params(e: Expr) -> set[str]:
    if isinstance(e, Param):
        return {e.name}
    if isinstance(e, Unary):
        return free_params(e.arg)
    if isinstance(e, Binary):
        return free_params(e.left) | free_params(e.right)
    if isinstance(e, Power):
        return free_params(e.base)
    return set()


def max_var_index(e: Expr) -> int:
    """Largest 0-based variable index used, or -1 if none."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.arg)
    if isinstance(e, Binary):
        return max(max_var_index(e.left), max_var_index(e.right))
    if isinstance(e, Power):
        return max_var_index(e.base)
    return -1


def eval_jet(e: Expr, var_jets, params: dict, memo: dict | None = None) -> jets.Jet:
    """Evaluate over jets.  ``memo`` shares equal subtrees within one point."""
    if memo is None:
        memo = {}
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = jets.Jet.constant(e.value, var_jets[0].num_vars)
    elif isinstance(e, Pi):
        out = jets.Jet.constant(math.pi, var_jets[0].num_vars)
    elif isinstance(e, Var):
        out = var_jets[e.index]
    elif isinstance(e, Param):
        try:
            out = jets.Jet.constant(float(params[e.name]), var_jets[0].num_vars)
        except KeyError:
            raise ExprEvalError(f"unknown parameter {e.name!r}") from None
    elif isinstance(e, Unary):
        arg = eval_jet(e.arg, var_jets, params, memo)
        out = -arg if e.op == "neg" else jets.elementary(e.op, arg)
    elif isinstance(e, Binary):
        a = eval_jet(e.left, var_jets, params, memo)
        b = eval_jet(e.right, var_jets, params, memo)
        if e.op == "+":
            out = a + b
        elif e.op == "-":
            out = a - b
        elif e.op == "*":
            out = a * b
        else:
            if b.value == 0.0:
                raise jets.JetDomainError("recip", 0.0)
            out = a / b
    elif isinstance(e, Power):
        out = jets.elementary(
            "pow_int", eval_jet(e.base, var_jets, params, memo), exponent=e.exponent
        )
    else:
        raise TypeError(f"not an expression node: {e!r}")
    memo[e] = out
    return out


def eval_real(e: Expr, point, params: dict, lib=math):
    """Plain numeric evaluation; ``lib`` may be ``math`` or ``mpmath.mp``-like.

    Kept free of any jet machinery so finite-difference oracles built on it
    are an independent derivative path.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Pi):
        return lib.pi
    if isinstance(e, Var):
        return point[e.index]
    if isinstance(e, Param):
        try:
            return params[e.name]
        except KeyError:
            raise ExprEvalError(f"unknown parameter {e.name!r}") from None
    if isinstance(e, Unary):
        a = eval_real(e.arg, point, params, lib)
        if e.op == "neg":
            return -a
        if e.op == "sqrt" and a < 0:
            raise ExprEvalError(f"sqrt of negative value {a!r}")
        return getattr(lib, e.op)(a)
    if isinstance(e, Binary):
        a = eval_real(e.left, point, params, lib)
        b = eval_real(e.right, point, params, lib)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise ExprEvalError("division by zero")
        return a / b
    if isinstance(e, Power):
        return eval_real(e.base, point, params, lib) ** e.exponent
    raise TypeError(f"not an expression node: {e!r}")
