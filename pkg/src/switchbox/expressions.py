"""Small arithmetic expression language for model coefficients.

Grammar (EBNF):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' atom)?
    atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')' | '-' atom

Identifiers are ``t`` and ``x1`` ... ``xk``.  Functions: exp, log, abs,
sqrt (unary) and max, min (two or more arguments).

Evaluation is vectorised: ``t`` and the state components may be numpy
arrays of a common broadcastable shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExprError",
    "ParseError",
    "DomainError",
    "CoeffExpr",
    "parse_expr",
    "eval_expr",
    "to_source",
    "constant",
]


class ExprError(Exception):
    pass


class ParseError(ExprError):
    """Syntax or name error, carrying 1-based line/column."""

    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class DomainError(ExprError):
    """Evaluation hit an undefined value (log/sqrt of negative, x/0)."""

    def __init__(self, message, subexpr):
        super().__init__(f"{message} in subexpression '{to_source(subexpr)}'")
        self.subexpr = subexpr


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 't' or 'x<i>'


@dataclass(frozen=True)
class Neg:
    operand: "CoeffExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "CoeffExpr"
    right: "CoeffExpr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple = field(default_factory=tuple)


CoeffExpr = Const | Var | Neg | BinOp | Call

_UNARY_FUNCS = {"exp", "log", "abs", "sqrt"}
_NARY_FUNCS = {"max", "min"}
FUNCTIONS = _UNARY_FUNCS | _NARY_FUNCS

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUM_RE = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_VAR_RE = re.compile(r"^(t|x[1-9]\d*)$")


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(source):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        m = _NUM_RE.match(source, i)
        if m:
            tokens.append(_Token("num", m.group(0), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            tokens.append(_Token("ident", m.group(0), line, col))
            col += m.end() - i
            i = m.end()
            continue
        if c in "+-*/^(),":
            tokens.append(_Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character '{c}'", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            what = "end of input" if tok.kind == "eof" else f"'{tok.text}'"
            raise ParseError(f"expected '{kind}', found {what}", tok.line, tok.col)
        return self.advance()

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected trailing input '{tok.text}'", tok.line, tok.col)
        return e

    def expr(self):
        left = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            left = BinOp(op, left, self.factor())
        return left

    def factor(self):
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            return BinOp("^", base, self.atom())
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            return Neg(self.atom())
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek().kind == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if tok.text in _UNARY_FUNCS and len(args) != 1:
                    raise ParseError(
                        f"'{tok.text}' takes exactly 1 argument, got {len(args)}",
                        tok.line, tok.col)
                if tok.text in _NARY_FUNCS and len(args) < 2:
                    raise ParseError(
                        f"'{tok.text}' takes at least 2 arguments, got {len(args)}",
                        tok.line, tok.col)
                return Call(tok.text, tuple(args))
            if not _VAR_RE.match(tok.text):
                raise ParseError(f"unknown identifier '{tok.text}'", tok.line, tok.col)
            return Var(tok.text)
        what = "end of input" if tok.kind == "eof" else f"'{tok.text}'"
        raise ParseError(f"expected expression, found {what}", tok.line, tok.col)


def parse_expr(source: str) -> CoeffExpr:
    """Parse DSL source into an expression tree."""
    return _Parser(_tokenize(source)).parse()


def constant(value: float) -> CoeffExpr:
    return Const(float(value))


# ---------------------------------------------------------------------------
# Pretty printer (round-trips with parse_expr)
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(e: CoeffExpr) -> str:
    """Render an expression tree back to DSL source."""
    return _render(e, 0)


def _render(e, parent_prec):
    if isinstance(e, Const):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = _render(e.operand, 4)
        return f"(-{inner})" if parent_prec > 0 else f"-{inner}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_render(a, 0) for a in e.args)})"
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        # left-assoc for + - * /; '^' takes atoms on both sides
        left = _render(e.left, prec if e.op != "^" else 4)
        right = _render(e.right, prec + 1 if e.op != "^" else 4)
        s = f"{e.op}".join([left, right]) if e.op == "^" else f"{left} {e.op} {right}"
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_expr(e: CoeffExpr, t, x):
    """Evaluate ``e`` at time ``t`` and state ``x``.

    ``x`` is indexable by spatial component (``x[0]`` is the DSL's ``x1``);
    entries and ``t`` may be scalars or broadcastable numpy arrays.  Domain
    errors (log/sqrt of a negative, division by zero) raise
    :class:`DomainError` naming the offending subexpression.
    """
    return _eval(e, t, x)


def _eval(e, t, x):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.name == "t":
            return np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        idx = int(e.name[1:]) - 1
        if idx >= len(x):
            raise DomainError(f"state has dimension {len(x)}", e)
        xi = x[idx]
        return np.asarray(xi, dtype=float) if np.ndim(xi) else float(xi)
    if isinstance(e, Neg):
        return -_eval(e.operand, t, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, t, x)
        b = _eval(e.right, t, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if np.any(b == 0):
                raise DomainError("division by zero", e)
            return a / b
        if e.op == "^":
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.power(a, b)
            if np.any(~np.isfinite(out)) or np.any(np.iscomplexobj(out)):
                raise DomainError("undefined power", e)
            return out
    if isinstance(e, Call):
        args = [_eval(a, t, x) for a in e.args]
        if e.func == "exp":
            return np.exp(args[0])
        if e.func == "abs":
            return np.abs(args[0])
        if e.func == "log":
            if np.any(np.asarray(args[0]) <= 0):
                raise DomainError("log of a non-positive value", e)
            return np.log(args[0])
        if e.func == "sqrt":
            if np.any(np.asarray(args[0]) < 0):
                raise DomainError("sqrt of a negative value", e)
            return np.sqrt(args[0])
        if e.func == "max":
            out = args[0]
            for a in args[1:]:
                out = np.maximum(out, a)
            return out
        if e.func == "min":
            out = args[0]
            for a in args[1:]:
                out = np.minimum(out, a)
            return out
    raise TypeError(f"not an expression node: {e!r}")


def references_time(e: CoeffExpr) -> bool:
    """True when the expression mentions the time variable."""
    if isinstance(e, Var):
        return e.name == "t"
    if isinstance(e, Neg):
        return references_time(e.operand)
    if isinstance(e, BinOp):
        return references_time(e.left) or references_time(e.right)
    if isinstance(e, Call):
        return any(references_time(a) for a in e.args)
    return False


def max_state_index(e: CoeffExpr) -> int:
    """Largest i such that xi appears (0 when no state variable does)."""
    if isinstance(e, Var):
        return 0 if e.name == "t" else int(e.name[1:])
    if isinstance(e, Neg):
        return max_state_index(e.operand)
    if isinstance(e, BinOp):
        return max(max_state_index(e.left), max_state_index(e.right))
    if isinstance(e, Call):
        return max((max_state_index(a) for a in e.args), default=0)
    return 0
