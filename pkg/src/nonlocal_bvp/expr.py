"""Scalar expression language used in problem configs.

Grammar (lowest to highest binding)::

    expr   := expr ('+' | '-') expr          left-assoc
            | expr ('*' | '/') expr          left-assoc
            | '-' expr                        unary minus
            | expr '^' expr                  right-assoc
            | NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

``pi`` and ``e`` are constants; any other bare name is a variable.

Expressions are immutable trees. :func:`evaluate` walks the tree with strict
IEEE semantics (domain violations raise), :func:`compile_vector` turns a list
of expressions into a numpy-vectorised callable for the hot loops.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Num", "Const", "Var", "Neg", "BinOp", "Call", "Expression",
    "ExpressionError", "ParseError", "EvaluationError",
    "parse", "to_string", "evaluate", "variables", "substitute",
    "compile_vector", "FUNCTIONS", "CONSTANTS",
]


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int, text: str = ""):
        # offsets are reported in bytes of the UTF-8 source
        offset = len(text[:offset].encode("utf-8"))
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.text = text


class EvaluationError(ExpressionError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expression = Union[Num, Const, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}

# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "ln": 1, "abs": 1, "sqrt": 1, "sgn": 1,
    "min": 2, "max": 2,
}

# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

_BINARY_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_RBP = 30


@dataclass
class _Token:
    kind: str  # num, name, op, end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", pos + stripped, text)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.offset, self.text)

    def expect(self, text: str) -> _Token:
        if self.tok.kind != "op" or self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def lbp(self) -> int:
        t = self.tok
        if t.kind == "op":
            return _BINARY_LBP.get(t.text, 0)
        return 0

    def expression(self, rbp: int = 0) -> Expression:
        left = self.nud(self.advance())
        while rbp < self.lbp():
            op = self.advance()
            if op.text == "^":
                # right-assoc
                right = self.expression(_BINARY_LBP["^"] - 1)
            else:
                right = self.expression(_BINARY_LBP[op.text])
            left = BinOp(op.text, left, right)
        return left

    def nud(self, t: _Token) -> Expression:
        if t.kind == "num":
            value = float(t.text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {t.text!r} overflows", t.offset, self.text)
            return Num(value)
        if t.kind == "name":
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in CONSTANTS:
                return Const(t.text)
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} used without arguments", t.offset, self.text)
            return Var(t.text)
        if t.kind == "op" and t.text == "-":
            return Neg(self.expression(_UNARY_RBP))
        if t.kind == "op" and t.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if t.kind == "end":
            raise ParseError("unexpected end of input", t.offset, self.text)
        raise ParseError(f"unexpected token {t.text!r}", t.offset, self.text)

    def call(self, name: _Token) -> Expression:
        if name.text not in FUNCTIONS:
            raise ParseError(f"unknown function {name.text!r}", name.offset, self.text)
        self.expect("(")
        args = [self.expression(0)]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expression(0))
        self.expect(")")
        arity = FUNCTIONS[name.text]
        if len(args) != arity:
            raise ParseError(
                f"function {name.text!r} takes {arity} argument(s), got {len(args)}",
                name.offset, self.text,
            )
        return Call(name.text, tuple(args))


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises:
        ParseError: on a syntax error or unknown function; ``.offset`` is the
            byte offset of the offending token.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    p = _Parser(text)
    tree = p.expression(0)
    if p.tok.kind != "end":
        raise p.error(f"unexpected token {p.tok.text!r}")
    return tree


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e: Expression) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _num_str(v: float) -> str:
    if v < 0 or not math.isfinite(v):
        raise ExpressionError(f"literal {v!r} has no source form")
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def to_string(e: Expression) -> str:
    """Print ``e`` with minimal parentheses; ``parse(to_string(e)) == e``."""
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Neg):
        inner = to_string(e.operand)
        if _prec(e.operand) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = to_string(e.left), to_string(e.right)
        lp, rp = _prec(e.left), _prec(e.right)
        if e.op == "^":
            if lp <= p:
                left = f"({left})"
            if rp < _NEG_PREC:
                right = f"({right})"
        else:
            if lp < p:
                left = f"({left})"
            if rp <= p:
                right = f"({right})"
        return f"{left}{e.op}{right}"
    if isinstance(e, Call):
        return f"{e.func}({','.join(to_string(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# strict scalar evaluation

def _sgn(v: float) -> float:
    return (v > 0) - (v < 0)


def _ln(v: float) -> float:
    if v <= 0:
        raise EvaluationError(f"ln of non-positive value {v!r}")
    return math.log(v)


def _sqrt(v: float) -> float:
    if v < 0:
        raise EvaluationError(f"sqrt of negative value {v!r}")
    return math.sqrt(v)


_SCALAR_FUNCS: dict[str, Callable[..., float]] = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp, "ln": _ln,
    "abs": abs, "sqrt": _sqrt, "sgn": _sgn, "min": min, "max": max,
}


def _pow(a: float, b: float) -> float:
    if a == 0 and b < 0:
        raise EvaluationError("zero raised to a negative power")
    if a < 0 and b != int(b):
        raise EvaluationError(f"negative base {a!r} with non-integer exponent {b!r}")
    return math.pow(a, b)


def _eval(e: Expression, env: Mapping[str, float]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvaluationError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise EvaluationError("division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(e, Call):
        return float(_SCALAR_FUNCS[e.func](*(_eval(a, env) for a in e.args)))
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision.

    Raises:
        EvaluationError: unbound variable, domain violation (``ln`` of a
            non-positive number, ``sqrt`` of a negative one, division by
            zero), or overflow.
    """
    try:
        value = _eval(e, bindings)
    except OverflowError as exc:
        raise EvaluationError(f"overflow: {exc}") from None
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite result {value!r}")
    return value


# ---------------------------------------------------------------------------
# tree utilities

def variables(e: Expression) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= variables(a)
        return out
    return set()


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (simultaneously)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.func, tuple(substitute(a, mapping) for a in e.args))
    return e


# ---------------------------------------------------------------------------
# numpy compilation

_NP_FUNCS = {
    "sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "ln": "np.log",
    "abs": "np.abs", "sqrt": "np.sqrt", "sgn": "np.sign",
    "min": "np.minimum", "max": "np.maximum",
}


def _np_source(e: Expression, names: Mapping[str, str]) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Const):
        return repr(CONSTANTS[e.name])
    if isinstance(e, Var):
        try:
            return names[e.name]
        except KeyError:
            raise EvaluationError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return f"(-{_np_source(e.operand, names)})"
    if isinstance(e, BinOp):
        a, b = _np_source(e.left, names), _np_source(e.right, names)
        if e.op == "^":
            return f"np.power({a}, {b})"
        return f"({a} {e.op} {b})"
    if isinstance(e, Call):
        args = ", ".join(_np_source(a, names) for a in e.args)
        return f"{_NP_FUNCS[e.func]}({args})"
    raise TypeError(f"not an expression: {e!r}")


def compile_vector(exprs: Sequence[Expression], arg_names: Iterable[str], scalar_args: Iterable[str] = ()) -> Callable:
    """Compile ``exprs`` into ``fn(*args) -> ndarray`` of shape ``(len(exprs), *batch)``.

    Array arguments share one batch shape; ``scalar_args`` (e.g. ``t``) may be
    plain floats. Domain violations produce nan/inf rather than raising, so
    callers check finiteness and fall back to :func:`evaluate` for a precise
    diagnosis.
    """
    arg_names = list(arg_names)
    scalar_args = set(scalar_args)
    names = {name: f"a{i}" for i, name in enumerate(arg_names)}
    rows = [_np_source(e, names) for e in exprs]
    array_args = [names[n] for n in arg_names if n not in scalar_args]
    shape_src = f"np.shape({array_args[0]})" if array_args else "()"
    params = ", ".join(names[n] for n in arg_names)
    lines = [f"def _compiled({params}):", f"    out = np.empty(({len(rows)},) + {shape_src})"]
    lines += [f"    out[{i}] = {row}" for i, row in enumerate(rows)]
    lines.append("    return out")
    src = "\n".join(lines) + "\n"
    namespace: dict = {"np": np}
    exec(compile(src, "<nonlocal_bvp.expr>", "exec"), namespace)
    fn = namespace["_compiled"]
    fn.__doc__ = src
    return fn
