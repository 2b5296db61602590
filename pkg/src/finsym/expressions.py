"""Symbolic scalar expressions: parsing, calculus, evaluation, zero-testing.

Everything downstream (equation specs, symmetry residuals, reductions,
conservation laws) is built on these trees.  The engine is deliberately
small: constant folding and identity elimination only, no canonical forms.
Equality of expressions is decided by seeded randomized sampling, not by
structural normalization.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Expression", "Num", "Sym", "Neg", "Call", "Add", "Sub", "Mul", "Div", "Pow",
    "num", "sym", "add", "sub", "mul", "div", "pow_", "neg", "call",
    "ZERO", "ONE", "FUNCTIONS", "DEFAULT_SAMPLING_RANGES",
    "parse", "to_string", "differentiate", "evaluate", "substitute", "equivalent",
    "sample_bindings",
    "ExpressionError", "ParseError", "UnknownFunctionError",
    "UnboundSymbolError", "NoAdmissibleSampleError",
]

FUNCTIONS = ("exp", "ln", "abs", "arctan", "sign")

#: ranges used when sampling unpinned symbols; chosen to dodge the
#: singular sets x = 0, u = 0 of the coefficient families.
DEFAULT_SAMPLING_RANGES = {"t": (0.1, 2.0), "x": (0.5, 3.0), "u": (0.5, 3.0)}
_FALLBACK_RANGE = (0.5, 3.0)


class ExpressionError(Exception):
    """Base class for expression-engine failures."""


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class UnboundSymbolError(ExpressionError):
    pass


class NoAdmissibleSampleError(ExpressionError):
    """Raised when every sampled point evaluated to a non-finite value."""


# ---------------------------------------------------------------------------
# nodes


class Expression:
    """Immutable expression tree node.  All operations are pure."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return pow_(self, other)

    def __rpow__(self, other):
        return pow_(other, self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_string(self)

    def children(self) -> tuple:
        return ()

    def free_symbols(self) -> frozenset:
        out = set()
        stack = [self]
        while stack:
            e = stack.pop()
            if isinstance(e, Sym):
                out.add(e.name)
            else:
                stack.extend(e.children())
        return frozenset(out)

    def diff(self, var: str, deps=None) -> "Expression":
        return differentiate(self, var, deps)

    def subs(self, mapping) -> "Expression":
        return substitute(self, mapping)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True)
class Sym(Expression):
    name: str

    def __repr__(self):
        return f"Sym({self.name!r})"


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class _Binary(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Div(_Binary):
    pass


class Pow(_Binary):
    pass


# ---------------------------------------------------------------------------
# smart constructors: constant folding + identity elimination


def num(v) -> Num:
    return Num(float(v))


def sym(name: str) -> Sym:
    return Sym(name)


ZERO = Num(0.0)
ONE = Num(1.0)


def _coerce(e) -> Expression:
    if isinstance(e, Expression):
        return e
    return Num(float(e))


def _is_const(e: Expression, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _fold(value: float) -> Num | None:
    return Num(float(value)) if np.isfinite(value) else None


def add(a, b) -> Expression:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _fold(a.value + b.value)
        if folded is not None:
            return folded
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b) -> Expression:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _fold(a.value - b.value)
        if folded is not None:
            return folded
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a, b) -> Expression:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _fold(a.value * b.value)
        if folded is not None:
            return folded
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a, b) -> Expression:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        folded = _fold(a.value / b.value)
        if folded is not None:
            return folded
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    return Div(a, b)


def pow_(a, b) -> Expression:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Num) and isinstance(b, Num):
        with np.errstate(all="ignore"):
            v = np.float64(a.value) ** np.float64(b.value)
        folded = _fold(float(v))
        if folded is not None:
            return folded
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return Pow(a, b)


def neg(a) -> Expression:
    a = _coerce(a)
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(fn: str, a) -> Expression:
    if fn not in FUNCTIONS:
        raise ExpressionError(f"unknown function {fn!r}")
    a = _coerce(a)
    if isinstance(a, Num):
        with np.errstate(all="ignore"):
            v = _apply_fn(fn, np.float64(a.value))
        folded = _fold(float(v))
        if folded is not None:
            return folded
    return Call(fn, a)


# ---------------------------------------------------------------------------
# printing


def _prec(e: Expression) -> int:
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and e.value < 0:
        return 3  # prints with a leading minus sign
    if isinstance(e, Pow):
        return 4
    return 9


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(e: Expression) -> str:
    """Render with minimal parentheses; re-parsing yields the same tree."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, Add):
        return _wrap(e.left, 1) + "+" + _wrap(e.right, 2)
    if isinstance(e, Sub):
        return _wrap(e.left, 1) + "-" + _wrap(e.right, 2)
    if isinstance(e, Mul):
        return _wrap(e.left, 2) + "*" + _wrap(e.right, 3)
    if isinstance(e, Div):
        return _wrap(e.left, 2) + "/" + _wrap(e.right, 3)
    if isinstance(e, Pow):
        # right-associative; unary minus allowed bare in the exponent
        return _wrap(e.left, 5) + "^" + _wrap(e.right, 3)
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e: Expression, minimum: int) -> str:
    s = to_string(e)
    if _prec(e) < minimum:
        return "(" + s + ")"
    return s


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[+\-*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}",
                             len(text) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over: ^  >  unary-  >  * /  >  + -  (^ right-assoc)."""

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op_char: str):
        kind, value, offset = self.take()
        if kind != "op" or value != op_char:
            raise ParseError(f"expected {op_char!r}", offset)

    def parse(self) -> Expression:
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {value!r}", offset)
        return e

    def expr(self) -> Expression:
        e = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                rhs = self.term()
                e = add(e, rhs) if value == "+" else sub(e, rhs)
            else:
                return e

    def term(self) -> Expression:
        e = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                rhs = self.unary()
                e = mul(e, rhs) if value == "*" else div(e, rhs)
            else:
                return e

    def unary(self) -> Expression:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.take()
            return pow_(base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, value, offset = self.take()
        if kind == "num":
            return num(float(value))
        if kind == "ident":
            nxt_kind, nxt_value, _ = self.peek()
            if nxt_kind == "op" and nxt_value == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {value!r}", offset)
                self.take()
                inner = self.expr()
                self.expect_op(")")
                return call(value, inner)
            if value in FUNCTIONS:
                raise ParseError(f"expected '(' after function {value!r}",
                                 offset)
            return sym(value)
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected token {value!r}", offset)


def parse(text: str) -> Expression:
    """Parse ``text`` under the standard infix grammar.

    Identifiers are symbols; ``eps`` and ``epsp`` are the conventional
    spellings of the sign parameters.  Raises :class:`ParseError` with the
    byte offset of the failure.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# differentiation


def _derivative_name(name: str, var: str) -> str:
    if "_" in name:
        base, suffix = name.rsplit("_", 1)
        return f"{base}_{''.join(sorted(suffix + var))}"
    return f"{name}_{var}"


def differentiate(e: Expression, var: str,
                  deps: Mapping[str, Sequence[str]] | None = None) -> Expression:
    """Derivative of ``e`` with respect to symbol ``var``.

    Symbols other than ``var`` are constants unless listed in ``deps``;
    a dependent symbol contributes a chain-rule term through a fresh
    derivative symbol (``u`` differentiated in ``x`` introduces ``u_x``).
    """
    deps = deps or {}

    def d(e: Expression) -> Expression:
        if isinstance(e, Num):
            return ZERO
        if isinstance(e, Sym):
            if e.name == var:
                return ONE
            if var in deps.get(e.name, ()):
                return sym(_derivative_name(e.name, var))
            return ZERO
        if isinstance(e, Neg):
            return neg(d(e.arg))
        if isinstance(e, Add):
            return add(d(e.left), d(e.right))
        if isinstance(e, Sub):
            return sub(d(e.left), d(e.right))
        if isinstance(e, Mul):
            return add(mul(d(e.left), e.right), mul(e.left, d(e.right)))
        if isinstance(e, Div):
            return div(sub(mul(d(e.left), e.right), mul(e.left, d(e.right))),
                       pow_(e.right, 2))
        if isinstance(e, Pow):
            base, expo = e.left, e.right
            dbase, dexpo = d(base), d(expo)
            if _is_const(dexpo, 0.0):
                return mul(mul(expo, pow_(base, sub(expo, ONE))), dbase)
            # general rule, needs ln of the base
            return mul(e, add(mul(dexpo, call("ln", base)),
                              div(mul(expo, dbase), base)))
        if isinstance(e, Call):
            inner = d(e.arg)
            if e.fn == "exp":
                return mul(e, inner)
            if e.fn == "ln":
                return div(inner, e.arg)
            if e.fn == "abs":
                return mul(call("sign", e.arg), inner)
            if e.fn == "arctan":
                return div(inner, add(ONE, pow_(e.arg, 2)))
            if e.fn == "sign":
                return ZERO  # derivative away from 0; 0 by convention
        raise TypeError(f"not an expression: {e!r}")

    return d(e)


# ---------------------------------------------------------------------------
# substitution


def substitute(e: Expression, mapping: Mapping[str, Union[Expression, float]]
               ) -> Expression:
    """Simultaneously replace symbols by expressions (or numbers)."""
    table = {k: _coerce(v) for k, v in mapping.items()}

    def walk(e: Expression) -> Expression:
        if isinstance(e, Num):
            return e
        if isinstance(e, Sym):
            return table.get(e.name, e)
        if isinstance(e, Neg):
            return neg(walk(e.arg))
        if isinstance(e, Call):
            return call(e.fn, walk(e.arg))
        if isinstance(e, Add):
            return add(walk(e.left), walk(e.right))
        if isinstance(e, Sub):
            return sub(walk(e.left), walk(e.right))
        if isinstance(e, Mul):
            return mul(walk(e.left), walk(e.right))
        if isinstance(e, Div):
            return div(walk(e.left), walk(e.right))
        if isinstance(e, Pow):
            return pow_(walk(e.left), walk(e.right))
        raise TypeError(f"not an expression: {e!r}")

    return walk(e)


# ---------------------------------------------------------------------------
# evaluation


def _apply_fn(fn: str, v):
    if fn == "exp":
        return np.exp(v)
    if fn == "ln":
        return np.log(v)
    if fn == "abs":
        return np.abs(v)
    if fn == "arctan":
        return np.arctan(v)
    if fn == "sign":
        return np.sign(v)
    raise ExpressionError(f"unknown function {fn!r}")


def evaluate(e: Expression, bindings: Mapping[str, object]):
    """Evaluate with IEEE double semantics: NaN and infinities propagate.

    Bindings may be scalars or numpy arrays (broadcast together); the
    result has the broadcast shape.  Every free symbol must be bound.
    """
    values = {}
    for k, v in bindings.items():
        if isinstance(v, np.ndarray):
            values[k] = np.asarray(v, dtype=np.float64)
        else:
            values[k] = np.float64(v)
    memo: dict[int, object] = {}

    def ev(e: Expression):
        key = id(e)
        if key in memo:
            return memo[key]
        if isinstance(e, Num):
            r = np.float64(e.value)
        elif isinstance(e, Sym):
            try:
                r = values[e.name]
            except KeyError:
                raise UnboundSymbolError(f"unbound symbol {e.name!r}") from None
        elif isinstance(e, Neg):
            r = -ev(e.arg)
        elif isinstance(e, Call):
            r = _apply_fn(e.fn, ev(e.arg))
        elif isinstance(e, Add):
            r = ev(e.left) + ev(e.right)
        elif isinstance(e, Sub):
            r = ev(e.left) - ev(e.right)
        elif isinstance(e, Mul):
            r = ev(e.left) * ev(e.right)
        elif isinstance(e, Div):
            r = ev(e.left) / ev(e.right)
        elif isinstance(e, Pow):
            r = ev(e.left) ** ev(e.right)
        else:
            raise TypeError(f"not an expression: {e!r}")
        memo[key] = r
        return r

    with np.errstate(all="ignore"):
        return ev(e)


# ---------------------------------------------------------------------------
# randomized equality


def _resolve_ranges(symbols, ranges=None):
    merged = dict(DEFAULT_SAMPLING_RANGES)
    if ranges:
        merged.update(ranges)
    return {s: merged.get(s, _FALLBACK_RANGE) for s in symbols}


def sample_bindings(symbols, rng, count: int, ranges=None):
    """Draw ``count`` points for each symbol as arrays (seeded, uniform)."""
    resolved = _resolve_ranges(symbols, ranges)
    return {s: rng.uniform(lo, hi, size=count)
            for s, (lo, hi) in sorted(resolved.items())}


def equivalent(a: Expression, b: Expression, seed: int = 0, trials: int = 50,
               tol: float = 1e-9, ranges=None) -> bool:
    """Randomized equality test: ``|a-b| <= tol*(1+|a|+|b|)`` at every
    sampled point where both sides are finite.

    Sampling is seeded and reproducible.  Points where either side is
    non-finite are resampled a bounded number of times; if no admissible
    point is ever found, :class:`NoAdmissibleSampleError` is raised.
    """
    symbols = sorted(a.free_symbols() | b.free_symbols())
    rng = np.random.default_rng(seed)
    if not symbols:
        va = float(evaluate(a, {}))
        vb = float(evaluate(b, {}))
        if not (np.isfinite(va) and np.isfinite(vb)):
            raise NoAdmissibleSampleError("constant expressions not finite")
        return abs(va - vb) <= tol * (1.0 + abs(va) + abs(vb))

    accepted = 0
    ok = True
    for _ in range(10):
        batch = max(4 * trials, 16)
        bindings = sample_bindings(symbols, rng, batch, ranges)
        va = np.broadcast_to(np.asarray(evaluate(a, bindings), dtype=np.float64),
                             (batch,))
        vb = np.broadcast_to(np.asarray(evaluate(b, bindings), dtype=np.float64),
                             (batch,))
        finite = np.isfinite(va) & np.isfinite(vb)
        if not finite.any():
            continue
        fa, fb = va[finite], vb[finite]
        take = min(trials - accepted, fa.size)
        fa, fb = fa[:take], fb[:take]
        ok = ok and bool(np.all(np.abs(fa - fb)
                                <= tol * (1.0 + np.abs(fa) + np.abs(fb))))
        accepted += take
        if accepted >= trials:
            return ok
    if accepted == 0:
        raise NoAdmissibleSampleError(
            "no admissible sample: all trials hit non-finite values")
    return ok
