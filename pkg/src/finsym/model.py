"""Core data model for equations u_t = (D(u) u_x)_x + h(x) u.

Coefficient specs are tagged families (plus free-form expressions), so the
classifier can branch on structure instead of re-deriving it.  All values
are immutable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .expressions import (
    Expression, Num, add, call, div, equivalent, evaluate, mul, neg, num,
    parse, pow_, sub, sym, to_string, ZERO, ONE,
)

__all__ = [
    "PowerU", "ShiftedPowerU", "ExpU", "ReciprocalShift", "FreeD",
    "PowerX", "ExpX", "InverseSquareX", "ConstantH", "H1", "FreeH",
    "DSpec", "HSpec", "FinEquation", "VectorField", "Solution",
    "validate", "is_four_thirds", "h1_expression",
    "spec_to_json", "spec_from_json", "equation_to_json", "equation_from_json",
    "load_equation_file", "equations_equal",
    "ModelError", "SpecKindError", "LinearCaseError", "SchemaError",
    "FOUR_THIRDS_TOL",
]

#: n = -4/3 is a structural branch point; floats are matched to it with
#: this absolute tolerance.
FOUR_THIRDS_TOL = 1e-12

_T, _X, _U = sym("t"), sym("x"), sym("u")


class ModelError(ValueError):
    pass


class SpecKindError(ModelError):
    pass


class LinearCaseError(ModelError):
    """The diffusion coefficient does not depend on u (linear case)."""


class SchemaError(ModelError):
    pass


def is_four_thirds(n: float) -> bool:
    return abs(n + 4.0 / 3.0) <= FOUR_THIRDS_TOL


# ---------------------------------------------------------------------------
# diffusion coefficient specs (functions of u)


@dataclass(frozen=True)
class PowerU:
    """D = u^n, n != 0."""
    n: float

    family = "power_u"

    def expression(self) -> Expression:
        return pow_(_U, num(self.n))


@dataclass(frozen=True)
class ShiftedPowerU:
    """D = (u + alpha)^n with alpha in {0, 1}, n != 0."""
    n: float
    alpha: float

    family = "shifted_power_u"

    def expression(self) -> Expression:
        return pow_(add(_U, num(self.alpha)), num(self.n))


@dataclass(frozen=True)
class ExpU:
    """D = e^u."""

    family = "exp_u"

    def expression(self) -> Expression:
        return call("exp", _U)


@dataclass(frozen=True)
class ReciprocalShift:
    """D = (u + 1)^(-1)."""

    family = "reciprocal_shift"

    def expression(self) -> Expression:
        return pow_(add(_U, ONE), num(-1))


@dataclass(frozen=True)
class FreeD:
    """Free-form D given as an expression in u."""
    expr: Expression

    family = "free"

    def expression(self) -> Expression:
        return self.expr


# ---------------------------------------------------------------------------
# source profile specs (functions of x)


@dataclass(frozen=True)
class PowerX:
    """h = eps * x^q with eps = +-1."""
    q: float
    eps: int

    family = "power_x"

    def expression(self) -> Expression:
        body = pow_(_X, num(self.q))
        return body if self.eps > 0 else neg(body)


@dataclass(frozen=True)
class ExpX:
    """h = eps * e^x."""
    eps: int

    family = "exp_x"

    def expression(self) -> Expression:
        body = call("exp", _X)
        return body if self.eps > 0 else neg(body)


@dataclass(frozen=True)
class InverseSquareX:
    """h = x^(-2)."""

    family = "inverse_square_x"

    def expression(self) -> Expression:
        return pow_(_X, num(-2))


@dataclass(frozen=True)
class ConstantH:
    """h = c, any constant including 0."""
    c: float

    family = "constant"

    def expression(self) -> Expression:
        return num(self.c)


def h1_expression(p: int, q: float, eps: int, var: Expression | None = None
                  ) -> Expression:
    """Closed form of the profile solving (x^2 + p) h' = q h, |h(.)| -> eps-signed.

    p = -1: eps*|(x-1)/(x+1)|^(q/2);  p = 0: eps*exp(-q/x);
    p = 1:  eps*exp(q*arctan(x)).
    """
    x = var if var is not None else _X
    if p == -1:
        body = pow_(call("abs", div(sub(x, ONE), add(x, ONE))), num(q / 2.0))
    elif p == 0:
        body = call("exp", div(num(-q), x))
    elif p == 1:
        body = call("exp", mul(num(q), call("arctan", x)))
    else:
        raise ModelError(f"p must be in {{-1, 0, 1}}, got {p}")
    return body if eps > 0 else neg(body)


@dataclass(frozen=True)
class H1:
    """h = h1(x; p, q, eps), the profile with (x^2+p) h' = q h."""
    p: int
    q: float
    eps: int

    family = "h1"

    def expression(self) -> Expression:
        return h1_expression(self.p, self.q, self.eps)


@dataclass(frozen=True)
class FreeH:
    """Free-form h given as an expression in x."""
    expr: Expression

    family = "free"

    def expression(self) -> Expression:
        return self.expr


DSpec = Union[PowerU, ShiftedPowerU, ExpU, ReciprocalShift, FreeD]
HSpec = Union[PowerX, ExpX, InverseSquareX, ConstantH, H1, FreeH]

_D_KINDS = (PowerU, ShiftedPowerU, ExpU, ReciprocalShift, FreeD)
_H_KINDS = (PowerX, ExpX, InverseSquareX, ConstantH, H1, FreeH)


# ---------------------------------------------------------------------------
# equations, fields, solutions


@dataclass(frozen=True)
class FinEquation:
    """One member of the class u_t = (D(u) u_x)_x + h(x) u."""
    D: DSpec
    h: HSpec

    def d_expr(self) -> Expression:
        return self.D.expression()

    def h_expr(self) -> Expression:
        return self.h.expression()

    def __str__(self):
        return f"u_t = ({to_string(self.d_expr())} * u_x)_x + ({to_string(self.h_expr())}) * u"


@dataclass(frozen=True)
class VectorField:
    """Infinitesimal generator tau*d_t + xi*d_x + eta*d_u."""
    tau: Expression
    xi: Expression
    eta: Expression

    @classmethod
    def from_strings(cls, tau: str, xi: str, eta: str) -> "VectorField":
        return cls(parse(tau), parse(xi), parse(eta))

    @classmethod
    def parse_triple(cls, triple: str) -> "VectorField":
        parts = triple.split(";")
        if len(parts) != 3:
            raise ModelError(
                "vector field must be three ';'-separated expressions")
        return cls.from_strings(*[p.strip() for p in parts])

    def to_string(self) -> str:
        parts = []
        for coeff, basis in ((self.tau, "d_t"), (self.xi, "d_x"),
                             (self.eta, "d_u")):
            if coeff == ZERO:
                continue
            if coeff == ONE:
                term = basis
            elif coeff == Num(-1.0):
                term = "-" + basis
            else:
                s = to_string(coeff)
                # parenthesize anything that is not a single factor
                if any(op in s[1:] for op in "+-"):
                    s = "(" + s + ")"
                term = f"{s}*{basis}"
            if parts and not term.startswith("-"):
                parts.append("+" + term)
            else:
                parts.append(term)
        return "".join(parts) if parts else "0"

    def __str__(self):
        return self.to_string()


D_T = VectorField(ONE, ZERO, ZERO)
D_X = VectorField(ZERO, ONE, ZERO)


@dataclass(frozen=True)
class Solution:
    """A (possibly parametric) solution u(t, x) with a domain note."""
    expr: Expression
    parameters: tuple[str, ...] = ()
    domain: str = ""

    def bind(self, **values) -> "Solution":
        unknown = set(values) - set(self.parameters)
        if unknown:
            raise ModelError(f"unknown solution parameters: {sorted(unknown)}")
        remaining = tuple(p for p in self.parameters if p not in values)
        return Solution(self.expr.subs(values), remaining, self.domain)


# ---------------------------------------------------------------------------
# validation


def _free_symbol_check(expr: Expression, allowed: set, what: str):
    extra = set(expr.free_symbols()) - allowed
    if extra:
        raise SpecKindError(
            f"{what} may only involve {sorted(allowed)}, found {sorted(extra)}")


def validate(eq: FinEquation, seed: int = 0) -> FinEquation:
    """Check kinds, parameter constraints and nonlinearity; return eq.

    Free D specs are tested for constancy by sampling dD/du at 20 seeded
    points; a constant D means the excluded linear case.  Idempotent.
    """
    if not isinstance(eq.D, _D_KINDS):
        raise SpecKindError(f"not a diffusion spec: {eq.D!r}")
    if not isinstance(eq.h, _H_KINDS):
        raise SpecKindError(f"not a source spec: {eq.h!r}")

    if isinstance(eq.D, (PowerU, ShiftedPowerU)) and eq.D.n == 0:
        raise LinearCaseError("power diffusion requires n != 0")
    if isinstance(eq.D, ShiftedPowerU) and eq.D.alpha not in (0.0, 1.0, 0, 1):
        raise SpecKindError("shift alpha must be 0 or 1")
    if isinstance(eq.h, H1):
        if eq.h.q == 0:
            raise SpecKindError("h1 profile requires q != 0")
        if eq.h.p not in (-1, 0, 1):
            raise SpecKindError("h1 profile requires p in {-1, 0, 1}")
        if eq.h.eps not in (-1, 1):
            raise SpecKindError("h1 profile requires eps = +-1")
    if isinstance(eq.h, (PowerX, ExpX)) and eq.h.eps not in (-1, 1):
        raise SpecKindError("eps must be +-1")

    if isinstance(eq.D, FreeD):
        _free_symbol_check(eq.D.expr, {"u"}, "free D")
        dd = eq.D.expr.diff("u")
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.5, 3.0, size=20)
        dv = np.broadcast_to(np.asarray(evaluate(dd, {"u": u})), (20,))
        v = np.broadcast_to(np.asarray(evaluate(eq.D.expr, {"u": u})), (20,))
        finite = np.isfinite(dv) & np.isfinite(v)
        if not finite.any():
            raise SpecKindError("free D not evaluable on the sampling range")
        scale = 1.0 + float(np.max(np.abs(v[finite])))
        if float(np.max(np.abs(dv[finite]))) <= 1e-12 * scale:
            raise LinearCaseError(
                "linear case excluded: D does not depend on u")
    if isinstance(eq.h, FreeH):
        _free_symbol_check(eq.h.expr, {"x"}, "free h")
    return eq


# ---------------------------------------------------------------------------
# JSON encoding


def _num_out(v: float):
    f = float(v)
    return int(f) if f == int(f) and abs(f) < 1e15 else f


def spec_to_json(spec) -> dict:
    if isinstance(spec, PowerU):
        return {"family": "power_u", "n": _num_out(spec.n)}
    if isinstance(spec, ShiftedPowerU):
        return {"family": "shifted_power_u", "n": _num_out(spec.n),
                "alpha": _num_out(spec.alpha)}
    if isinstance(spec, ExpU):
        return {"family": "exp_u"}
    if isinstance(spec, ReciprocalShift):
        return {"family": "reciprocal_shift"}
    if isinstance(spec, PowerX):
        return {"family": "power_x", "q": _num_out(spec.q),
                "eps": int(spec.eps)}
    if isinstance(spec, ExpX):
        return {"family": "exp_x", "eps": int(spec.eps)}
    if isinstance(spec, InverseSquareX):
        return {"family": "inverse_square_x"}
    if isinstance(spec, ConstantH):
        return {"family": "constant", "c": _num_out(spec.c)}
    if isinstance(spec, H1):
        return {"family": "h1", "p": int(spec.p), "q": _num_out(spec.q),
                "eps": int(spec.eps)}
    if isinstance(spec, (FreeD, FreeH)):
        return {"expr": to_string(spec.expr)}
    raise SchemaError(f"not a coefficient spec: {spec!r}")


def _require_keys(obj: dict, required: set, what: str):
    keys = set(obj)
    if keys != required:
        raise SchemaError(f"{what}: expected keys {sorted(required)}, "
                          f"got {sorted(keys)}")


def spec_from_json(obj: dict, kind: str):
    """Decode a D ('u') or h ('x') spec; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise SchemaError("coefficient spec must be an object")
    if "expr" in obj:
        _require_keys(obj, {"expr"}, "free spec")
        expr = parse(obj["expr"])
        return FreeD(expr) if kind == "u" else FreeH(expr)
    family = obj.get("family")
    if kind == "u":
        if family == "power_u":
            _require_keys(obj, {"family", "n"}, "power_u")
            return PowerU(float(obj["n"]))
        if family == "shifted_power_u":
            _require_keys(obj, {"family", "n", "alpha"}, "shifted_power_u")
            return ShiftedPowerU(float(obj["n"]), float(obj["alpha"]))
        if family == "exp_u":
            _require_keys(obj, {"family"}, "exp_u")
            return ExpU()
        if family == "reciprocal_shift":
            _require_keys(obj, {"family"}, "reciprocal_shift")
            return ReciprocalShift()
    else:
        if family == "power_x":
            _require_keys(obj, {"family", "q", "eps"}, "power_x")
            return PowerX(float(obj["q"]), int(obj["eps"]))
        if family == "exp_x":
            _require_keys(obj, {"family", "eps"}, "exp_x")
            return ExpX(int(obj["eps"]))
        if family == "inverse_square_x":
            _require_keys(obj, {"family"}, "inverse_square_x")
            return InverseSquareX()
        if family == "constant":
            _require_keys(obj, {"family", "c"}, "constant")
            return ConstantH(float(obj["c"]))
        if family == "h1":
            _require_keys(obj, {"family", "p", "q", "eps"}, "h1")
            return H1(int(obj["p"]), float(obj["q"]), int(obj["eps"]))
    raise SchemaError(f"unknown {kind}-spec family: {family!r}")


def equation_to_json(eq: FinEquation) -> dict:
    return {"D": spec_to_json(eq.D), "h": spec_to_json(eq.h)}


def equation_from_json(obj: dict) -> FinEquation:
    if not isinstance(obj, dict):
        raise SchemaError("equation document must be an object")
    extra = set(obj) - {"D", "h", "params"}
    if extra:
        raise SchemaError(f"unknown keys in equation document: {sorted(extra)}")
    if "D" not in obj or "h" not in obj:
        raise SchemaError("equation document requires 'D' and 'h'")
    eq = FinEquation(spec_from_json(obj["D"], "u"),
                     spec_from_json(obj["h"], "x"))
    return validate(eq)


def load_equation_file(path: str) -> tuple[FinEquation, dict]:
    """Read an equation JSON file; returns (equation, extra params)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc}") from exc
    params = obj.get("params", {}) if isinstance(obj, dict) else {}
    if params is not None and not isinstance(params, dict):
        raise SchemaError("'params' must be an object")
    return equation_from_json(obj), dict(params or {})


# ---------------------------------------------------------------------------
# equality up to representation


def _normalized_key(spec):
    if isinstance(spec, ShiftedPowerU) and spec.alpha == 0:
        return ("power_u", (spec.n,))
    if isinstance(spec, ReciprocalShift):
        return ("shifted_power_u", (-1.0, 1.0))
    if isinstance(spec, ShiftedPowerU):
        return ("shifted_power_u", (spec.n, spec.alpha))
    if isinstance(spec, PowerU):
        return ("power_u", (spec.n,))
    if isinstance(spec, ExpU):
        return ("exp_u", ())
    if isinstance(spec, InverseSquareX):
        return ("power_x", (-2.0, 1.0))
    if isinstance(spec, PowerX):
        return ("power_x", (spec.q, float(spec.eps)))
    if isinstance(spec, ExpX):
        return ("exp_x", (float(spec.eps),))
    if isinstance(spec, ConstantH):
        return ("constant", (spec.c,))
    if isinstance(spec, H1):
        return ("h1", (float(spec.p), spec.q, float(spec.eps)))
    return None  # free-form


def _specs_equal(a, b, tol: float, seed: int, ranges=None) -> bool:
    ka, kb = _normalized_key(a), _normalized_key(b)
    if ka is not None and kb is not None:
        if ka[0] != kb[0] or len(ka[1]) != len(kb[1]):
            return False
        return all(abs(x - y) <= tol * (1 + abs(x) + abs(y))
                   for x, y in zip(ka[1], kb[1]))
    return equivalent(a.expression(), b.expression(), seed=seed, tol=tol,
                      ranges=ranges)


def equations_equal(a: FinEquation, b: FinEquation, tol: float = 1e-9,
                    seed: int = 7, ranges=None) -> bool:
    """Equality of equations: matching family tags and parameters, with
    free-form coefficients compared by randomized sampling."""
    return (_specs_equal(a.D, b.D, tol, seed, ranges)
            and _specs_equal(a.h, b.h, tol, seed + 1, ranges))
