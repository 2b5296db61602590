"""Equivalence transformations of the class u_t = (D(u) u_x)_x + h(x) u.

Four element families are constructible:

* ``Gsim``   affine scalings/translations acting on the whole class,
* ``G1``     Moebius maps valid on the subclass D = u^(-4/3),
* ``G2``     affine maps with a u-translation, valid when h = 0,
* ``G3``     exponential time reparameterization, valid for constant h and
             power D (the variable change depends on the equation's h).

On top of these, the named case-to-case maps identify table cases that the
plain group does not, and one map exits the class entirely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import fit_d_shape, fit_h_shape
from .expressions import (
    Expression, Num, ZERO, add, call, div, mul, num, pow_, sub,
    substitute, sym, to_string,
)
from .model import (
    ConstantH, ExpU, ExpX, FinEquation, FreeD, FreeH, H1, ModelError,
    PowerU, PowerX, ReciprocalShift, ShiftedPowerU, Solution,
    VectorField, is_four_thirds, validate,
)

__all__ = [
    "PointTransformation", "CoefficientRule", "OutsideClassReport",
    "make_group_element", "apply_to_equation", "additional_equivalence",
    "push_forward_field", "push_forward_solution",
    "ADDITIONAL_MAP_LABELS", "map_by_label",
    "EquivalenceError", "DeltaConstraintError", "ConditionError",
    "ComplexFieldOnlyError", "NoAdditionalMapError",
]

_T, _X, _U = sym("t"), sym("x"), sym("u")
_FOUR_THIRDS = -4.0 / 3.0


class EquivalenceError(ModelError):
    pass


class DeltaConstraintError(EquivalenceError):
    pass


class ConditionError(EquivalenceError):
    pass


class ComplexFieldOnlyError(EquivalenceError):
    pass


class NoAdditionalMapError(EquivalenceError):
    pass


@dataclass(frozen=True)
class CoefficientRule:
    """Rewrite of one arbitrary element: new(v) = factor * old(inner(v)),
    or a fixed override expression."""
    factor: Expression | None = None
    inner: Expression | None = None
    override: Expression | None = None

    def is_identity(self, var: str) -> bool:
        return (self.override is None and self.factor == Num(1.0)
                and self.inner == sym(var))

    def apply(self, old: Expression, var: str) -> Expression:
        if self.override is not None:
            return self.override
        return mul(self.factor, substitute(old, {var: self.inner}))


@dataclass(frozen=True)
class PointTransformation:
    """Invertible point map with its action on the coefficients.

    Forward maps are expressions in the old variables (t, x, u); the
    stored inverse maps use the same symbol names to mean the new
    variables.
    """
    label: str
    t_new: Expression
    x_new: Expression
    u_new: Expression
    t_old: Expression
    x_old: Expression
    u_old: Expression
    d_rule: CoefficientRule | None = None
    h_rule: CoefficientRule | None = None
    condition: str | None = None
    requires: tuple = ()
    outside_class: str | None = None
    family: str | None = None
    deltas: tuple = ()
    sign: int = 1
    domain_note: str = ""

    def inverse(self) -> "PointTransformation":
        if self.family == "Gsim":
            d1, d2, d3, d4, d5 = self.deltas
            return make_group_element(
                "Gsim", (1 / d1, -d2 / d1, 1 / d3, -d4 / d3, 1 / d5))
        if self.family == "G2":
            d1, d2, d3, d4, d5, d6 = self.deltas
            return make_group_element(
                "G2", (1 / d1, -d2 / d1, 1 / d3, -d4 / d3, 1 / d5, -d6 / d5))
        if self.family == "G1":
            d1, d2, d3, d4, d5, d6 = self.deltas
            det = d3 * d6 - d4 * d5
            flip = 1 if det > 0 else -1
            return make_group_element(
                "G1", (1 / d1, -d2 / d1, d6, -d4, -d5, d3),
                sign=self.sign * flip)
        raise EquivalenceError(
            f"no closed-form inverse element for {self.label!r}; "
            "the inverse coordinate maps are stored on the transformation")

    def describe(self) -> dict:
        return {
            "label": self.label,
            "t_new": to_string(self.t_new),
            "x_new": to_string(self.x_new),
            "u_new": to_string(self.u_new),
            "condition": self.condition,
        }


@dataclass(frozen=True)
class OutsideClassReport:
    """Produced when a map sends an equation outside the class."""
    label: str
    target: str
    note: str


# ---------------------------------------------------------------------------
# group element constructors


def make_group_element(family: str, deltas, sign: int = 1,
                       eq: FinEquation | None = None) -> PointTransformation:
    """Build one group element; see the module docstring for families.

    ``deltas`` carries the family's free constants; ``sign`` picks the
    branch of the cube-coefficient for G1 elements.  G3 reads the constant
    h and the power exponent from ``eq``.
    """
    deltas = tuple(float(v) for v in deltas)
    if family == "Gsim":
        if len(deltas) != 5:
            raise DeltaConstraintError("Gsim takes five constants")
        d1, d2, d3, d4, d5 = deltas
        if d1 * d3 * d5 == 0:
            raise DeltaConstraintError("Gsim requires d1*d3*d5 != 0")
        return PointTransformation(
            label="Gsim",
            t_new=add(mul(num(d1), _T), num(d2)),
            x_new=add(mul(num(d3), _X), num(d4)),
            u_new=mul(num(d5), _U),
            t_old=div(sub(_T, num(d2)), num(d1)),
            x_old=div(sub(_X, num(d4)), num(d3)),
            u_old=div(_U, num(d5)),
            d_rule=CoefficientRule(num(d3 * d3 / d1), div(_U, num(d5))),
            h_rule=CoefficientRule(num(1 / d1), div(sub(_X, num(d4)), num(d3))),
            family="Gsim", deltas=deltas)

    if family == "G1":
        if len(deltas) != 6:
            raise DeltaConstraintError("G1 takes six constants")
        d1, d2, d3, d4, d5, d6 = deltas
        det = d3 * d6 - d4 * d5
        if d1 <= 0:
            raise DeltaConstraintError("G1 requires d1 > 0")
        if abs(abs(det) - 1.0) > 1e-9:
            raise DeltaConstraintError("G1 requires d3*d6 - d4*d5 = +-1")
        if sign not in (-1, 1):
            raise DeltaConstraintError("sign must be +-1")
        den = add(mul(num(d5), _X), num(d6))
        x_old = div(sub(mul(num(d6), _X), num(d4)),
                    add(mul(num(-d5), _X), num(d3)))
        u_coeff_old = num(sign * det / d1)
        return PointTransformation(
            label="G1",
            t_new=add(mul(num(d1), _T), num(d2)),
            x_new=div(add(mul(num(d3), _X), num(d4)), den),
            u_new=mul(mul(num(sign * d1), pow_(den, num(3))), _U),
            t_old=div(sub(_T, num(d2)), num(d1)),
            x_old=x_old,
            u_old=mul(mul(u_coeff_old,
                          pow_(add(mul(num(-d5), _X), num(d3)), num(3))), _U),
            d_rule=CoefficientRule(override=pow_(_U, num(_FOUR_THIRDS))),
            h_rule=CoefficientRule(num(1 / d1), x_old),
            condition="d_minus_four_thirds",
            family="G1", deltas=deltas, sign=sign,
            domain_note="away from the pole of the x-map")

    if family == "G2":
        if len(deltas) != 6:
            raise DeltaConstraintError("G2 takes six constants")
        d1, d2, d3, d4, d5, d6 = deltas
        if d1 * d3 * d5 == 0:
            raise DeltaConstraintError("G2 requires d1*d3*d5 != 0")
        return PointTransformation(
            label="G2",
            t_new=add(mul(num(d1), _T), num(d2)),
            x_new=add(mul(num(d3), _X), num(d4)),
            u_new=add(mul(num(d5), _U), num(d6)),
            t_old=div(sub(_T, num(d2)), num(d1)),
            x_old=div(sub(_X, num(d4)), num(d3)),
            u_old=div(sub(_U, num(d6)), num(d5)),
            d_rule=CoefficientRule(num(d3 * d3 / d1),
                                   div(sub(_U, num(d6)), num(d5))),
            h_rule=CoefficientRule(override=ZERO),
            condition="h_zero",
            family="G2", deltas=deltas)

    if family == "G3":
        if len(deltas) != 5:
            raise DeltaConstraintError("G3 takes the five Gsim constants")
        if eq is None:
            raise DeltaConstraintError(
                "G3 reads the constant h and the power exponent from an equation")
        c = _h_const_value(eq)
        if c is None or c == 0:
            raise ConditionError("G3 requires a nonzero constant h")
        n = _d_power_exponent(eq)
        if n is None:
            raise ConditionError("G3 requires a power diffusion D = u^n")
        d1, d2, d3, d4, d5 = deltas
        if d1 * d3 * d5 == 0:
            raise DeltaConstraintError("G3 requires d1*d3*d5 != 0")
        coeff = d3 * d3 / (d1 * d5 ** n)
        if not np.isfinite(coeff):
            raise DeltaConstraintError(
                "d5 must be positive for a fractional exponent")
        cn = c * n
        t_core = div(call("exp", mul(num(cn), _T)), num(cn))
        t_arg = div(mul(num(cn), sub(_T, num(d2))), num(d1))
        return PointTransformation(
            label="G3",
            t_new=add(mul(num(d1), t_core), num(d2)),
            x_new=add(mul(num(d3), _X), num(d4)),
            u_new=mul(num(d5), mul(call("exp", mul(num(-c), _T)), _U)),
            t_old=div(call("ln", t_arg), num(cn)),
            x_old=div(sub(_X, num(d4)), num(d3)),
            u_old=mul(div(_U, num(d5)), pow_(t_arg, num(1.0 / n))),
            d_rule=CoefficientRule(override=mul(num(coeff),
                                                pow_(_U, num(n)))),
            h_rule=CoefficientRule(override=ZERO),
            condition="g3_source",
            requires=(("h_const", c), ("n", n)),
            family="G3", deltas=deltas,
            domain_note="t restricted so that the log argument is positive")

    raise EquivalenceError(f"unknown group family {family!r}")


# ---------------------------------------------------------------------------
# structural probes used by condition checks


def _h_const_value(eq: FinEquation, seed: int = 11):
    h = eq.h
    if isinstance(h, ConstantH):
        return h.c
    if isinstance(h, PowerX) and h.q == 0:
        return float(h.eps)
    if isinstance(h, FreeH):
        shape = fit_h_shape(h.expr, seed)
        if shape.kind == "zero":
            return 0.0
        if shape.kind == "const":
            return shape.coeff
    return None


def _d_power_exponent(eq: FinEquation, seed: int = 11):
    """Exponent n when D is exactly u^n (unit coefficient), else None."""
    d = eq.D
    if isinstance(d, PowerU):
        return d.n
    if isinstance(d, ShiftedPowerU) and d.alpha == 0:
        return d.n
    if isinstance(d, FreeD):
        shape = fit_d_shape(d.expr, seed)
        if shape.kind == "power" and abs(shape.coeff - 1) <= 1e-9:
            return shape.n
    return None


def _d_is_recip_shift(eq: FinEquation, seed: int = 11) -> bool:
    d = eq.D
    if isinstance(d, ReciprocalShift):
        return True
    if isinstance(d, ShiftedPowerU):
        return abs(d.n + 1) <= 1e-9 and d.alpha == 1
    if isinstance(d, FreeD):
        shape = fit_d_shape(d.expr, seed)
        return (shape.kind == "shifted" and abs(shape.coeff - 1) <= 1e-9
                and abs(shape.n + 1) <= 1e-9 and abs(shape.beta - 1) <= 1e-9)
    return False


def _check_condition(T: PointTransformation, eq: FinEquation):
    cond = T.condition
    if cond is None:
        return
    if cond == "d_minus_four_thirds":
        n = _d_power_exponent(eq)
        if n is None or not is_four_thirds(n):
            raise ConditionError(
                "transformation is conditional on D = u^(-4/3)")
        return
    if cond == "h_zero":
        c = _h_const_value(eq)
        if c != 0.0:
            raise ConditionError("transformation is conditional on h = 0")
        return
    if cond == "g3_source":
        req = dict(T.requires)
        c = _h_const_value(eq)
        n = _d_power_exponent(eq)
        if c is None or abs(c - req["h_const"]) > 1e-9:
            raise ConditionError(
                "equation's constant h does not match this G3 element")
        if n is None or abs(n - req["n"]) > 1e-9:
            raise ConditionError(
                "equation's power exponent does not match this G3 element")
        return
    if cond == "recip_const":
        req = dict(T.requires)
        if not _d_is_recip_shift(eq):
            raise ConditionError("map is conditional on D = (u+1)^(-1)")
        c = _h_const_value(eq)
        if c is None or abs(c - req["h_const"]) > 1e-9:
            raise ConditionError("map is conditional on h = eps")
        return
    raise EquivalenceError(f"unknown condition tag {cond!r}")


# ---------------------------------------------------------------------------
# action on equations and solutions


def _retag_d(expr: Expression, seed: int = 13):
    shape = fit_d_shape(expr, seed)
    if shape.kind == "power" and abs(shape.coeff - 1) <= 1e-9:
        return PowerU(shape.n)
    if shape.kind == "shifted" and abs(shape.coeff - 1) <= 1e-9:
        if abs(shape.beta - 1) <= 1e-9:
            return ShiftedPowerU(shape.n, 1.0)
        if abs(shape.beta) <= 1e-9:
            return PowerU(shape.n)
    if shape.kind == "exp" and abs(shape.coeff - 1) <= 1e-9 \
            and abs(shape.k - 1) <= 1e-9:
        return ExpU()
    return FreeD(expr)


def _retag_h(expr: Expression, seed: int = 13):
    if isinstance(expr, Num):
        return ConstantH(expr.value)
    shape = fit_h_shape(expr, seed)
    if shape.kind == "zero":
        return ConstantH(0.0)
    if shape.kind == "const":
        return ConstantH(shape.coeff)
    if shape.kind == "power" and abs(abs(shape.coeff) - 1) <= 1e-9 \
            and shape.shift == 0.0:
        return PowerX(shape.q, 1 if shape.coeff > 0 else -1)
    if shape.kind == "exp" and abs(abs(shape.coeff) - 1) <= 1e-9 \
            and abs(shape.k - 1) <= 1e-9:
        return ExpX(1 if shape.coeff > 0 else -1)
    if shape.kind == "h1" and abs(abs(shape.coeff) - 1) <= 1e-9 \
            and shape.shift == 0.0 and shape.q != 0:
        return H1(shape.p, shape.q, 1 if shape.coeff > 0 else -1)
    return FreeH(expr)


def apply_to_equation(T: PointTransformation, eq: FinEquation, seed: int = 13):
    """Transform an equation; returns the new equation, or an
    :class:`OutsideClassReport` when the image leaves the class."""
    validate(eq)
    _check_condition(T, eq)
    if T.outside_class is not None:
        return OutsideClassReport(
            label=T.label, target=T.outside_class,
            note="image is not of the form u_t = (D(u) u_x)_x + h(x) u")
    if T.d_rule.is_identity("u"):
        d_spec = eq.D
    else:
        d_spec = _retag_d(T.d_rule.apply(eq.d_expr(), "u"), seed)
    if T.h_rule.is_identity("x"):
        h_spec = eq.h
    else:
        h_spec = _retag_h(T.h_rule.apply(eq.h_expr(), "x"), seed)
    return validate(FinEquation(d_spec, h_spec))


def push_forward_solution(T: PointTransformation, s: Solution) -> Solution:
    """Express a solution in the new variables via the stored inverse."""
    old_vars = {"t": T.t_old, "x": T.x_old}
    u_of_new = substitute(s.expr, old_vars)
    expr = substitute(T.u_new, {**old_vars, "u": u_of_new})
    note = (s.domain + "; " if s.domain else "") + f"pushed through {T.label}"
    return Solution(expr, s.parameters, note)


def push_forward_field(T: PointTransformation, X: VectorField) -> VectorField:
    """Push a generator forward through the transformation (chain rule)."""
    def act(f: Expression) -> Expression:
        total = add(add(mul(X.tau, f.diff("t")), mul(X.xi, f.diff("x"))),
                    mul(X.eta, f.diff("u")))
        return substitute(total, {"t": T.t_old, "x": T.x_old, "u": T.u_old})

    return VectorField(act(T.t_new), act(T.x_new), act(T.u_new))


# ---------------------------------------------------------------------------
# the named case-to-case maps


ADDITIONAL_MAP_LABELS = {
    "6p0-to-5": (6, {"p": 0}),
    "6pm1-to-4": (6, {"p": -1}),
    "11a-to-11": (11, {}),
    "13a-to-13": (13, {}),
    "10-to-11": (10, {}),
    "12-to-13": (12, {}),
    "case8-out": (8, {}),
}

_INV_SQRT2 = 2.0 ** -0.5


def additional_equivalence(case_from: int, params: dict):
    """Named map identifying one table case with another.

    Returns ``(transformation, (target_case, target_params))``; the map
    that exits the class returns ``(transformation, None)``.
    """
    params = dict(params)
    if case_from == 6:
        p = int(params.get("p", 1))
        q = float(params.get("q", 1.0))
        eps = int(params.get("eps", 1))
        if q == 0:
            raise EquivalenceError("case 6 requires q != 0")
        if p == 1:
            raise ComplexFieldOnlyError(
                "case 6 with p=1 maps to case 4 only over the complex field")
        if p == 0:
            T = make_group_element("G1", (1, 0, 0, 1, 1, 0), sign=1)
            T = _relabel(T, "6p0-to-5")
            return T, (5, {"n": _FOUR_THIRDS, "eps": eps})
        if p == -1:
            r = _INV_SQRT2
            T = make_group_element("G1", (1, 0, r, -r, r, r), sign=1)
            T = _relabel(T, "6pm1-to-4")
            return T, (4, {"n": _FOUR_THIRDS, "q": q / 2.0, "eps": eps})
        raise EquivalenceError("case 6 requires p in {-1, 0, 1}")

    if case_from in (11, 13):
        alpha = float(params.get("alpha", 0.0))
        if alpha == 0:
            raise NoAdditionalMapError(
                f"case {case_from} with alpha=0 is already in normal form")
        T = make_group_element("G2", (1, 0, 1, 0, 1, alpha))
        T = _relabel(T, f"{case_from}a-to-{case_from}")
        if case_from == 11:
            n = float(params["n"])
            return T, (11, {"n": n, "alpha": 0.0})
        return T, (13, {"alpha": 0.0})

    if case_from in (10, 12):
        eps = int(params.get("eps", 1))
        n = _FOUR_THIRDS if case_from == 12 else float(params["n"])
        source = FinEquation(PowerU(n), ConstantH(float(eps)))
        T = make_group_element("G3", (1, 0, 1, 0, 1), eq=source)
        T = _relabel(T, f"{case_from}-to-{11 if case_from == 10 else 13}")
        if case_from == 10:
            return T, (11, {"n": n, "alpha": 0.0})
        return T, (13, {"alpha": 0.0})

    if case_from == 8:
        eps = int(params.get("eps", 1))
        if eps not in (-1, 1):
            raise EquivalenceError("case 8 requires eps = +-1")
        e_decay = call("exp", mul(num(-eps), _T))
        T = PointTransformation(
            label="case8-out",
            t_new=mul(num(-1.0 / eps), e_decay),
            x_new=_X,
            u_new=mul(e_decay, add(_U, num(1))),
            t_old=mul(num(-1.0 / eps), call("ln", mul(num(-eps), _T))),
            x_old=_X,
            u_old=sub(div(_U, mul(num(-eps), _T)), num(1)),
            condition="recip_const",
            requires=(("h_const", float(eps)),),
            outside_class=f"u_t = (u^-1 u_x)_x - ({eps})",
            domain_note="new time restricted to -eps*t > 0")
        return T, None

    raise NoAdditionalMapError(f"no additional map for case {case_from}")


def _relabel(T: PointTransformation, label: str) -> PointTransformation:
    return PointTransformation(
        label=label, t_new=T.t_new, x_new=T.x_new, u_new=T.u_new,
        t_old=T.t_old, x_old=T.x_old, u_old=T.u_old,
        d_rule=T.d_rule, h_rule=T.h_rule, condition=T.condition,
        requires=T.requires, outside_class=T.outside_class,
        family=T.family, deltas=T.deltas, sign=T.sign,
        domain_note=T.domain_note)


def map_by_label(label: str, params: dict):
    """CLI entry: resolve one of the named map labels."""
    if label not in ADDITIONAL_MAP_LABELS:
        raise NoAdditionalMapError(
            f"unknown map {label!r}; known: {sorted(ADDITIONAL_MAP_LABELS)}")
    case_from, fixed = ADDITIONAL_MAP_LABELS[label]
    merged = {**fixed, **params}
    return additional_equivalence(case_from, merged)
