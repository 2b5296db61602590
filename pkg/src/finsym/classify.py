"""Structural classification of fin equations and their symmetry bases.

An equation is matched against a 13-case table keyed on the shapes of D
and h, from most to least specific.  Free-form coefficients are matched to
family shapes by seeded least-squares fits on the log-derivative ratio
(D/D' is linear in u for power families, h/h' is quadratic in x for the
integral profile), then confirmed against the actual shape at a strict
relative residual.  Matches that need a scaling/translation of the
equivalence group are annotated in the result's note.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import Expression, add, call, evaluate, mul, neg, num, pow_, sym
from .model import (
    ConstantH, ExpU, ExpX, FinEquation, H1, InverseSquareX, ModelError,
    PowerU, PowerX, ReciprocalShift, ShiftedPowerU, VectorField,
    h1_expression, is_four_thirds, validate,
)
from .model import D_T, D_X

__all__ = [
    "ClassificationResult", "classify", "h1_closed_form",
    "DShape", "HShape", "fit_d_shape", "fit_h_shape", "ClassifyError",
    "FIT_SAMPLES", "FIT_TOL",
]

FIT_SAMPLES = 50
FIT_TOL = 1e-8

_T, _X, _U = sym("t"), sym("x"), sym("u")


class ClassifyError(ModelError):
    pass


def h1_closed_form(p: int, q: float, eps: int) -> Expression:
    """Closed form of the h1 profile for p in {-1, 0, 1}."""
    if p not in (-1, 0, 1):
        raise ClassifyError(f"p must be in {{-1, 0, 1}}, got {p}")
    if q == 0:
        raise ClassifyError("h1 profile requires q != 0")
    return h1_expression(p, q, eps)


# ---------------------------------------------------------------------------
# shape descriptors


@dataclass(frozen=True)
class DShape:
    kind: str              # "power" | "shifted" | "exp" | "arbitrary"
    coeff: float = 1.0
    n: float = 0.0
    beta: float = 0.0
    k: float = 1.0


@dataclass(frozen=True)
class HShape:
    kind: str              # "zero" | "const" | "power" | "exp" | "h1" | "arbitrary"
    coeff: float = 0.0
    q: float = 0.0
    k: float = 1.0
    p: int = 0
    shift: float = 0.0


_ARBITRARY_D = DShape("arbitrary")
_ARBITRARY_H = HShape("arbitrary")


def _samples(expr: Expression, var: str, rng, lo=0.5, hi=3.0,
             count=FIT_SAMPLES):
    xs = rng.uniform(lo, hi, size=count)
    vals = np.broadcast_to(
        np.asarray(evaluate(expr, {var: xs}), dtype=np.float64), (count,))
    return xs, vals


def _verified(expr: Expression, candidate: Expression, var: str, xs) -> bool:
    got = np.broadcast_to(
        np.asarray(evaluate(expr, {var: xs}), dtype=np.float64), xs.shape)
    want = np.broadcast_to(
        np.asarray(evaluate(candidate, {var: xs}), dtype=np.float64), xs.shape)
    finite = np.isfinite(got) & np.isfinite(want)
    if finite.sum() < max(8, xs.size // 2):
        return False
    err = np.abs(got[finite] - want[finite])
    return bool(np.all(err <= FIT_TOL * (1 + np.abs(got[finite])
                                         + np.abs(want[finite]))))


def _ratio_fit(xs, vals, dvals, degree_mask):
    """Least squares of vals/dvals against monomials selected by mask."""
    ok = np.isfinite(vals) & np.isfinite(dvals) & (np.abs(dvals) > 1e-300)
    if ok.sum() < 8:
        return None
    z = vals[ok] / dvals[ok]
    if not np.all(np.isfinite(z)):
        return None
    cols = [xs[ok] ** d for d in degree_mask]
    a = np.stack(cols, axis=1)
    coeffs, *_ = np.linalg.lstsq(a, z, rcond=None)
    return coeffs, ok


def _median_coeff(vals, shape_vals):
    ok = np.isfinite(vals) & np.isfinite(shape_vals) & (np.abs(shape_vals) > 1e-300)
    if ok.sum() < 8:
        return None
    return float(np.median(vals[ok] / shape_vals[ok]))


def fit_d_shape(expr: Expression, seed: int = 42) -> DShape:
    """Match a u-expression against c*e^(k u) and c*(u+beta)^n."""
    rng = np.random.default_rng(seed)
    xs, vals = _samples(expr, "u", rng)
    dvals = np.broadcast_to(
        np.asarray(evaluate(expr.diff("u"), {"u": xs}), dtype=np.float64),
        xs.shape)

    # exponential: D/D' constant
    fit = _ratio_fit(xs, vals, dvals, (0,))
    if fit is not None:
        (g,), _ = fit
        if g != 0:
            k = 1.0 / g
            shape = np.exp(k * xs)
            c = _median_coeff(vals, shape)
            if c is not None and _verified(expr, mul(num(c), call("exp", mul(num(k), _U))), "u", xs):
                return DShape("exp", coeff=c, k=k)

    # power / shifted power: D/D' linear in u
    fit = _ratio_fit(xs, vals, dvals, (0, 1))
    if fit is not None:
        (g, a), _ = fit
        if a != 0:
            n = 1.0 / a
            beta = g / a
            with np.errstate(all="ignore"):
                shape = (xs + beta) ** n
            c = _median_coeff(vals, shape)
            if c is not None:
                cand = mul(num(c), pow_(add(_U, num(beta)), num(n)))
                if _verified(expr, cand, "u", xs):
                    if abs(beta) <= 1e-9:
                        return DShape("power", coeff=c, n=n)
                    return DShape("shifted", coeff=c, n=n, beta=beta)
    return _ARBITRARY_D


def fit_h_shape(expr: Expression, seed: int = 42) -> HShape:
    """Match an x-expression against 0, const, c*(x+s)^q, c*e^(kx) and the
    integral profile c*h1(x+s; p, q)."""
    rng = np.random.default_rng(seed)
    xs, vals = _samples(expr, "x", rng)
    finite = np.isfinite(vals)
    if finite.sum() < 8:
        return _ARBITRARY_H
    vmax = float(np.max(np.abs(vals[finite])))
    if vmax <= 1e-12:
        return HShape("zero")
    spread = float(np.max(vals[finite]) - np.min(vals[finite]))
    if spread <= 1e-12 * (1 + vmax):
        return HShape("const", coeff=float(np.median(vals[finite])))

    dvals = np.broadcast_to(
        np.asarray(evaluate(expr.diff("x"), {"x": xs}), dtype=np.float64),
        xs.shape)

    # exponential: h/h' constant
    fit = _ratio_fit(xs, vals, dvals, (0,))
    if fit is not None:
        (g,), _ = fit
        if g != 0:
            k = 1.0 / g
            c = _median_coeff(vals, np.exp(k * xs))
            if c is not None and _verified(
                    expr, mul(num(c), call("exp", mul(num(k), _X))), "x", xs):
                return HShape("exp", coeff=c, k=k)

    # power: h/h' linear in x
    fit = _ratio_fit(xs, vals, dvals, (0, 1))
    if fit is not None:
        (g, a), _ = fit
        if a != 0:
            q = 1.0 / a
            s = g / a
            with np.errstate(all="ignore"):
                shape = (xs + s) ** q
            c = _median_coeff(vals, shape)
            if c is not None:
                cand = mul(num(c), pow_(add(_X, num(s)), num(q)))
                if _verified(expr, cand, "x", xs):
                    if abs(s) <= 1e-9:
                        s = 0.0
                    return HShape("power", coeff=c, q=q, shift=s)

    # integral profile: h/h' quadratic in x, ((x+s)^2 + p)/q with p in {-1,0,1}
    fit = _ratio_fit(xs, vals, dvals, (0, 1, 2))
    if fit is not None:
        (g, a, b), _ = fit
        if b != 0:
            q = 1.0 / b
            s = a * q / 2.0
            p_hat = g * q - s * s
            p = int(round(p_hat))
            if p in (-1, 0, 1) and abs(p_hat - p) <= 1e-6:
                base = h1_expression(p, q, 1, var=add(_X, num(s)))
                shape = np.broadcast_to(
                    np.asarray(evaluate(base, {"x": xs}), dtype=np.float64),
                    xs.shape)
                c = _median_coeff(vals, shape)
                if c is not None and _verified(expr, mul(num(c), base), "x", xs):
                    if abs(s) <= 1e-9:
                        s = 0.0
                    return HShape("h1", coeff=c, q=q, p=p, shift=s)
    return _ARBITRARY_H


def _d_shape(eq: FinEquation, seed: int) -> DShape:
    d = eq.D
    if isinstance(d, PowerU):
        return DShape("power", n=d.n)
    if isinstance(d, ShiftedPowerU):
        if d.alpha == 0:
            return DShape("power", n=d.n)
        return DShape("shifted", n=d.n, beta=float(d.alpha))
    if isinstance(d, ReciprocalShift):
        return DShape("shifted", n=-1.0, beta=1.0)
    if isinstance(d, ExpU):
        return DShape("exp", k=1.0)
    return fit_d_shape(d.expr, seed)


def _h_shape(eq: FinEquation, seed: int) -> HShape:
    h = eq.h
    if isinstance(h, ConstantH):
        return HShape("zero") if h.c == 0 else HShape("const", coeff=h.c)
    if isinstance(h, PowerX):
        if h.q == 0:
            return HShape("const", coeff=float(h.eps))
        return HShape("power", coeff=float(h.eps), q=h.q)
    if isinstance(h, InverseSquareX):
        return HShape("power", coeff=1.0, q=-2.0)
    if isinstance(h, ExpX):
        return HShape("exp", coeff=float(h.eps), k=1.0)
    if isinstance(h, H1):
        return HShape("h1", coeff=float(h.eps), q=h.q, p=h.p)
    return fit_h_shape(h.expr, seed)


# ---------------------------------------------------------------------------
# classification result


@dataclass(frozen=True)
class ClassificationResult:
    case: int
    params: dict
    basis: tuple[VectorField, ...]
    note: str | None = None

    def to_json(self) -> dict:
        def out(v):
            f = float(v)
            return int(f) if f == int(f) and abs(f) < 1e15 else f
        return {
            "case": self.case,
            "params": {k: out(v) for k, v in self.params.items()},
            "basis": [vf.to_string() for vf in self.basis],
            "note": self.note,
        }


def _scaling_vf(shift: float) -> VectorField:
    return VectorField(mul(num(2), _T), add(_X, num(shift)) if shift else _X,
                       num(0))


def _exp_t(rate: float) -> Expression:
    return call("exp", mul(num(rate), _T))


def _notes_d(d: DShape, parts: list):
    if d.kind in ("power", "shifted") and abs(d.coeff - 1.0) > 1e-9:
        parts.append(f"D coefficient {d.coeff:.6g} rescaled to 1")
    if d.kind == "exp":
        if abs(d.coeff - 1.0) > 1e-9:
            parts.append(f"D coefficient {d.coeff:.6g} rescaled to 1")
        if abs(d.k - 1.0) > 1e-9:
            parts.append(f"D exponent rate {d.k:.6g} rescaled to 1")
    if d.kind == "shifted" and d.beta not in (0.0, 1.0):
        parts.append(f"u-shift {d.beta:.6g} normalized to alpha=1")


def _sign(v: float) -> int:
    return 1 if v > 0 else -1


def classify(eq: FinEquation, seed: int = 42) -> ClassificationResult:
    """Map an equation to its table case and symmetry basis.

    Matching runs from most to least specific structure; free-form
    coefficients that fit no family shape are treated as arbitrary.  The
    returned generators are symmetries of the input equation as given (no
    renormalization is applied to the equation itself).
    """
    validate(eq, seed)
    d = _d_shape(eq, seed)
    h = _h_shape(eq, seed + 1)
    u = _U
    notes: list = []
    _notes_d(d, notes)

    eps_flip = _sign(d.coeff) if d.kind != "arbitrary" else 1
    if eps_flip < 0:
        notes.append("negative D coefficient absorbed by time reflection")

    def note_h_coeff(c, target):
        if abs(abs(c) - abs(target)) > 1e-9 or abs(c - target) > 1e-9:
            notes.append(f"h coefficient {c:.6g} rescaled to {target}")

    def done(case, params, basis):
        return ClassificationResult(case, params, tuple(basis),
                                    "; ".join(notes) or None)

    if h.kind in ("const", "zero"):
        c = h.coeff if h.kind == "const" else 0.0
        if c != 0.0:
            eps = _sign(c) * eps_flip
            if d.kind == "shifted" and abs(d.n + 1.0) <= 1e-9:
                # any nonzero shift rescales onto (u+1)^(-1)
                if abs(abs(c) - 1) > 1e-9:
                    notes.append(f"h={c:.6g} rescaled to eps={eps}")
                shifted_u = add(u, num(d.beta))
                basis = [D_T, D_X,
                         VectorField(_exp_t(c), num(0),
                                     mul(mul(num(c), _exp_t(c)), shifted_u))]
                return done(8, {"eps": eps}, basis)
            if d.kind == "power":
                if abs(abs(c) - 1) > 1e-9:
                    notes.append(f"h={c:.6g} rescaled to eps={eps}")
                if is_four_thirds(d.n):
                    basis = [D_T, D_X,
                             VectorField(_exp_t(4.0 * c / 3.0), num(0),
                                         mul(mul(num(c), _exp_t(4.0 * c / 3.0)), u)),
                             VectorField(num(0), mul(num(2), _X),
                                         mul(num(-3), u)),
                             VectorField(num(0), pow_(_X, num(2)),
                                         mul(num(-3), mul(_X, u)))]
                    return done(12, {"eps": eps}, basis)
                basis = [D_T, D_X,
                         VectorField(_exp_t(-c * d.n), num(0),
                                     mul(mul(num(c), _exp_t(-c * d.n)), u)),
                         VectorField(num(0), mul(num(d.n), _X),
                                     mul(num(2), u))]
                return done(10, {"n": d.n, "eps": eps}, basis)
            # arbitrary D (also exp or off-table shifts) with constant h
            if abs(c - 1.0) > 1e-9:
                notes.append(f"h={c:.6g} rescaled to 1")
            return done(2, {"c": c}, [D_T, D_X])
        # h identically zero
        if d.kind == "exp":
            if abs(d.k - 1.0) > 1e-9:
                eta4 = num(2.0 / d.k)
            else:
                eta4 = num(2)
            basis = [D_T, D_X, _scaling_vf(0.0),
                     VectorField(num(0), _X, eta4)]
            return done(9, {}, basis)
        if d.kind in ("power", "shifted"):
            beta = d.beta if d.kind == "shifted" else 0.0
            alpha = beta if beta in (0.0, 1.0) else 1.0
            shifted_u = add(u, num(beta)) if beta else u
            if is_four_thirds(d.n):
                basis = [D_T, D_X, _scaling_vf(0.0),
                         VectorField(num(0), mul(num(2), _X),
                                     mul(num(-3), shifted_u)),
                         VectorField(num(0), pow_(_X, num(2)),
                                     mul(num(-3), mul(_X, shifted_u)))]
                return done(13, {"alpha": alpha}, basis)
            basis = [D_T, D_X, _scaling_vf(0.0),
                     VectorField(num(0), mul(num(d.n), _X),
                                 mul(num(2), shifted_u))]
            return done(11, {"n": d.n, "alpha": alpha}, basis)
        return done(7, {}, [D_T, D_X, _scaling_vf(0.0)])

    # nonconstant h
    if d.kind == "power":
        if h.kind == "power":
            eps = _sign(h.coeff) * eps_flip
            note_h_coeff(h.coeff, eps)
            if h.shift:
                notes.append(f"x-translation by {h.shift:.6g} absorbed")
            xs = add(_X, num(h.shift)) if h.shift else _X
            basis = [D_T,
                     VectorField(mul(num(-h.q * d.n), _T),
                                 mul(num(d.n), xs),
                                 mul(num(h.q + 2.0), u))]
            return done(4, {"n": d.n, "q": h.q, "eps": eps}, basis)
        if h.kind == "exp":
            eps = _sign(h.coeff) * eps_flip
            note_h_coeff(h.coeff, eps)
            if abs(h.k - 1.0) > 1e-9:
                notes.append(f"x rescaled by {h.k:.6g} to unit exponent rate")
            basis = [D_T,
                     VectorField(mul(num(-d.n), _T), num(d.n / h.k), u)]
            return done(5, {"n": d.n, "eps": eps}, basis)
        if h.kind == "h1" and is_four_thirds(d.n):
            eps = _sign(h.coeff) * eps_flip
            note_h_coeff(h.coeff, eps)
            if h.shift:
                notes.append(f"x-translation by {h.shift:.6g} absorbed")
            xs = add(_X, num(h.shift)) if h.shift else _X
            basis = [D_T,
                     VectorField(mul(num(-4.0 * h.q), _T),
                                 mul(num(4), add(pow_(xs, num(2)), num(h.p))),
                                 neg(mul(num(3), mul(add(mul(num(4), xs),
                                                         num(h.q)), u))))]
            return done(6, {"p": h.p, "q": h.q, "eps": eps}, basis)
        return done(1, {}, [D_T])

    # arbitrary D with special h: constant already handled; x^-2 remains
    if h.kind == "power" and abs(h.q + 2.0) <= 1e-9:
        if abs(h.coeff - 1.0) > 1e-9:
            notes.append(f"h coefficient {h.coeff:.6g} rescaled to 1")
        if h.shift:
            notes.append(f"x-translation by {h.shift:.6g} absorbed")
        basis = [D_T, _scaling_vf(h.shift)]
        return done(3, {"c": h.coeff}, basis)
    return done(1, {}, [D_T])
