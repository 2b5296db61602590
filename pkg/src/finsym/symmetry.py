"""Second prolongation of point generators and invariance residuals.

For X = tau(t) d_t + xi(t,x) d_x + eta(t,x,u) d_u acting on
Delta = u_t - D u_xx - D_u u_x^2 - h u, the prolonged action is assembled
symbolically over jet coordinates (t, x, u, u_t, u_x, u_xx) and then u_t
is eliminated through the equation.  Because tau depends on t only, no
u_tx term ever appears.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import (
    Expression, Num, ZERO, add, differentiate, evaluate, mul, neg,
    sample_bindings, sub, substitute, sym,
)
from .model import FinEquation, VectorField, validate

__all__ = [
    "JetResidual", "prolonged_residual", "is_lie_symmetry",
    "symmetry_residual", "conditional_residual", "SymmetryError",
    "DEFAULT_JET_RANGES",
]

DEFAULT_JET_RANGES = {
    "t": (0.1, 2.0), "x": (0.5, 3.0), "u": (0.5, 3.0),
    "u_t": (-2.0, 2.0), "u_x": (-2.0, 2.0), "u_xx": (-2.0, 2.0),
}

_TOTAL_X_DEPS = {"u": ("x",), "u_x": ("x",), "u_xx": ("x",)}


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class JetResidual:
    """Residual over jet coordinates, kept as its additive pieces.

    The pieces are summed for the value; their magnitudes provide the
    cancellation scale for the relative zero test.
    """
    terms: tuple[Expression, ...]

    @property
    def residual(self) -> Expression:
        total = ZERO
        for term in self.terms:
            total = add(total, term)
        return total

    def free_symbols(self):
        out = set()
        for term in self.terms:
            out |= set(term.free_symbols())
        return sorted(out)

    def max_relative(self, seed: int = 42, samples: int = 50,
                     ranges=None) -> float:
        """Largest |sum of pieces| / (1 + sum |pieces|) over jet samples."""
        symbols = self.free_symbols()
        rng = np.random.default_rng(seed)
        merged = dict(DEFAULT_JET_RANGES)
        if ranges:
            merged.update(ranges)
        worst = 0.0
        for _ in range(8):
            bindings = sample_bindings(symbols, rng, samples, merged)
            total = np.zeros(samples)
            scale = np.ones(samples)
            for term in self.terms:
                v = np.broadcast_to(
                    np.asarray(evaluate(term, bindings), dtype=np.float64),
                    (samples,))
                total = total + v
                scale = scale + np.abs(v)
            finite = np.isfinite(total) & np.isfinite(scale)
            if finite.sum() < samples // 2:
                continue
            worst = max(worst, float(np.max(np.abs(total[finite])
                                            / scale[finite])))
            return worst
        raise SymmetryError("jet sampling hit non-finite values everywhere")


def _check_shapes(field: VectorField):
    if not field.tau.free_symbols() <= {"t"}:
        raise SymmetryError("tau may depend on t only")
    if not field.xi.free_symbols() <= {"t", "x"}:
        raise SymmetryError("xi may depend on (t, x) only")
    if not field.eta.free_symbols() <= {"t", "x", "u"}:
        raise SymmetryError("eta may depend on (t, x, u) only")


def _total_x(e: Expression) -> Expression:
    return differentiate(e, "x", deps=_TOTAL_X_DEPS)


def _raw_terms(eq: FinEquation, field: VectorField
               ) -> tuple[Expression, ...]:
    """Additive pieces of pr X(Delta) before any on-shell substitution."""
    _check_shapes(field)
    tau, xi, eta = field.tau, field.xi, field.eta
    u, u_t, u_x, u_xx = sym("u"), sym("u_t"), sym("u_x"), sym("u_xx")

    d = eq.d_expr()
    d1 = d.diff("u")
    d2 = d1.diff("u")
    h = eq.h_expr()
    h1 = h.diff("x")

    tau_t = tau.diff("t")
    xi_t, xi_x = xi.diff("t"), xi.diff("x")
    eta_t, eta_x, eta_u = eta.diff("t"), eta.diff("x"), eta.diff("u")

    # first and second prolongation coefficients (tau_x = tau_u = 0)
    eta_xp = add(eta_x, mul(u_x, sub(eta_u, xi_x)))
    eta_tp = add(eta_t, sub(mul(u_t, sub(eta_u, tau_t)), mul(u_x, xi_t)))
    eta_xxp = sub(_total_x(eta_xp), mul(u_xx, xi_x))

    return (
        eta_tp,
        neg(mul(xi, mul(h1, u))),
        mul(eta, neg(add(add(mul(d1, u_xx), mul(d2, mul(u_x, u_x))), h))),
        neg(mul(mul(Num(2.0), d1), mul(u_x, eta_xp))),
        neg(mul(d, eta_xxp)),
    )


def _rhs(eq: FinEquation) -> Expression:
    """u_t on solutions: D u_xx + D_u u_x^2 + h u."""
    u, u_x, u_xx = sym("u"), sym("u_x"), sym("u_xx")
    d = eq.d_expr()
    return add(add(mul(d, u_xx), mul(d.diff("u"), mul(u_x, u_x))),
               mul(eq.h_expr(), u))


def prolonged_residual(eq: FinEquation, field: VectorField) -> JetResidual:
    """Prolonged action on the equation with u_t eliminated.

    The result vanishes identically on (t, x, u, u_x, u_xx) iff the field
    is a Lie point symmetry of the equation.
    """
    validate(eq)
    rhs = _rhs(eq)
    terms = tuple(substitute(term, {"u_t": rhs})
                  for term in _raw_terms(eq, field))
    return JetResidual(terms)


def symmetry_residual(eq: FinEquation, field: VectorField, seed: int = 42,
                      samples: int = 50, ranges=None) -> float:
    return prolonged_residual(eq, field).max_relative(seed, samples, ranges)


def is_lie_symmetry(eq: FinEquation, field: VectorField, seed: int = 42,
                    tol: float = 1e-9, samples: int = 50,
                    ranges=None) -> bool:
    """Randomized zero test of the prolonged residual over jet samples."""
    return symmetry_residual(eq, field, seed, samples, ranges) <= tol


def _is_literal(e: Expression, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def conditional_residual(eq: FinEquation, field: VectorField) -> JetResidual:
    """Residual for conditional (nonclassical) invariance.

    Supports the two operator shapes with tau identically 1 or identically
    0 (with xi nonzero).  Both the equation and the invariant-surface
    condition Q = eta - tau u_t - xi u_x = 0, with the needed differential
    consequences, are imposed.
    """
    validate(eq)
    _check_shapes(field)
    tau, xi, eta = field.tau, field.xi, field.eta
    raw = _raw_terms(eq, field)
    u, u_x = sym("u"), sym("u_x")
    d = eq.d_expr()
    d1 = d.diff("u")
    h = eq.h_expr()

    if _is_literal(tau, 1.0):
        # u_t = eta - xi u_x; combined with the equation this pins u_xx
        u_t_sub = sub(eta, mul(xi, u_x))
        u_xx_sub = (u_t_sub - mul(d1, mul(u_x, u_x)) - mul(h, u)) / d
        mapping = {"u_t": u_t_sub, "u_xx": u_xx_sub}
    elif _is_literal(tau, 0.0):
        if _is_literal(xi, 0.0):
            raise SymmetryError("tau = 0 requires a nonzero xi")
        w = eta / xi  # u_x on the invariant surface
        w_total = add(w.diff("x"), mul(w.diff("u"), w))  # u_xx consequence
        u_t_sub = add(add(mul(d, w_total),
                          mul(d1, mul(w, w))), mul(h, u))
        mapping = {"u_x": w, "u_xx": w_total, "u_t": u_t_sub}
    else:
        raise SymmetryError(
            "unsupported tau shape: only tau = 1 or tau = 0 are handled")

    return JetResidual(tuple(substitute(t, mapping) for t in raw))
