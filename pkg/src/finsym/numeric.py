"""Finite-difference oracle and residual evaluation on grids.

The solver is a conservative second-order discretization of
(D(u) u_x)_x with interface coefficients D((u_i + u_{i+1})/2), a nodal
source h(x_i) u_i, and explicit Euler stepping (implicit Euler with a
damped fixed-point iteration behind a flag).  Singular coefficients are
handled by domain restriction only; blow-up aborts loudly.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .expressions import Expression, differentiate, evaluate, mul, parse, sub, substitute
from .model import FinEquation, ModelError, Solution, validate

__all__ = [
    "Grid", "Field", "DirichletBC", "NoFluxBC", "solve_pde",
    "pde_residual_expression", "pde_residual_grid",
    "integrate_reduced_ode", "shoot_reduced_ode",
    "NumericError", "StabilityError", "BlowUpError", "CoefficientFailure",
    "STABILITY_FACTOR", "BLOWUP_THRESHOLD",
]

STABILITY_FACTOR = 0.45
BLOWUP_THRESHOLD = 1e12


class NumericError(RuntimeError):
    pass


class StabilityError(NumericError):
    pass


class CoefficientFailure(NumericError):
    pass


class BlowUpError(NumericError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid on [a, b] x [0, T]."""
    a: float
    b: float
    m: int
    t_final: float
    dt: float | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise NumericError("grid requires a < b")
        if self.m < 8:
            raise NumericError("grid requires at least 8 nodes")
        if self.t_final < 0:
            raise NumericError("time horizon must be nonnegative")
        if self.dt is not None and self.dt <= 0:
            raise NumericError("dt must be positive")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / (self.m - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.m)


@dataclass(frozen=True)
class DirichletBC:
    left: Expression
    right: Expression

    @classmethod
    def from_strings(cls, left: str, right: str) -> "DirichletBC":
        return cls(parse(left), parse(right))


@dataclass(frozen=True)
class NoFluxBC:
    pass


@dataclass
class Field:
    """Stored time levels of a numerical solution."""
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray  # shape (len(times), len(x))
    stable: bool = True

    def to_csv(self, stream=None) -> str:
        out = stream or io.StringIO()
        out.write("t,x,u\n")
        for k, t in enumerate(self.times):
            for j, xv in enumerate(self.x):
                out.write(f"{t!r},{xv!r},{self.values[k, j]!r}\n")
        return out.getvalue() if stream is None else ""


def _eval_on(expr: Expression, **arrays) -> np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(v) for v in arrays.values()))
    return np.broadcast_to(
        np.asarray(evaluate(expr, arrays), dtype=np.float64), shape).copy()


def _max_abs_d(eq: FinEquation, u0: np.ndarray) -> float:
    lo, hi = float(np.min(u0)), float(np.max(u0))
    pad = 0.1 * (hi - lo + 1e-12)
    us = np.linspace(lo - pad, hi + pad, 101)
    dv = _eval_on(eq.d_expr(), u=us)
    dv = dv[np.isfinite(dv)]
    if dv.size == 0:
        raise CoefficientFailure("D not evaluable on the initial data range")
    return float(np.max(np.abs(dv)))


def solve_pde(eq: FinEquation, initial: Expression, boundary, grid: Grid,
              method: str = "explicit", n_store: int = 11,
              theta: float = 0.5, max_iter: int = 200) -> Field:
    """March the equation forward and return stored time levels.

    ``boundary`` is a :class:`DirichletBC` (expressions in t) or
    :class:`NoFluxBC` (reflecting ghost nodes, zero interface flux).
    The explicit scheme requires dt <= 0.45 dx^2 / max|D| over the initial
    data range; when ``grid.dt`` is None that bound sets the step.
    """
    validate(eq)
    xs = grid.nodes()
    dx = grid.dx
    u = _eval_on(initial, x=xs)
    if not np.all(np.isfinite(u)):
        raise NumericError("initial data not finite on the grid")

    h_nodes = _eval_on(eq.h_expr(), x=xs)
    if not np.all(np.isfinite(h_nodes)):
        raise CoefficientFailure("h not evaluable at a node")

    max_d = _max_abs_d(eq, u)
    dt_stable = STABILITY_FACTOR * dx * dx / max(max_d, 1e-300)

    if grid.t_final == 0:
        return Field(xs, np.array([0.0]), u[None, :].copy())

    dt = grid.dt if grid.dt is not None else dt_stable
    stable = dt <= dt_stable * (1 + 1e-12)
    if method == "explicit" and not stable:
        raise StabilityError(
            f"explicit step dt={dt:g} exceeds the stability bound "
            f"{dt_stable:g}; pass a smaller dt or method='implicit'")
    n_steps = max(1, int(np.ceil(grid.t_final / dt - 1e-12)))
    dt = grid.t_final / n_steps

    store_every = max(1, n_steps // max(1, n_store - 1))
    times = [0.0]
    levels = [u.copy()]
    d_expr = eq.d_expr()

    def rate(v: np.ndarray, t_next: float) -> np.ndarray:
        mid = 0.5 * (v[:-1] + v[1:])
        d_half = _eval_on(d_expr, u=mid)
        if not np.all(np.isfinite(d_half)):
            raise CoefficientFailure("D evaluation failed (NaN) at a node")
        flux = d_half * (v[1:] - v[:-1]) / dx  # D u_x at interfaces
        out = np.empty_like(v)
        out[1:-1] = (flux[1:] - flux[:-1]) / dx + h_nodes[1:-1] * v[1:-1]
        if isinstance(boundary, NoFluxBC):
            out[0] = flux[0] / dx + h_nodes[0] * v[0]
            out[-1] = -flux[-1] / dx + h_nodes[-1] * v[-1]
        else:
            out[0] = out[-1] = 0.0
        return out

    t = 0.0
    for step in range(1, n_steps + 1):
        t_next = step * dt if step < n_steps else grid.t_final
        if method == "explicit":
            u_next = u + dt * rate(u, t_next)
        elif method == "implicit":
            u_next = u.copy()
            for _ in range(max_iter):
                candidate = u + dt * rate(u_next, t_next)
                if isinstance(boundary, DirichletBC):
                    candidate[0] = float(_eval_on(boundary.left, t=t_next))
                    candidate[-1] = float(_eval_on(boundary.right, t=t_next))
                new = (1 - theta) * u_next + theta * candidate
                delta = float(np.max(np.abs(new - u_next)))
                u_next = new
                if delta <= 1e-12 * (1 + float(np.max(np.abs(u_next)))):
                    break
        else:
            raise NumericError(f"unknown method {method!r}")

        if isinstance(boundary, DirichletBC):
            u_next[0] = float(_eval_on(boundary.left, t=t_next))
            u_next[-1] = float(_eval_on(boundary.right, t=t_next))

        if not np.all(np.isfinite(u_next)) \
                or float(np.max(np.abs(u_next))) > BLOWUP_THRESHOLD:
            partial = Field(xs, np.asarray(times), np.asarray(levels),
                            stable=stable)
            raise BlowUpError(f"solution blew up at t={t_next:g}", partial)

        u, t = u_next, t_next
        if step % store_every == 0 or step == n_steps:
            times.append(t)
            levels.append(u.copy())

    return Field(xs, np.asarray(times), np.asarray(levels), stable=stable)


# ---------------------------------------------------------------------------
# reduced ODEs: generic integration and shooting (no closed-form catalog)


def _phi_ww_rhs(residual: Expression):
    """Solve a reduced-equation residual, linear in phi_ww, for phi_ww."""
    at0 = substitute(residual, {"phi_ww": 0.0})
    at1 = substitute(residual, {"phi_ww": 1.0})

    def rhs(w: float, phi: float, phi_w: float) -> float:
        bindings = {"w": w, "phi": phi, "phi_w": phi_w}
        b = float(evaluate(at0, bindings))
        a = float(evaluate(at1, bindings)) - b
        if not np.isfinite(a) or a == 0.0:
            raise NumericError(
                f"reduced equation is degenerate in phi_ww at w={w:g}")
        return -b / a

    return rhs


def integrate_reduced_ode(reduction, phi0: float, dphi0: float,
                          w_end: float, steps: int = 400):
    """March a second-order reduced equation with classical RK4.

    ``reduction`` carries the residual in (w, phi, phi_w, phi_ww); the
    residual is linear in phi_ww, so the second derivative is isolated
    numerically at each stage.  Returns (w, phi, phi_w) arrays from the
    reduction's slice start to ``w_end``.
    """
    if reduction.reduced is None:
        raise NumericError("algebraic reduction has no ODE to integrate")
    rhs = _phi_ww_rhs(reduction.reduced)
    w0 = reduction.slice_range[0]
    if steps < 1 or w_end == w0:
        raise NumericError("need w_end != slice start and steps >= 1")
    hstep = (w_end - w0) / steps
    ws = np.empty(steps + 1)
    phis = np.empty(steps + 1)
    slopes = np.empty(steps + 1)
    w, y, v = w0, float(phi0), float(dphi0)
    ws[0], phis[0], slopes[0] = w, y, v
    for k in range(1, steps + 1):
        k1y, k1v = v, rhs(w, y, v)
        k2y = v + 0.5 * hstep * k1v
        k2v = rhs(w + 0.5 * hstep, y + 0.5 * hstep * k1y, k2y)
        k3y = v + 0.5 * hstep * k2v
        k3v = rhs(w + 0.5 * hstep, y + 0.5 * hstep * k2y, k3y)
        k4y = v + hstep * k3v
        k4v = rhs(w + hstep, y + hstep * k3y, k4y)
        y = y + hstep / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        v = v + hstep / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        w = w0 + k * hstep
        if not (np.isfinite(y) and np.isfinite(v)):
            raise NumericError(f"reduced-ODE integration blew up at w={w:g}")
        ws[k], phis[k], slopes[k] = w, y, v
    return ws, phis, slopes


def shoot_reduced_ode(reduction, phi0: float, w_end: float, phi_end: float,
                      slope_bracket: tuple, steps: int = 400,
                      tol: float = 1e-10, max_iter: int = 200) -> float:
    """Initial slope hitting phi(w_end) = phi_end, by bisection shooting.

    ``slope_bracket`` must straddle the target (the endpoint misses at the
    two bracket slopes have opposite signs).
    """
    lo, hi = float(slope_bracket[0]), float(slope_bracket[1])

    def miss(slope: float) -> float:
        _, phis, _ = integrate_reduced_ode(reduction, phi0, slope, w_end,
                                           steps)
        return phis[-1] - phi_end

    f_lo, f_hi = miss(lo), miss(hi)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise NumericError("slope bracket does not straddle the target")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = miss(mid)
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# symbolic residual of candidate solutions


def pde_residual_expression(eq: FinEquation, u_expr: Expression) -> Expression:
    """u_t - (D(u) u_x)_x - h u with u replaced by the candidate."""
    u_t = differentiate(u_expr, "t")
    u_x = differentiate(u_expr, "x")
    d_of_u = substitute(eq.d_expr(), {"u": u_expr})
    flux_x = differentiate(mul(d_of_u, u_x), "x")
    return sub(sub(u_t, flux_x), mul(eq.h_expr(), u_expr))


def pde_residual_grid(eq: FinEquation, s: Solution, region, samples: int = 100,
                      seed: int = 42) -> float:
    """Max relative residual of a solution over a sampled (t, x) box."""
    if s.parameters:
        raise ModelError(
            f"solution has unbound parameters: {list(s.parameters)}")
    (t0, t1), (x0, x1) = region
    resid = pde_residual_expression(eq, s.expr)
    u_t = differentiate(s.expr, "t")
    hu = mul(eq.h_expr(), s.expr)
    rng = np.random.default_rng(seed)
    worst = 0.0
    found = 0
    for _ in range(8):
        ts = rng.uniform(t0, t1, size=samples)
        xs = rng.uniform(x0, x1, size=samples)
        r = _eval_on(resid, t=ts, x=xs)
        scale = 1.0 + np.abs(_eval_on(u_t, t=ts, x=xs)) \
            + np.abs(_eval_on(hu, t=ts, x=xs))
        finite = np.isfinite(r) & np.isfinite(scale)
        if not finite.any():
            continue
        worst = max(worst, float(np.max(np.abs(r[finite]) / scale[finite])))
        found += int(finite.sum())
        if found >= samples:
            return worst
    if found == 0:
        raise NumericError("all residual samples were non-finite")
    return worst
