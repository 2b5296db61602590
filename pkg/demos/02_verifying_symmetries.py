"""Verifying candidate symmetries, classical and conditional.

The invariance criterion acts on jet space (t, x, u, u_x, u_xx) after the
time derivative has been eliminated through the equation.  A field either
annihilates the residual everywhere (symmetry) or fails loudly at sampled
jet points.
"""
from finsym import (
    FinEquation, PowerU, PowerX, VectorField, conditional_residual,
    nonclassical_equation, parse, prolonged_residual,
)

# The scaling equation u_t = (u^2 u_x)_x + x^3 u carries the generator
# -6t d_t + 2x d_x + 5u d_u.
eq = FinEquation(PowerU(2), PowerX(3, 1))
good = VectorField.parse_triple("-6*t; 2*x; 5*u")
bad = VectorField.parse_triple("0; 0; u")

print(eq)
for field in (good, bad):
    residual = prolonged_residual(eq, field)
    print(f"  {field}: max residual {residual.max_relative():.3e}")

# Conditional (nonclassical) invariance: u_t = (u^-1 u_x)_x + x u admits
# two operators that are not Lie symmetries; both leave the equation
# invariant only jointly with their own invariant-surface condition.
eqn = nonclassical_equation()
print(f"\n{eqn}")
for triple in ("0; 1; t*u", "1; 0; x*u"):
    field = VectorField.parse_triple(triple)
    residual = conditional_residual(eqn, field)
    print(f"  conditional {field}: max residual "
          f"{residual.max_relative():.3e}")

# A plain x-translation is not even conditionally admitted here, since h
# depends on x.
residual = conditional_residual(eqn, VectorField.parse_triple("0; 1; 0"))
print(f"  conditional d_x: max residual {residual.max_relative():.3e} "
      "(rejected)")

# The associated invariant solution: u = C e^(t x).
from finsym import exact_solution, pde_residual_grid

solution = exact_solution("nonclassical", {"C": 2})
worst = pde_residual_grid(eqn, solution, ((0, 1), (0.5, 1.5)))
print(f"\nu = 2 exp(t x) solves it: max residual {worst:.3e}")
