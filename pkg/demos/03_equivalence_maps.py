"""Equivalence transformations and the named case-to-case maps.

Scalings and translations act on the whole class; a Moebius family acts
on the subclass D = u^(-4/3); u-translations act when h = 0; and an
exponential time reparameterization removes a constant h from power-law
equations.  Five named maps identify classification cases beyond the
plain group, and one map exits the class entirely.
"""
from finsym import (
    ConstantH, FinEquation, H1, PowerU, ReciprocalShift, ShiftedPowerU,
    apply_to_equation, classify, equations_equal, exact_solution,
    make_group_element, map_by_label, pde_residual_grid,
    push_forward_solution,
)

# A scaling element: doubling time halves both coefficients.
T = make_group_element("Gsim", (2, 0, 1, 0, 1))
eq = FinEquation(PowerU(2), ConstantH(1))
image = apply_to_equation(T, eq)
print(f"{eq}\n  -> {image}")

# Round trip through the inverse element restores the equation.
back = apply_to_equation(T.inverse(), image)
print(f"  round trip equal: {equations_equal(eq, back, tol=1e-12)}")

# The named maps and their targets.
jobs = [
    ("6p0-to-5", FinEquation(PowerU(-4 / 3), H1(0, 2, 1)),
     {"p": 0, "q": 2.0, "eps": 1}),
    ("6pm1-to-4", FinEquation(PowerU(-4 / 3), H1(-1, 4, 1)),
     {"p": -1, "q": 4.0, "eps": 1}),
    ("11a-to-11", FinEquation(ShiftedPowerU(2, 1), ConstantH(0)),
     {"n": 2.0, "alpha": 1.0}),
    ("13a-to-13", FinEquation(ShiftedPowerU(-4 / 3, 1), ConstantH(0)),
     {"alpha": 1.0}),
    ("10-to-11", FinEquation(PowerU(2), ConstantH(1)),
     {"n": 2.0, "eps": 1}),
    ("12-to-13", FinEquation(PowerU(-4 / 3), ConstantH(1)), {"eps": 1}),
]
print("\nnamed maps:")
for label, source, params in jobs:
    T, target = map_by_label(label, params)
    got = classify(apply_to_equation(T, source))
    print(f"  {label}: declared case {target[0]}, classified {got.case}")

# The reciprocal-shift equation with constant h maps to an equation with
# an additive source, which is not of the class form.
T8, _ = map_by_label("case8-out", {"eps": 1})
report = apply_to_equation(T8, FinEquation(ReciprocalShift(), ConstantH(1)))
print(f"\ncase8-out: image is {report.target}  ({report.note})")

# Solutions ride along: push the closed-form solution of the p = 0
# profile case through the inversion map and check it against the target.
source = FinEquation(PowerU(-4 / 3), H1(0, -1, 1))
T, _ = map_by_label("6p0-to-5", {"p": 0, "q": -1.0, "eps": 1})
solution = exact_solution(6, {"p": 0, "q": -1, "eps": 1})
image = apply_to_equation(T, source)
pushed = push_forward_solution(T, solution)
worst = pde_residual_grid(image, pushed, ((0, 1), (0.5, 2)))
print(f"\npushed solution residual on the image equation: {worst:.3e}")
