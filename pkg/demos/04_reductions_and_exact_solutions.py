"""Similarity reductions, the consistency oracle, and exact solutions.

Each structured case reduces along its subalgebras: the two-dimensional
one collapses the PDE to an algebraic equation whose root gives a closed
form; the one-dimensional ones give ODEs in phi(omega).  The oracle
substitutes random positive cubics for phi and checks that the PDE
residual is a fixed multiple of the reduced-equation residual.
"""
from finsym import (
    ExpX, FinEquation, H1, PowerU, PowerX, build_reduction,
    check_order_reduction_61, exact_solution, order_reduce_61,
    pde_residual_grid, reduction_chain_solution, solve_algebraic,
    to_string, verify_reduction, equivalent,
)

# Reductions of the power-law scaling case (n = 1, q = 1, eps = 1).
eq = FinEquation(PowerU(1), PowerX(1, 1))
for sub in ("1", "2"):
    r = build_reduction(4, sub, {"n": 1, "q": 1, "eps": 1})
    report = verify_reduction(eq, r)
    print(f"{r.label}: u = {to_string(r.ansatz)}, omega = {to_string(r.omega)}")
    print(f"  reduced: {to_string(r.reduced)} = 0")
    print(f"  oracle: passed={report.passed} multiplier={report.multiplier:.4g}")

# The algebraic route: solve the 0-th reduction and compare with the
# closed form (here for the -4/3 diffusion with the integral profile).
params = {"p": 1, "q": 1, "eps": 1}
root = solve_algebraic(6, params)
chain = reduction_chain_solution(6, params)
closed = exact_solution(6, params)
print(f"\nalgebraic root C = {float(root):.15g}")
print(f"chain == closed form: {equivalent(chain, closed.expr, tol=1e-12)}")

# Exact solutions and their residuals.
checks = [
    (FinEquation(PowerU(1), PowerX(1, -1)),
     exact_solution(4, {"n": 1, "q": 1, "eps": -1}), ((0, 1), (1, 2))),
    (FinEquation(PowerU(1), ExpX(-1)),
     exact_solution(5, {"n": 1, "eps": -1}), ((0, 1), (0.5, 2))),
    (FinEquation(PowerU(-4 / 3), H1(1, 1, 1)), closed, ((0, 1), (0.5, 2))),
]
print()
for equation, solution, region in checks:
    worst = pde_residual_grid(equation, solution, region)
    print(f"u = {to_string(solution.expr)}")
    print(f"  solves {equation}  (max residual {worst:.2e})")

# The stationary reduction of the -4/3 case admits an order reduction to
# a first-order ODE in (y, psi).
red = order_reduce_61(1, 1, 1)
print(f"\nfirst-order form: {to_string(red.ode)} = 0")
report = check_order_reduction_61(1, 1, 1)
print(f"consistency with the second-order reduction: passed={report.passed}")

# Away from the closed forms, reduced equations can be integrated
# numerically: shoot for the profile connecting phi(0.5) to phi(2) of the
# stationary power-case reduction, then compare with the known slope.
from finsym import integrate_reduced_ode, shoot_reduced_ode

r41 = build_reduction(4, "1", {"n": 1, "q": 1, "eps": -1})
phi0 = 0.5 ** 6 / 225
slope = shoot_reduced_ode(r41, phi0, 2.0, 2.0 ** 6 / 225, (0.0, 0.01))
print(f"\nshooting slope for 4.1: {slope:.10f} "
      f"(closed form {6 * 0.5 ** 5 / 225:.10f})")
ws, phis, _ = integrate_reduced_ode(r41, phi0, slope, 2.0)
print(f"integrated endpoint phi(2) = {phis[-1]:.10f} "
      f"(target {2 ** 6 / 225:.10f})")
