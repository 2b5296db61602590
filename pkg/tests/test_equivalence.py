import numpy as np
import pytest

from finsym.equivalence import (
    ComplexFieldOnlyError, ConditionError, DeltaConstraintError,
    NoAdditionalMapError, OutsideClassReport, additional_equivalence,
    apply_to_equation, make_group_element, map_by_label, push_forward_field,
    push_forward_solution,
)
from finsym.classify import classify
from finsym.expressions import equivalent, parse
from finsym.model import (
    ConstantH, FinEquation, FreeH, H1, PowerU, PowerX,
    ReciprocalShift, ShiftedPowerU, Solution, equations_equal,
)
from finsym.numeric import pde_residual_grid
from finsym.reductions import exact_solution
from finsym.symmetry import is_lie_symmetry


def test_time_scaling_halves_both_coefficients():
    T = make_group_element("Gsim", (2, 0, 1, 0, 1))
    assert str(T.t_new) == "2*t"
    eq = FinEquation(PowerU(2), FreeH(parse("x^2")))
    out = apply_to_equation(T, eq)
    assert equivalent(out.d_expr(), parse("u^2/2"), seed=1)
    assert equivalent(out.h_expr(), parse("x^2/2"), seed=2)


def test_identity_element_is_identity():
    T = make_group_element("Gsim", (1, 0, 1, 0, 1))
    eq = FinEquation(PowerU(2), PowerX(3, 1))
    assert apply_to_equation(T, eq) == eq


def test_g1_inversion_element():
    T = make_group_element("G1", (1, 0, 0, 1, 1, 0), sign=1)
    assert str(T.x_new) == "1/x" or equivalent(T.x_new, parse("1/x"), seed=3)
    assert equivalent(T.u_new, parse("x^3*u"), seed=4)


def test_delta_constraints():
    with pytest.raises(DeltaConstraintError):
        make_group_element("Gsim", (0, 0, 1, 0, 1))
    with pytest.raises(DeltaConstraintError):
        make_group_element("G1", (-1, 0, 0, 1, 1, 0))
    with pytest.raises(DeltaConstraintError):
        make_group_element("G1", (1, 0, 2, 0, 0, 1))  # det = 2
    with pytest.raises(DeltaConstraintError):
        make_group_element("G2", (1, 0, 1, 0, 0, 1))


def test_condition_tags_enforced():
    T1 = make_group_element("G1", (1, 0, 0, 1, 1, 0))
    with pytest.raises(ConditionError):
        apply_to_equation(T1, FinEquation(PowerU(2), H1(0, 1, 1)))
    T2 = make_group_element("G2", (1, 0, 1, 0, 1, 1))
    with pytest.raises(ConditionError):
        apply_to_equation(T2, FinEquation(PowerU(2), ConstantH(1)))
    with pytest.raises(ConditionError):
        make_group_element("G3", (1, 0, 1, 0, 1),
                           eq=FinEquation(PowerU(2), PowerX(1, 1)))
    with pytest.raises(DeltaConstraintError):
        make_group_element("G3", (1, 0, 1, 0, 1))


def test_round_trip_identity_on_equations():
    rng = np.random.default_rng(3)
    eq = FinEquation(PowerU(2), PowerX(3, 1))
    for _ in range(10):
        deltas = (rng.uniform(0.3, 2), rng.uniform(-1, 1),
                  rng.uniform(0.3, 2), rng.uniform(-1, 1),
                  rng.uniform(0.3, 2))
        T = make_group_element("Gsim", deltas)
        back = apply_to_equation(T.inverse(), apply_to_equation(T, eq))
        assert equations_equal(eq, back, tol=1e-12)


def test_gsim_group_law_on_coefficient_maps():
    a = make_group_element("Gsim", (2, 1, 0.5, -1, 3))
    b = make_group_element("Gsim", (0.25, 0, 2, 0.5, 0.5))
    composed = make_group_element(
        "Gsim",
        (2 * 0.25, 0.25 * 1 + 0, 0.5 * 2, 2 * (-1) + 0.5, 3 * 0.5))
    eq = FinEquation(PowerU(2), FreeH(parse("x^2+x")))
    two_step = apply_to_equation(b, apply_to_equation(a, eq))
    one_step = apply_to_equation(composed, eq)
    assert equations_equal(two_step, one_step, tol=1e-9)


MAP_CASES = [
    ("6p0-to-5", FinEquation(PowerU(-4 / 3), H1(0, 2, 1)),
     {"p": 0, "q": 2.0, "eps": 1}, 5, {"n": -4 / 3, "eps": 1}),
    ("6pm1-to-4", FinEquation(PowerU(-4 / 3), H1(-1, 4, 1)),
     {"p": -1, "q": 4.0, "eps": 1}, 4, {"n": -4 / 3, "q": 2.0, "eps": 1}),
    ("11a-to-11", FinEquation(ShiftedPowerU(2, 1), ConstantH(0)),
     {"n": 2.0, "alpha": 1.0}, 11, {"n": 2.0, "alpha": 0.0}),
    ("13a-to-13", FinEquation(ShiftedPowerU(-4 / 3, 1), ConstantH(0)),
     {"alpha": 1.0}, 13, {"alpha": 0.0}),
    ("10-to-11", FinEquation(PowerU(2), ConstantH(1)),
     {"n": 2.0, "eps": 1}, 11, {"n": 2.0, "alpha": 0.0}),
    ("12-to-13", FinEquation(PowerU(-4 / 3), ConstantH(1)),
     {"eps": 1}, 13, {"alpha": 0.0}),
]


@pytest.mark.parametrize("label,src,params,want_case,want_params", MAP_CASES,
                         ids=[c[0] for c in MAP_CASES])
def test_named_maps_reach_declared_targets(label, src, params, want_case,
                                           want_params):
    T, target = map_by_label(label, params)
    assert target[0] == want_case
    image = apply_to_equation(T, src)
    result = classify(image)
    assert result.case == want_case
    for key, want in want_params.items():
        assert result.params[key] == pytest.approx(want, abs=1e-9)


def test_case8_map_reports_outside_class():
    T, target = map_by_label("case8-out", {"eps": 1})
    assert target is None
    report = apply_to_equation(T, FinEquation(ReciprocalShift(), ConstantH(1)))
    assert isinstance(report, OutsideClassReport)
    assert "u^-1" in report.target
    with pytest.raises(ConditionError):
        apply_to_equation(T, FinEquation(PowerU(2), ConstantH(1)))


def test_case6_p1_is_complex_only():
    with pytest.raises(ComplexFieldOnlyError):
        additional_equivalence(6, {"p": 1, "q": 1, "eps": 1})


def test_unknown_map_label():
    with pytest.raises(NoAdditionalMapError):
        map_by_label("nope", {})
    with pytest.raises(NoAdditionalMapError):
        additional_equivalence(7, {})


def test_ten_to_eleven_time_map_shape():
    T, _ = additional_equivalence(10, {"n": 2.0, "eps": 1})
    assert equivalent(T.t_new, parse("exp(2*t)/2"), seed=8)
    assert equivalent(T.u_new, parse("exp(-t)*u"), seed=9)


def test_push_forward_solution_identity_and_scaling():
    s = Solution(parse("x^3/15"))
    ident = make_group_element("Gsim", (1, 0, 1, 0, 1))
    assert equivalent(push_forward_solution(ident, s).expr, s.expr, seed=10)

    scale_u = make_group_element("Gsim", (1, 0, 1, 0, 2))
    pushed = push_forward_solution(scale_u, s)
    assert equivalent(pushed.expr, parse("2*x^3/15"), seed=11)
    eq = FinEquation(PowerU(1), PowerX(1, -1))
    image = apply_to_equation(scale_u, eq)
    assert pde_residual_grid(image, pushed, ((0, 1), (1, 2))) <= 1e-12


def test_push_forward_case6_solution_to_case5():
    src = FinEquation(PowerU(-4 / 3), H1(0, -1, 1))
    T, _ = additional_equivalence(6, {"p": 0, "q": -1, "eps": 1})
    sol = exact_solution(6, {"p": 0, "q": -1, "eps": 1})
    image = apply_to_equation(T, src)
    pushed = push_forward_solution(T, sol)
    assert pde_residual_grid(image, pushed, ((0, 1), (0.5, 2))) <= 1e-10
    closed = exact_solution(5, {"n": -4 / 3, "eps": 1})
    assert equivalent(pushed.expr, closed.expr, seed=12, tol=1e-9)


def test_symmetry_transport_through_named_maps():
    for label, src, params, _, _ in MAP_CASES:
        T, _ = map_by_label(label, params)
        image = apply_to_equation(T, src)
        ranges = None
        if label == "12-to-13":
            ranges = {"t": (-0.9, -0.2)}
        if label == "6pm1-to-4":
            ranges = {"x": (0.2, 0.45)}  # image of x > 1 under (x-1)/(x+1)
        for field in classify(src).basis:
            pushed = push_forward_field(T, field)
            assert is_lie_symmetry(image, pushed, ranges=ranges), label
