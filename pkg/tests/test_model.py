import json

import pytest

from finsym.expressions import parse
from finsym.model import (
    ConstantH, ExpU, ExpX, FinEquation, FreeD, FreeH, H1, InverseSquareX,
    LinearCaseError, PowerU, PowerX, ReciprocalShift, SchemaError,
    ShiftedPowerU, Solution, SpecKindError, VectorField, equation_from_json,
    equation_to_json, equations_equal, validate,
)


def test_validate_accepts_power_constant():
    eq = FinEquation(PowerU(2), ConstantH(1))
    assert validate(eq) is eq


def test_validate_rejects_constant_free_d():
    with pytest.raises(LinearCaseError):
        validate(FinEquation(FreeD(parse("5")), ConstantH(1)))


def test_validate_accepts_free_d_with_inverse_square():
    eq = FinEquation(FreeD(parse("u^2+1")), InverseSquareX())
    assert validate(eq) is eq


def test_validate_idempotent():
    eq = FinEquation(PowerU(-4 / 3), H1(1, 2, 1))
    assert validate(validate(eq)) is eq


def test_validate_parameter_constraints():
    with pytest.raises(LinearCaseError):
        validate(FinEquation(PowerU(0), ConstantH(1)))
    with pytest.raises(SpecKindError):
        validate(FinEquation(ShiftedPowerU(2, 0.5), ConstantH(1)))
    with pytest.raises(SpecKindError):
        validate(FinEquation(PowerU(2), H1(1, 0, 1)))
    with pytest.raises(SpecKindError):
        validate(FinEquation(PowerU(2), H1(2, 1, 1)))
    with pytest.raises(SpecKindError):
        validate(FinEquation(PowerU(2), PowerX(2, 3)))


def test_validate_checks_free_symbols():
    with pytest.raises(SpecKindError):
        validate(FinEquation(FreeD(parse("u+x")), ConstantH(1)))
    with pytest.raises(SpecKindError):
        validate(FinEquation(PowerU(1), FreeH(parse("u"))))


TABLE_INSTANCES = [
    FinEquation(FreeD(parse("u^2+1")), FreeH(parse("x^2+x"))),
    FinEquation(FreeD(parse("exp(u)+u")), ConstantH(1)),
    FinEquation(FreeD(parse("u^3+u")), InverseSquareX()),
    FinEquation(PowerU(2), PowerX(3, 1)),
    FinEquation(PowerU(1), ExpX(-1)),
    FinEquation(PowerU(-4 / 3), H1(1, 1, 1)),
    FinEquation(FreeD(parse("u+u^2")), ConstantH(0)),
    FinEquation(ReciprocalShift(), ConstantH(1)),
    FinEquation(ExpU(), ConstantH(0)),
    FinEquation(PowerU(3), ConstantH(-1)),
    FinEquation(ShiftedPowerU(2, 1), ConstantH(0)),
    FinEquation(PowerU(-4 / 3), ConstantH(1)),
    FinEquation(ShiftedPowerU(-4 / 3, 1), ConstantH(0)),
]


@pytest.mark.parametrize("eq", TABLE_INSTANCES, ids=lambda e: str(e)[:40])
def test_table_constructor_instances_validate(eq):
    assert validate(eq) is eq


def test_json_round_trip():
    eq = FinEquation(PowerU(-4 / 3), H1(1, 2, 1))
    doc = equation_to_json(eq)
    assert doc == {"D": {"family": "power_u", "n": -4 / 3},
                   "h": {"family": "h1", "p": 1, "q": 2, "eps": 1}}
    assert equation_from_json(json.loads(json.dumps(doc))) == eq


def test_json_free_spec_round_trip():
    eq = FinEquation(FreeD(parse("u^2+1")), FreeH(parse("x^2+x")))
    doc = equation_to_json(eq)
    assert doc["D"] == {"expr": "u^2+1"}
    back = equation_from_json(doc)
    assert equations_equal(eq, back, tol=1e-12)


def test_json_rejects_unknown_keys():
    with pytest.raises(SchemaError):
        equation_from_json({"D": {"family": "power_u", "n": 2},
                            "h": {"family": "constant", "c": 1},
                            "bogus": 1})
    with pytest.raises(SchemaError):
        equation_from_json({"D": {"family": "power_u", "n": 2, "junk": 0},
                            "h": {"family": "constant", "c": 1}})
    with pytest.raises(SchemaError):
        equation_from_json({"D": {"family": "power_u", "n": 2}})


def test_vector_field_triple_parsing():
    vf = VectorField.parse_triple("-6*t; 2*x; 5*u")
    assert vf.to_string() == "-6*t*d_t+2*x*d_x+5*u*d_u"
    assert VectorField.parse_triple("1;0;0").to_string() == "d_t"


def test_solution_bind():
    s = Solution(parse("C*exp(t*x)"), ("C",))
    bound = s.bind(C=2)
    assert bound.parameters == ()
    assert "C" not in bound.expr.free_symbols()
    with pytest.raises(Exception):
        s.bind(K=1)


def test_equations_equal_across_representations():
    a = FinEquation(PowerU(2), InverseSquareX())
    b = FinEquation(ShiftedPowerU(2, 0), PowerX(-2, 1))
    assert equations_equal(a, b, tol=1e-12)
    c = FinEquation(ReciprocalShift(), ConstantH(0))
    d = FinEquation(ShiftedPowerU(-1, 1), ConstantH(0))
    assert equations_equal(c, d, tol=1e-12)
    assert not equations_equal(a, c, tol=1e-9)
