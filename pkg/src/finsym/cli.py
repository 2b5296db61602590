"""Command line front end.

Subcommands: classify, symmetries, verify-symmetry, transform, reduce,
exact, conserve, simulate, residual.  Equations come from JSON files with
"D" and "h" specs; machine output via --json.  Exit codes: 0 success,
1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .classify import classify
from .conservation import conservation_laws, divergence_residual
from .equivalence import (
    ADDITIONAL_MAP_LABELS, OutsideClassReport, apply_to_equation,
    map_by_label,
)
from .expressions import ExpressionError, parse
from .model import (
    ModelError, Solution, VectorField, equation_to_json, load_equation_file,
)
from .numeric import (
    DirichletBC, Grid, NoFluxBC, NumericError, pde_residual_grid, solve_pde,
)
from .reductions import (
    RealityError, build_reduction, exact_solution, nonclassical_equation,
)
from .model import equations_equal
from .symmetry import symmetry_residual

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2


class VerificationFailure(Exception):
    pass


def _default_seed() -> int:
    env = os.environ.get("FINSYM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ModelError(f"FINSYM_SEED must be an integer, got {env!r}")
    return 42


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="finsym",
        description="classification, symmetries, transformations, "
                    "reductions and conservation laws for equations "
                    "u_t = (D(u) u_x)_x + h(x) u")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--eq", required=True, help="equation JSON file")
        p.add_argument("--json", action="store_true", dest="as_json",
                       help="machine-readable output")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=1e-9)
        return p

    common(sub.add_parser("classify", help="table case and symmetry basis"))
    common(sub.add_parser("symmetries", help="symmetry basis only"))

    p = common(sub.add_parser("verify-symmetry",
                              help="check a candidate generator"))
    p.add_argument("--field", required=True,
                   help="three ';'-separated coefficients: tau;xi;eta")

    p = common(sub.add_parser("transform", help="apply a named map"))
    p.add_argument("--map", required=True, dest="map_label",
                   choices=sorted(ADDITIONAL_MAP_LABELS))

    p = common(sub.add_parser("reduce", help="similarity reduction"))
    p.add_argument("--case", type=int, default=None)
    p.add_argument("--sub", required=True, choices=["0", "1", "2"])

    common(sub.add_parser("exact", help="closed-form solution + residual"))

    common(sub.add_parser("conserve",
                          help="conservation laws + divergence check"))

    p = common(sub.add_parser("simulate", help="finite-difference run, CSV"))
    p.add_argument("--initial", required=True, help="u(x) at t=0")
    p.add_argument("--left", help="left Dirichlet value as expression in t")
    p.add_argument("--right", help="right Dirichlet value as expression in t")
    p.add_argument("--noflux", action="store_true")
    p.add_argument("--xa", type=float, required=True)
    p.add_argument("--xb", type=float, required=True)
    p.add_argument("--m", type=int, default=81)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--method", choices=["explicit", "implicit"],
                   default="explicit")

    p = common(sub.add_parser("residual",
                              help="max PDE residual of a candidate u(t,x)"))
    p.add_argument("--solution", required=True)
    p.add_argument("--t-range", default="0.1,1")
    p.add_argument("--x-range", default="0.5,2")
    p.add_argument("--samples", type=int, default=100)
    return top


def _emit(doc: dict, as_json: bool):
    if as_json:
        print(json.dumps(doc))
        return
    for key, value in doc.items():
        print(f"{key}: {json.dumps(value) if isinstance(value, (dict, list)) else value}")


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ModelError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _cmd_classify(args, basis_only: bool) -> int:
    eq, _ = load_equation_file(args.eq)
    result = classify(eq, seed=args.seed)
    doc = result.to_json()
    if basis_only:
        doc = {"basis": doc["basis"]}
    _emit(doc, args.as_json)
    return EXIT_OK


def _cmd_verify_symmetry(args) -> int:
    eq, _ = load_equation_file(args.eq)
    field = VectorField.parse_triple(args.field)
    residual = symmetry_residual(eq, field, seed=args.seed)
    passed = residual <= args.tol
    _emit({"passed": passed, "max_residual": residual}, args.as_json)
    return EXIT_OK if passed else EXIT_VERIFICATION


def _cmd_transform(args) -> int:
    eq, params = load_equation_file(args.eq)
    source = classify(eq, seed=args.seed)
    merged = {**source.params, **params}
    transformation, target = map_by_label(args.map_label, merged)
    image = apply_to_equation(transformation, eq)
    if isinstance(image, OutsideClassReport):
        _emit({"map": args.map_label, "outside_class": True,
               "target": image.target, "note": image.note}, args.as_json)
        return EXIT_OK
    result = classify(image, seed=args.seed)
    doc = {
        "map": args.map_label,
        "transformed": equation_to_json(image),
        "target_case": target[0],
        "target_params": {k: v for k, v in target[1].items()},
        "classified_case": result.case,
    }
    _emit(doc, args.as_json)
    return EXIT_OK if result.case == target[0] else EXIT_VERIFICATION


def _cmd_reduce(args) -> int:
    eq, params = load_equation_file(args.eq)
    result = classify(eq, seed=args.seed)
    case = args.case if args.case is not None else result.case
    if case != result.case:
        raise ModelError(
            f"--case {case} does not match the equation (case {result.case})")
    if case not in (4, 5, 6):
        raise ModelError(f"no reduction catalog for case {case}")
    reduction = build_reduction(case, args.sub, {**result.params, **params})
    _emit(reduction.to_json(), args.as_json)
    return EXIT_OK


def _cmd_exact(args) -> int:
    eq, params = load_equation_file(args.eq)
    if equations_equal(eq, nonclassical_equation(), tol=1e-9):
        solution = exact_solution("nonclassical",
                                  {"C": params.get("C", 1.0)})
        case_label = "nonclassical"
    else:
        result = classify(eq, seed=args.seed)
        if result.case not in (4, 5, 6):
            raise ModelError(
                f"no exact solution catalog for case {result.case}")
        solution = exact_solution(result.case, {**result.params, **params})
        case_label = result.case
    from .model import H1
    t_hi = 1.0
    x_lo, x_hi = 0.5, 2.0
    if case_label == 6 and isinstance(eq.h, H1) and eq.h.p == -1:
        x_lo, x_hi = 1.3, 3.0
    residual = pde_residual_grid(eq, solution, ((0.0, t_hi), (x_lo, x_hi)),
                                 samples=100, seed=args.seed)
    doc = {"case": case_label, "solution": str(solution.expr),
           "domain": solution.domain, "max_residual": residual}
    _emit(doc, args.as_json)
    return EXIT_OK if residual <= max(args.tol, 1e-10) else EXIT_VERIFICATION


def _cmd_conserve(args) -> int:
    eq, _ = load_equation_file(args.eq)
    laws = conservation_laws(eq)
    entries = []
    all_passed = True
    for law in laws:
        _, passed = divergence_residual(law, eq, seed=args.seed,
                                        tol=args.tol)
        all_passed = all_passed and passed
        entries.append({**law.to_json(), "divergence_ok": passed})
    _emit({"count": len(entries), "laws": entries}, args.as_json)
    return EXIT_OK if all_passed else EXIT_VERIFICATION


def _cmd_simulate(args) -> int:
    eq, _ = load_equation_file(args.eq)
    if args.noflux:
        bc = NoFluxBC()
    else:
        if not (args.left and args.right):
            raise ModelError(
                "simulate requires --left and --right, or --noflux")
        bc = DirichletBC(parse(args.left), parse(args.right))
    grid = Grid(args.xa, args.xb, args.m, args.t_final, args.dt)
    field = solve_pde(eq, parse(args.initial), bc, grid, method=args.method)
    sys.stdout.write(field.to_csv())
    return EXIT_OK


def _cmd_residual(args) -> int:
    eq, _ = load_equation_file(args.eq)
    solution = Solution(parse(args.solution))
    region = (_pair(args.t_range), _pair(args.x_range))
    residual = pde_residual_grid(eq, solution, region,
                                 samples=args.samples, seed=args.seed)
    _emit({"max_residual": residual}, args.as_json)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "seed", None) is None:
        try:
            args.seed = _default_seed()
        except ModelError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        if args.command == "classify":
            return _cmd_classify(args, basis_only=False)
        if args.command == "symmetries":
            return _cmd_classify(args, basis_only=True)
        if args.command == "verify-symmetry":
            return _cmd_verify_symmetry(args)
        if args.command == "transform":
            return _cmd_transform(args)
        if args.command == "reduce":
            return _cmd_reduce(args)
        if args.command == "exact":
            return _cmd_exact(args)
        if args.command == "conserve":
            return _cmd_conserve(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "residual":
            return _cmd_residual(args)
        print(f"error: unknown command {args.command!r}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, ExpressionError, RealityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
