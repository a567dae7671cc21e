"""Command-line interface: ``toda-brane {solve,build,verify,profile}``.

Exit codes: 0 success, 1 bad input, 2 computation error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import branes as bc
from .numeric import DEFAULT_ATOL, DEFAULT_RTOL, PositivityLoss, StepFailure, cross_validate
from .poly import format_rational, parse_rational
from .profile import NonPositiveModulus, build_profile, cylindrical_specialization, evaluate_profile, find_breakdown
from .toda import (
    NUMERIC,
    SYMBOLIC,
    QuasiCartanMatrix,
    SingularMatrix,
    cartan_matrix,
    residual_check,
    solve_coefficients,
    undefined_report,
    verify_conjecture,
    weyl_degrees,
)

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_ORDER = 8


class InputError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--order", type=int, help="truncation order of the series")
    p.add_argument("--margin", type=int, default=4, help="extra orders checked beyond the predicted degree")
    p.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    p.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    return p


def _matrix_source(p: argparse.ArgumentParser, required: bool = True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--algebra", help="A1, A1+A1, A2, B2, C2 or G2")
    g.add_argument("--matrix", help="quasi-Cartan matrix as JSON, e.g. '[[2,-1],[-1,2]]'")
    g.add_argument("--model", help="brane model JSON file")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="toda-brane", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="series/polynomial moduli functions")
    _matrix_source(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--symbolic", action="store_const", const=SYMBOLIC, dest="mode")
    mode.add_argument("--numeric", action="store_const", const=NUMERIC, dest="mode")
    p.add_argument("--values", help="JSON list of P_s values for numeric mode")

    p = sub.add_parser("build", parents=[common], help="constants, quasi-Cartan matrix and profile of a model")
    p.add_argument("model", help="brane model JSON file")
    p.add_argument("--target", help="algebra name or matrix whose intersection rules to solve for")

    p = sub.add_parser("verify", parents=[common], help="check the polynomial conjecture, residual and ODE")
    _matrix_source(p)
    p.add_argument("--values", help="JSON list of P_s values for the ODE check (default: all 1)")
    p.add_argument("--max-dev", type=float, default=1e-8, help="max relative ODE/series deviation")
    p.add_argument("--z0", type=float, default=1e-6)

    p = sub.add_parser("profile", parents=[common], help="evaluate the metric profile over a rho grid")
    p.add_argument("model", help="brane model JSON file")
    p.add_argument("--rho-min", default="0")
    p.add_argument("--rho-max", default="1")
    p.add_argument("--steps", type=int, default=10)
    return parser


def _parse_matrix(text: str) -> QuasiCartanMatrix:
    try:
        rows = json.loads(text)
        return QuasiCartanMatrix([[parse_rational(x) if isinstance(x, str) else _exact(x) for x in r] for r in rows])
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad --matrix: {exc}") from None


def _exact(x):
    if isinstance(x, float):
        if not x.is_integer():
            raise ValueError(f"use 'num/den' strings for non-integer entries, got {x}")
        return int(x)
    return x


def _parse_values(text: str | None, m: int):
    if text is None:
        return None
    try:
        vals = json.loads(text)
        out = [parse_rational(v) if isinstance(v, str) else Fraction(_exact(v)) for v in vals]
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad --values: {exc}") from None
    if len(out) != m:
        raise InputError(f"--values needs {m} entries")
    return out


def _load_model(path):
    try:
        return bc.load_model(path)
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    except bc.ModelError as exc:
        raise InputError(str(exc)) from None


def _resolve(args):
    """Return (matrix, model-or-None, constants-or-None)."""
    if args.algebra:
        try:
            return cartan_matrix(args.algebra), None, None
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    if args.matrix:
        return _parse_matrix(args.matrix), None, None
    model = _load_model(args.model)
    if not model.branes:
        raise InputError("model has no branes")
    try:
        constants = bc.compute_brane_constants(model)
    except (bc.ZeroDiagonal, bc.SingularScalarMetric) as exc:
        raise InputError(str(exc)) from None
    return constants.A, model, constants


def _default_order(A: QuasiCartanMatrix, margin: int) -> int:
    try:
        degrees = weyl_degrees(A)
    except SingularMatrix:
        return DEFAULT_ORDER
    if all(d.denominator == 1 and d > 0 for d in degrees):
        return int(max(degrees)) + margin
    return DEFAULT_ORDER


def _emit(args, payload=None, rows=None, header=None):
    if args.format == "csv":
        if rows is None:
            raise InputError(f"--format csv is not supported by '{args.command}'")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_solve(args) -> int:
    A, model, constants = _resolve(args)
    order = args.order if args.order is not None else _default_order(A, args.margin)
    if order < 1:
        raise InputError("--order must be at least 1")
    mode = args.mode or (NUMERIC if constants is not None or args.values else SYMBOLIC)
    values = None
    if mode == NUMERIC:
        values = _parse_values(args.values, A.size)
        if values is None:
            if constants is None:
                raise InputError("numeric mode needs --values (or a --model)")
            values = list(constants.P)
    sol = solve_coefficients(A, order, mode, values)
    rows = []
    for s in range(sol.size):
        for k, c in enumerate(sol.coefficients(s)):
            rows.append([s + 1, k, format_rational(c) if mode == NUMERIC else str(c)])
    _emit(args, sol.to_json(), rows, ["brane", "power", "coefficient"])
    return EXIT_OK


def run_build(args) -> int:
    model = _load_model(args.model)
    report = bc.validate_model(model)
    payload = {
        "model": {"D": model.D, "n": model.n, "w": model.w, "branes": len(model.branes)},
        "validation": report.to_json(),
        "warnings": [f"{c.name}: {c.detail}" for c in report.failures()],
    }
    try:
        constants = bc.compute_brane_constants(model)
    except (bc.ZeroDiagonal, bc.SingularScalarMetric, bc.ModelError) as exc:
        payload["error"] = str(exc)
        _emit(args, payload)
        return EXIT_INPUT
    payload["constants"] = constants.to_json()
    payload["quasi_cartan"] = constants.A.to_json()
    payload["label"] = constants.A.label()
    profile = build_profile(model, constants)
    payload["profile"] = profile.to_json()
    if args.target:
        target = _parse_matrix(args.target) if args.target.lstrip().startswith("[") else cartan_matrix(args.target)
        try:
            payload["intersections"] = bc.solve_intersection_dims(model, target).to_json()
        except (bc.NoIntegerSolution, bc.Inconsistent, bc.ZeroDiagonal, ValueError) as exc:
            payload["intersections"] = {"error": f"{type(exc).__name__}: {exc}"}
    _emit(args, payload)
    return EXIT_OK


def run_verify(args) -> int:
    A, model, constants = _resolve(args)
    payload: dict = {"matrix": A.to_json(), "label": A.label()}
    try:
        report = verify_conjecture(A, args.margin)
    except SingularMatrix:
        report = undefined_report(A, args.margin)
    payload["conjecture"] = report.to_json()
    ok = report.confirmed

    sol = report.solution
    if sol is None:
        sol = solve_coefficients(A, args.order or DEFAULT_ORDER, SYMBOLIC)
    res = residual_check(A, sol)
    first = [r.first_nonzero() for r in res]
    residual_zero = all(f is None for f in first)
    payload["residual"] = {
        "path": "polynomial" if A.has_polynomial_coupling() else "series",
        "zero": residual_zero,
        "first_nonzero": first,
    }
    ok = ok and residual_zero

    if report.confirmed:
        values = _parse_values(args.values, A.size)
        if values is None:
            values = list(constants.P) if constants is not None else [Fraction(1)] * A.size
        try:
            cv = cross_validate(sol, values, rtol=args.rtol, atol=args.atol, tolerance=args.max_dev, z0=args.z0)
            payload["cross_validation"] = cv.to_json()
            ok = ok and cv.passed
        except (PositivityLoss, StepFailure) as exc:
            payload["cross_validation"] = {"error": f"{type(exc).__name__}: {exc}", "pass": False}
            ok = False
    else:
        payload["cross_validation"] = {"skipped": "no polynomial solution to compare against"}
    payload["pass"] = ok
    _emit(args, payload)
    return EXIT_OK if ok else EXIT_VERIFY


def run_profile(args) -> int:
    model = _load_model(args.model)
    try:
        constants = bc.compute_brane_constants(model)
        rho_min, rho_max = parse_rational(args.rho_min), parse_rational(args.rho_max)
    except (bc.ZeroDiagonal, bc.SingularScalarMetric, ValueError) as exc:
        raise InputError(str(exc)) from None
    if args.steps < 1 or rho_min < 0 or rho_max < rho_min:
        raise InputError("need 0 <= rho-min <= rho-max and steps >= 1")
    profile = build_profile(model, constants)
    sol = None
    if model.branes:
        A = constants.A
        sol = solve_coefficients(A, args.order or _default_order(A, args.margin), NUMERIC, list(constants.P))
    points, breakdown = [], None
    for k in range(args.steps + 1):
        rho = rho_min + (rho_max - rho_min) * k / args.steps
        try:
            points.append(evaluate_profile(profile, sol, rho))
        except NonPositiveModulus:
            b = find_breakdown(sol, rho)
            breakdown = {"brane": b.brane + 1, "rho": b.rho, "z": b.z}
            break
    m, n, l = len(model.branes), model.n, model.n_scalars
    header = ["rho", "z", *[f"H{s + 1}" for s in range(m)], "g_rho", *[f"g{i + 1}" for i in range(n)],
              *[f"exp_phi{a + 1}" for a in range(l)]]
    payload = {
        "classification": cylindrical_specialization(profile).label,
        "profile": profile.to_json(),
        "points": [p.to_json() for p in points],
        "breakdown": breakdown,
    }
    _emit(args, payload, [p.csv_row() for p in points], header)
    return EXIT_OK


COMMANDS = {"solve": run_solve, "build": run_build, "verify": run_verify, "profile": run_profile}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
