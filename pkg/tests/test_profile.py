import json
import math
import random
from fractions import Fraction
from pathlib import Path

import pytest

from toda_brane.branes import Brane, BraneModel, FactorSpace, FormField, compute_brane_constants, load_model
from toda_brane.profile import (
    NonPositiveModulus,
    build_profile,
    cylindrical_specialization,
    evaluate_profile,
    find_breakdown,
    form_factor_series,
)
from toda_brane.toda import QuasiCartanMatrix, build_rhs_series, cartan_matrix, solve_coefficients

F4 = FormField("F4", 4, 1)


def single_m2(w=1, topology="circle"):
    spaces = (FactorSpace(1, 1, topology), FactorSpace(3, 1), FactorSpace(6, 1 if w == -1 else -1))
    return BraneModel(spaces, (F4,), eps_g=-1, w=w, branes=(Brane("F4", "electric", (2,), Fraction(1)),))


def exps(pairs):
    return dict(pairs)


def test_single_m2_exponents():
    model = single_m2()
    profile = build_profile(model, compute_brane_constants(model))
    assert exps(profile.radial) == {0: Fraction(1, 3)}
    assert exps(profile.spaces[1]) == {0: Fraction(-2, 3)}  # worldvolume
    assert exps(profile.spaces[2]) == {0: Fraction(1, 3)}  # transverse
    assert exps(profile.spaces[0]) == {0: Fraction(-2, 3)}  # M_1 carries -2h always


def test_no_branes_gives_flat_profile():
    model = BraneModel((FactorSpace(1), FactorSpace(4, -1)), (F4,), eps_g=-1, w=1)
    profile = build_profile(model, None)
    assert profile.radial == () and all(ex == () for ex in profile.spaces)
    pt = evaluate_profile(profile, None, Fraction(3, 2))
    assert pt.radial == 1.0
    assert pt.coefficients == (2.25, 1.0)


def test_magnetic_form_uses_complement():
    spaces = (FactorSpace(1), FactorSpace(3), FactorSpace(3), FactorSpace(3, -1))
    model = BraneModel(spaces, (F4,), eps_g=-1, w=1, branes=(Brane("F4", "magnetic", (2, 3), Fraction(1)),))
    profile = build_profile(model, compute_brane_constants(model))
    assert profile.forms[0].wedge == (1, 4)
    assert profile.forms[0].h_exponents == ()


def test_scalar_exponents():
    model = single_m2().replace(h=((Fraction(2),),), couplings={"F4": (Fraction(1, 2),)})
    c = compute_brane_constants(model)
    profile = build_profile(model, c)
    # h_s chi_s lambda^a with lambda^a = h^{ab} lambda_b = 1/4
    assert exps(profile.scalars[0]) == {0: c.h[0] * Fraction(1, 4)}


def test_determinant_exponent_against_coordinate_oracle():
    # brute force: write every coordinate's metric factor straight from the
    # defining formula and add up the H_s exponents of the determinant
    rng = random.Random(7)
    for _ in range(10):
        dims = [1] + [rng.randint(1, 3) for _ in range(4)]
        n = len(dims)
        D = 1 + sum(dims)
        branes = []
        for _ in range(2):
            I = tuple(sorted(rng.sample(range(2, n + 1), 2)))
            branes.append(Brane("F", "electric", I, Fraction(1)))
        d_I = [sum(dims[i - 1] for i in b.I) for b in branes]
        forms = (FormField("F", 2, 1),)
        model = BraneModel(tuple(FactorSpace(d) for d in dims), forms, eps_g=1, w=1, branes=tuple(branes))
        h = [Fraction(rng.randint(1, 5), rng.randint(1, 5)) for _ in branes]
        fake = type("C", (), {"h": h, "A": QuasiCartanMatrix([[2, 0], [0, 2]])})()
        profile = build_profile(model, fake)
        for s, b in enumerate(branes):
            conformal = 2 * h[s] * d_I[s] / (D - 2)
            oracle = conformal  # radial coordinate
            for i in range(1, n + 1):
                for _ in range(dims[i - 1]):
                    extra = -2 * h[s] if (i == 1 or i in b.I) else 0
                    oracle += conformal + extra
            got = exps(profile.radial).get(s, 0) + sum(
                dims[i] * exps(profile.spaces[i]).get(s, 0) for i in range(n)
            )
            assert got == oracle


def test_evaluate_at_origin_is_unit():
    model = single_m2()
    c = compute_brane_constants(model)
    profile = build_profile(model, c)
    sol = solve_coefficients(c.A, 2, "numeric", list(c.P))
    pt = evaluate_profile(profile, sol, 0)
    assert pt.H == (1.0,)
    assert all(f == 1.0 for f in pt.h_factors)
    assert pt.coefficients[0] == 0.0
    assert pt.coefficients[1:] == (1.0, 1.0)
    assert pt.radial == model.w


def test_evaluate_a2_at_rho_one():
    A = cartan_matrix("A2")
    sol = solve_coefficients(A, 2, "numeric", [1, 1])
    spaces = (FactorSpace(1), FactorSpace(2), FactorSpace(2), FactorSpace(2))
    F = FormField("F", 3, 1)
    model = BraneModel(spaces, (F,), eps_g=1, w=1,
                       branes=(Brane("F", "electric", (2,), Fraction(1)), Brane("F", "electric", (3,), Fraction(1))))
    h = [Fraction(1, 2), Fraction(1, 2)]
    fake = type("C", (), {"h": h, "A": A})()
    profile = build_profile(model, fake)
    pt = evaluate_profile(profile, sol, 1)
    assert pt.H == (2.25, 2.25)
    # radial factor: H1^(2*1/2*2/6) H2^(same) = 2.25^(2/3)
    assert math.isclose(pt.radial, 2.25 ** (2 / 3), rel_tol=1e-14)
    assert math.isclose(pt.coefficients[1], 2.25 ** (2 / 3 - 1), rel_tol=1e-14)


def test_non_positive_modulus():
    A = QuasiCartanMatrix([[2]])
    sol = solve_coefficients(A, 2, "numeric", [-1])
    model = single_m2(w=-1)
    profile = build_profile(model, compute_brane_constants(model))
    with pytest.raises(NonPositiveModulus):
        evaluate_profile(profile, sol, 1)


def test_breakdown_found_by_bisection():
    sol = solve_coefficients(QuasiCartanMatrix([[2]]), 3, "numeric", [-1])
    assert sol.coefficients(0) == [1, -1, 0, 0]
    b = find_breakdown(sol, 3, steps=7)
    assert abs(b.z - 1.0) < 1e-6
    assert b.brane == 0
    assert find_breakdown(solve_coefficients(QuasiCartanMatrix([[2]]), 2, "numeric", [1]), 5) is None


def test_continuity_near_origin():
    model = single_m2()
    c = compute_brane_constants(model)
    profile = build_profile(model, c)
    sol = solve_coefficients(c.A, 2, "numeric", list(c.P))
    at0 = evaluate_profile(profile, sol, 0)
    rho = 1e-6
    near = evaluate_profile(profile, sol, rho)
    for a, b in zip(at0.h_factors, near.h_factors):
        assert abs(a - b) < 10 * rho**2


@pytest.mark.parametrize(
    "model, label",
    [(single_m2(), "fluxbrane"), (single_m2(w=-1), "s-brane"), (single_m2(topology="line"), "flux-type")],
)
def test_classification(model, label):
    profile = build_profile(model, compute_brane_constants(model))
    assert cylindrical_specialization(profile).label == label


def test_electric_form_factor_shares_rhs_series():
    model = m2_m2_model()
    c = compute_brane_constants(model)
    profile = build_profile(model, c)
    sol = solve_coefficients(c.A, 5)
    for s in range(2):
        got = form_factor_series(profile, sol, s)
        assert got == build_rhs_series(c.A, sol.series, s) * (-model.branes[s].Q)


def m2_m2_model():
    return load_model(Path(__file__).parent.parent / "models" / "m2_m2_d11.json")


def test_profile_json_is_exact_strings():
    model = m2_m2_model()
    profile = build_profile(model, compute_brane_constants(model))
    data = json.loads(json.dumps(profile.to_json()))
    assert data["classification"] == "fluxbrane"
    assert data["spaces"][1]["H_exponents"] == [[1, "-2/3"], [2, "-2/3"]]
    assert data["forms"][0]["expression"].startswith("-2 ")
