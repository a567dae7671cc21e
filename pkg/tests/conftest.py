from fractions import Fraction

import pytest
from hypothesis import strategies as st

from toda_brane.poly import ParamPoly, TruncatedSeries

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    key = mark.args[0]
    ok = rep.passed
    prev = _outcomes.get(key)
    _outcomes[key] = (mark.args[1], ok if prev is None else prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_outcomes):
        text, ok = _outcomes[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {text}")


def mono(coeff, *exps):
    return ParamPoly.monomial(Fraction(coeff), exps)


# coefficients quoted from the published rank-2 solutions, P_s^(1..n_s)
GOLDEN = {
    "A1+A1": (
        [mono(1, 1, 0)],
        [mono(1, 0, 1)],
    ),
    "A2": (
        [mono(1, 1, 0), mono(Fraction(1, 4), 1, 1)],
        [mono(1, 0, 1), mono(Fraction(1, 4), 1, 1)],
    ),
    "C2": (
        [mono(1, 1, 0), mono(Fraction(1, 4), 1, 1), mono(Fraction(1, 36), 2, 1)],
        [mono(1, 0, 1), mono(Fraction(1, 2), 1, 1), mono(Fraction(1, 9), 2, 1), mono(Fraction(1, 144), 2, 2)],
    ),
    "G2": (
        [
            mono(1, 1, 0),
            mono(Fraction(1, 4), 1, 1),
            mono(Fraction(1, 18), 2, 1),
            mono(Fraction(1, 144), 3, 1),
            mono(Fraction(1, 3600), 3, 2),
            mono(Fraction(1, 129600), 4, 2),
        ],
        [
            mono(1, 0, 1),
            mono(Fraction(3, 4), 1, 1),
            mono(Fraction(1, 3), 2, 1),
            # (1/16) P1^2 P2 (P2/3 + P1)
            mono(Fraction(1, 48), 2, 2) + mono(Fraction(1, 16), 3, 1),
            mono(Fraction(7, 600), 3, 2),
            # (1/64) P1^3 P2^2 (P2/25 + P1/27)
            mono(Fraction(1, 1600), 3, 3) + mono(Fraction(1, 1728), 4, 2),
            mono(Fraction(1, 10800), 4, 3),
            mono(Fraction(1, 172800), 5, 3),
            mono(Fraction(1, 4665600), 6, 3),
            mono(Fraction(1, 466560000), 6, 4),
        ],
    ),
}


def golden_series(name):
    return [TruncatedSeries([ParamPoly.one(2), *coeffs], 2) for coeffs in GOLDEN[name]]


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)
nonzero_rationals = rationals.filter(lambda q: q != 0)


@st.composite
def param_polys(draw, arity=2, max_terms=4, max_exp=3):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        exps = tuple(draw(st.integers(0, max_exp)) for _ in range(arity))
        terms[exps] = draw(rationals)
    return ParamPoly(terms, arity)


@st.composite
def unit_series(draw, order=4, arity=2):
    coeffs = [ParamPoly.one(arity)] + [draw(param_polys(arity, max_terms=2, max_exp=2)) for _ in range(order)]
    return TruncatedSeries(coeffs, arity)
