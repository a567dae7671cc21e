"""Series solution of the Toda-type master equations.

For each brane ``s`` the moduli function ``H_s(z)`` obeys

    d/dz (z H_s' / H_s) = (B_s / 4) prod_{s'} H_{s'}**(-A[s][s']),   H_s(0) = 1.

Multiplying through by ``H_s**2`` (and using ``A[s][s] = 2``) gives the cleared
form used everywhere in this module::

    z H_s'' H_s + H_s' H_s - z H_s'**2 = P_s prod_{s' != s} H_{s'}**(-A[s][s'])

with ``P_s = B_s / 4``, the first Taylor coefficient of ``H_s``.  The ``z**k``
part of the left side contains ``H_s^(k+1)`` with factor ``(k+1)**2`` and
otherwise only lower coefficients, so the series is fixed order by order.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ._linalg import SingularMatrix, det, inverse, to_fraction_matrix
from ._parallel import pmap
from .poly import (
    ParamPoly,
    TruncatedSeries,
    as_rational,
    format_rational,
    parse_rational,
    power_coefficient,
    series_mul,
    series_pow,
)

__all__ = [
    "CARTAN_MATRICES",
    "ConjectureReport",
    "BraneVerdict",
    "ModuliSolution",
    "QuasiCartanMatrix",
    "SingularMatrix",
    "build_rhs_series",
    "cartan_matrix",
    "cleared_lhs",
    "residual_check",
    "solve_coefficients",
    "verify_conjecture",
    "weyl_degrees",
]

SYMBOLIC = "symbolic"
NUMERIC = "numeric"

POLYNOMIAL_CONFIRMED = "polynomial-confirmed"
DEGREES_UNDEFINED = "degrees-undefined"


class QuasiCartanMatrix:
    """Square rational matrix with every diagonal entry equal to 2."""

    __slots__ = ("entries",)

    def __init__(self, rows: Sequence[Sequence]):
        m = to_fraction_matrix(rows)
        if not m:
            raise ValueError("quasi-Cartan matrix must be non-empty")
        for i, row in enumerate(m):
            if row[i] != 2:
                raise ValueError(f"diagonal entry A[{i}][{i}] = {row[i]}, must be 2")
        self.entries: tuple[tuple[Fraction, ...], ...] = tuple(tuple(r) for r in m)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if isinstance(other, QuasiCartanMatrix):
            return self.entries == other.entries
        return NotImplemented

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        rows = ", ".join("[" + ", ".join(format_rational(x) for x in r) + "]" for r in self.entries)
        return f"QuasiCartanMatrix([{rows}])"

    def det(self) -> Fraction:
        return det(self.entries)

    def inverse(self) -> list[list[Fraction]]:
        return inverse(self.entries)

    def has_polynomial_coupling(self) -> bool:
        """True when every off-diagonal entry is a non-positive integer.

        Then ``prod_{s' != s} H_{s'}**(-A[s][s'])`` is a finite polynomial in
        the ``H``'s and the cleared equation is a polynomial identity.
        """
        n = self.size
        return all(
            self.entries[i][j].denominator == 1 and self.entries[i][j] <= 0
            for i in range(n)
            for j in range(n)
            if i != j
        )

    def permuted(self, perm: Sequence[int]) -> "QuasiCartanMatrix":
        return QuasiCartanMatrix([[self.entries[perm[i]][perm[j]] for j in range(self.size)] for i in range(self.size)])

    def label(self) -> str | None:
        """Name of the rank <= 2 Lie algebra this matrix is the Cartan matrix of, if any."""
        for name, rows in CARTAN_MATRICES.items():
            target = QuasiCartanMatrix(rows)
            if target.size != self.size:
                continue
            if target == self:
                return name
            if self.size == 2 and target == self.permuted([1, 0]):
                return name
        return None

    def to_json(self) -> list[list[str]]:
        return [[format_rational(x) for x in row] for row in self.entries]

    @classmethod
    def from_json(cls, rows) -> "QuasiCartanMatrix":
        return cls([[parse_rational(x) if isinstance(x, str) else x for x in row] for row in rows])


CARTAN_MATRICES: dict[str, list[list[int]]] = {
    "A1": [[2]],
    "A1+A1": [[2, 0], [0, 2]],
    "A2": [[2, -1], [-1, 2]],
    "C2": [[2, -1], [-2, 2]],
    "B2": [[2, -2], [-1, 2]],
    "G2": [[2, -1], [-3, 2]],
}


def cartan_matrix(name: str) -> QuasiCartanMatrix:
    key = name.strip().upper().replace("⊕", "+").replace(" ", "")
    aliases = {"A1XA1": "A1+A1", "A1A1": "A1+A1", "D2": "A1+A1"}
    key = aliases.get(key, key)
    if key not in CARTAN_MATRICES:
        raise KeyError(f"unknown algebra {name!r}; known: {', '.join(CARTAN_MATRICES)}")
    return QuasiCartanMatrix(CARTAN_MATRICES[key])


def weyl_degrees(A: QuasiCartanMatrix) -> list[Fraction]:
    """``n_s = 2 * sum_{s'} (A^-1)[s][s']`` as exact rationals.

    Raises :class:`SingularMatrix` when ``det A = 0``.
    """
    inv = A.inverse()
    return [2 * sum(row, Fraction(0)) for row in inv]


def _polynomial_power(h: TruncatedSeries, n: int) -> list[ParamPoly]:
    """Full (untruncated) coefficients of ``h**n`` for integer ``n >= 0``."""
    out = [ParamPoly.one(h.arity)]
    for _ in range(n):
        out = _full_product(out, h.coeffs)
    return out


def _full_product(a: Sequence[ParamPoly], b: Sequence[ParamPoly]) -> list[ParamPoly]:
    arity = a[0].arity
    out = [ParamPoly.zero(arity) for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = out[i + j] + x * y
    return out


def _coupling_product(A: QuasiCartanMatrix, H: Sequence[TruncatedSeries], s: int, exact: bool) -> list[ParamPoly]:
    """``prod_{s' != s} H_{s'}**(-A[s][s'])``.

    ``exact=True`` multiplies polynomials without truncation (integer
    exponents only); otherwise uses ``series_pow`` at the common order.
    """
    arity = H[0].arity
    if exact:
        out = [ParamPoly.one(arity)]
        for t, h in enumerate(H):
            if t != s and A[s, t]:
                out = _full_product(out, _polynomial_power(h, int(-A[s, t])))
        return out
    order = min(h.order for h in H)
    out_s = TruncatedSeries.one(order, arity)
    for t, h in enumerate(H):
        if t != s and A[s, t]:
            out_s = series_mul(out_s, series_pow(h.truncate(order), -A[s, t]))
    return list(out_s.coeffs)


def build_rhs_series(A: QuasiCartanMatrix, H: Sequence[TruncatedSeries], s: int) -> TruncatedSeries:
    """``prod_{s'} H_{s'}**(-A[s][s'])`` including the ``H_s**-2`` factor."""
    if len(H) != A.size:
        raise ValueError(f"need {A.size} series, got {len(H)}")
    order = min(h.order for h in H)
    arity = H[0].arity
    out = TruncatedSeries.one(order, arity)
    for t, h in enumerate(H):
        if A[s, t]:
            out = series_mul(out, series_pow(h.truncate(order), -A[s, t]))
    return out


def cleared_rhs_polynomial(A: QuasiCartanMatrix, H: Sequence[TruncatedSeries], s: int) -> TruncatedSeries:
    """``H_s**2 * prod_{s'} H_{s'}**(-A[s][s'])`` as a finite product.

    Only valid when the off-diagonal couplings are non-positive integers; the
    result is the untruncated polynomial.
    """
    if not A.has_polynomial_coupling():
        raise ValueError("finite product form needs non-positive integer off-diagonal entries")
    return TruncatedSeries(_coupling_product(A, H, s, exact=True), H[0].arity)


def cleared_lhs(h: Sequence[ParamPoly]) -> list[ParamPoly]:
    """Untruncated ``z H'' H + H' H - z H'^2`` for a polynomial ``H``.

    Coefficient of ``z**k`` is ``sum_{i+j=k+1} (i**2 - i*j) h_i h_j``.
    """
    n = len(h) - 1
    arity = h[0].arity
    out = [ParamPoly.zero(arity) for _ in range(max(2 * n, 1))]
    for i in range(1, n + 1):
        if not h[i]:
            continue
        for j in range(0, n + 1):
            w = i * i - i * j
            if w and h[j]:
                out[i + j - 1] = out[i + j - 1] + (h[i] * h[j]).scale(w)
    return out


@dataclass(frozen=True)
class ModuliSolution:
    """Taylor coefficients of every ``H_s`` through ``z**order``.

    ``params[s]`` is the value standing in for ``P_s = B_s/4`` in the master
    equation: the symbol ``P_{s+1}`` in symbolic mode, a constant (arity-0
    ``ParamPoly``) in numeric mode.
    """

    matrix: QuasiCartanMatrix
    order: int
    mode: str
    series: tuple[TruncatedSeries, ...]
    params: tuple[ParamPoly, ...]

    @property
    def size(self) -> int:
        return len(self.series)

    def coefficients(self, s: int) -> list:
        """``[P_s^(0), ..., P_s^(order)]``; Fractions in numeric mode."""
        coeffs = self.series[s].coeffs
        if self.mode == NUMERIC:
            return [c.constant_term() for c in coeffs]
        return list(coeffs)

    def param_values(self) -> list[Fraction] | None:
        if self.mode != NUMERIC:
            return None
        return [p.constant_term() for p in self.params]

    def evaluate(self, s: int, z, values: Sequence | None = None) -> Fraction:
        if self.mode == NUMERIC:
            values = []
        elif values is None:
            raise ValueError("symbolic solution needs parameter values to evaluate")
        return self.series[s].evaluate(z, values)

    def substitute(self, values: Sequence) -> "ModuliSolution":
        """Bind the symbols to rationals, giving a numeric-mode solution."""
        if self.mode == NUMERIC:
            return self
        vals = [as_rational(v) for v in values]
        series = tuple(TruncatedSeries([c.evaluate(vals) for c in h.coeffs], 0) for h in self.series)
        params = tuple(ParamPoly.const(v, 0) for v in vals)
        return ModuliSolution(self.matrix, self.order, NUMERIC, series, params)

    def with_coefficient(self, s: int, k: int, value) -> "ModuliSolution":
        coeffs = list(self.series[s].coeffs)
        arity = self.series[s].arity
        coeffs[k] = value if isinstance(value, ParamPoly) else ParamPoly.const(value, arity)
        series = list(self.series)
        series[s] = TruncatedSeries(coeffs, arity)
        return dataclasses.replace(self, series=tuple(series))

    def to_json(self) -> dict:
        def enc(c: ParamPoly):
            return format_rational(c.constant_term()) if self.mode == NUMERIC else c.to_json()

        out = {
            "matrix": self.matrix.to_json(),
            "order": self.order,
            "mode": self.mode,
        }
        if self.mode == NUMERIC:
            out["values"] = [format_rational(v) for v in self.param_values()]
        out["branes"] = [{"coeffs": [enc(c) for c in h.coeffs]} for h in self.series]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ModuliSolution":
        matrix = QuasiCartanMatrix.from_json(data["matrix"])
        mode = data["mode"]
        m = matrix.size
        if mode == NUMERIC:
            series = tuple(TruncatedSeries([parse_rational(c) for c in b["coeffs"]], 0) for b in data["branes"])
            params = tuple(ParamPoly.const(parse_rational(v), 0) for v in data["values"])
        else:
            series = tuple(
                TruncatedSeries([ParamPoly.from_json(c, m) for c in b["coeffs"]], m) for b in data["branes"]
            )
            params = tuple(ParamPoly.symbol(i, m) for i in range(m))
        return cls(matrix, int(data["order"]), mode, series, params)


def solve_coefficients(
    A: QuasiCartanMatrix,
    order: int,
    mode: str = SYMBOLIC,
    values: Sequence | None = None,
) -> ModuliSolution:
    """Run the order-by-order recurrence up to ``z**order``.

    In symbolic mode the coefficients are polynomials in ``P1..Pm``; in
    numeric mode ``values`` gives ``P_s`` for every brane.
    """
    if not isinstance(order, int) or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    m = A.size
    if mode == SYMBOLIC:
        arity = m
        params = [ParamPoly.symbol(s, m) for s in range(m)]
    elif mode == NUMERIC:
        if values is None or len(values) != m:
            raise ValueError(f"numeric mode needs {m} parameter values")
        arity = 0
        params = [ParamPoly.const(as_rational(v), 0) for v in values]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    one = ParamPoly.one(arity)
    zero = ParamPoly.zero(arity)
    h: list[list[ParamPoly]] = [[one] for _ in range(m)]
    # couplings[s] = [(t, exponent)] for the factors H_t**(-A[s][t]), t != s
    couplings = [[(t, -A[s, t]) for t in range(m) if t != s and A[s, t]] for s in range(m)]
    powers = [[[one] for _ in couplings[s]] for s in range(m)]
    # chain[s][f] = coefficients of the product of the first f+1 factors
    chains = [[[one] for _ in couplings[s]] for s in range(m)]

    def next_coefficient(s: int, k: int) -> ParamPoly:
        if k > 0:
            for f, (t, alpha) in enumerate(couplings[s]):
                c = power_coefficient(h[t], powers[s][f], alpha, k)
                powers[s][f].append(zero if c is None else c)
            for f in range(len(couplings[s])):
                left = chains[s][f - 1] if f else None
                if left is None:
                    chains[s][f].append(powers[s][f][k])
                else:
                    acc = zero
                    right = powers[s][f]
                    for i in range(k + 1):
                        if left[i] and right[k - i]:
                            acc = acc + left[i] * right[k - i]
                    chains[s][f].append(acc)
        prod_k = chains[s][-1][k] if couplings[s] else (one if k == 0 else zero)
        rhs = params[s] * prod_k
        hs = h[s]
        # sum_{i+j=k+1, i<j} (i-j)**2 h_i h_j: the symmetrised lower-order part
        known = zero
        for i in range(1, (k + 1) // 2 + 1):
            j = k + 1 - i
            if i < j and hs[i] and hs[j]:
                known = known + (hs[i] * hs[j]).scale((j - i) ** 2)
        return (rhs - known) / ((k + 1) ** 2)

    for k in range(order):
        new = pmap(lambda s: next_coefficient(s, k), range(m))
        for s in range(m):
            h[s].append(new[s])

    series = tuple(TruncatedSeries(h[s], arity) for s in range(m))
    return ModuliSolution(A, order, mode, series, tuple(params))


def residual_check(
    A: QuasiCartanMatrix,
    sol: ModuliSolution,
    check_order: int | None = None,
) -> list[TruncatedSeries]:
    """``LHS - RHS`` of the cleared master equation for every brane.

    With polynomial coupling the residual is the exact, untruncated
    polynomial (cut at ``check_order`` if given).  Otherwise the right side
    goes through ``series_pow`` and the result is valid through
    ``check_order`` (default ``sol.order - 1``, the last relation the stored
    coefficients fully determine).
    """
    if A.size != sol.size:
        raise ValueError("matrix and solution sizes differ")
    exact = A.has_polynomial_coupling()
    if not exact:
        limit = sol.order - 1 if check_order is None else check_order
        if limit > sol.order - 1:
            raise ValueError(f"check_order {limit} needs coefficients through z^{limit + 1}")
        if limit < 0:
            raise ValueError("solution too short for a residual check")

    def one_brane(s: int) -> TruncatedSeries:
        hs = sol.series[s]
        lhs = cleared_lhs(hs.coeffs)
        if exact:
            rhs = [c * sol.params[s] for c in _coupling_product(A, sol.series, s, exact=True)]
        else:
            H = [h.truncate(limit) for h in sol.series]
            prod = build_rhs_series(A, H, s)
            rhs = [c * sol.params[s] for c in series_mul(series_mul(prod, H[s]), H[s]).coeffs]
        n = max(len(lhs), len(rhs))
        zero = ParamPoly.zero(hs.arity)
        lhs += [zero] * (n - len(lhs))
        rhs += [zero] * (n - len(rhs))
        res = [a - b for a, b in zip(lhs, rhs)]
        if exact and check_order is not None:
            res = (res + [zero] * (check_order + 1))[: check_order + 1]
        elif not exact:
            res = res[: limit + 1]
        return TruncatedSeries(res, hs.arity)

    return pmap(one_brane, range(A.size))


@dataclass(frozen=True)
class BraneVerdict:
    degree: Fraction | None
    checked: tuple[int, int] | None
    verdict: str
    first_violation: tuple[int, ParamPoly] | None = None
    leading: ParamPoly | None = None

    def to_json(self) -> dict:
        return {
            "degree": None if self.degree is None else format_rational(self.degree),
            "checked": None if self.checked is None else list(self.checked),
            "verdict": self.verdict,
            "first_violation": None
            if self.first_violation is None
            else {"order": self.first_violation[0], "coeff": self.first_violation[1].to_json()},
            "leading": None if self.leading is None else self.leading.to_json(),
        }


@dataclass(frozen=True)
class ConjectureReport:
    matrix: QuasiCartanMatrix
    degrees: tuple[Fraction, ...] | None
    margin: int
    branes: tuple[BraneVerdict, ...]
    solution: ModuliSolution | None = field(default=None, compare=False, repr=False)

    @property
    def confirmed(self) -> bool:
        return all(b.verdict == POLYNOMIAL_CONFIRMED for b in self.branes)

    @property
    def verdict(self) -> str:
        if self.confirmed:
            return POLYNOMIAL_CONFIRMED
        if any(b.verdict == DEGREES_UNDEFINED for b in self.branes):
            return DEGREES_UNDEFINED
        return next(b.verdict for b in self.branes if b.verdict != POLYNOMIAL_CONFIRMED)

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.to_json(),
            "label": self.matrix.label(),
            "degrees": None if self.degrees is None else [format_rational(d) for d in self.degrees],
            "margin": self.margin,
            "order": None if self.solution is None else self.solution.order,
            "verdict": self.verdict,
            "branes": [b.to_json() for b in self.branes],
        }


def undefined_report(A: QuasiCartanMatrix, margin: int, degrees=None) -> ConjectureReport:
    branes = tuple(BraneVerdict(None if degrees is None else degrees[s], None, DEGREES_UNDEFINED) for s in range(A.size))
    return ConjectureReport(A, None if degrees is None else tuple(degrees), margin, branes)


def verify_conjecture(A: QuasiCartanMatrix, margin: int = 4) -> ConjectureReport:
    """Solve symbolically to ``max(n_s) + margin`` and check every coefficient
    beyond ``n_s`` vanishes identically in the parameters.

    Raises :class:`SingularMatrix` for degenerate ``A``; non-integral or
    non-positive degrees give a ``degrees-undefined`` report.
    """
    if margin < 1:
        raise ValueError("margin must be at least 1")
    degrees = weyl_degrees(A)
    if any(d.denominator != 1 or d <= 0 for d in degrees):
        return undefined_report(A, margin, degrees)
    top = int(max(degrees))
    order = top + margin
    sol = solve_coefficients(A, order, SYMBOLIC)
    verdicts = []
    for s, d in enumerate(degrees):
        n = int(d)
        coeffs = sol.series[s].coeffs
        bad = next((k for k in range(n + 1, order + 1) if coeffs[k]), None)
        if bad is None:
            verdicts.append(BraneVerdict(d, (n + 1, order), POLYNOMIAL_CONFIRMED, None, coeffs[n]))
        else:
            verdicts.append(BraneVerdict(d, (n + 1, order), f"violation-at-order-{bad}", (bad, coeffs[bad]), coeffs[n]))
    return ConjectureReport(A, tuple(degrees), margin, tuple(verdicts), sol)
