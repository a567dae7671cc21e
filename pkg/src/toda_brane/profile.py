"""Metric, scalar and form data of the flux/S-brane solution.

The metric is

    g = F0 * { w drho^2 + F1 * rho^2 g^1 + sum_{i>=2} F_i g^i }

where ``F0 = prod_s H_s**(2 h_s d(I_s)/(D-2))``, ``F1 = prod_s H_s**(-2 h_s)``
and ``F_i = prod_s H_s**(-2 h_s [i in I_s])``.  A profile stores the total
exponent of every ``H_s`` in every block (``F0`` folded in), so evaluation is
a product of powers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._linalg import inverse
from .branes import ELECTRIC, BraneConstants, BraneModel, ModelError
from .poly import TruncatedSeries, as_rational, format_rational
from .toda import ModuliSolution, QuasiCartanMatrix, build_rhs_series

__all__ = [
    "Breakdown",
    "FormDescriptor",
    "NonPositiveModulus",
    "ProfilePoint",
    "SolutionProfile",
    "build_profile",
    "cylindrical_specialization",
    "evaluate_profile",
    "find_breakdown",
    "form_factor_series",
]


class NonPositiveModulus(ValueError):
    """Some ``H_s(rho^2) <= 0``: the solution has broken down."""


Exponents = tuple[tuple[int, Fraction], ...]


def _nonzero(pairs) -> Exponents:
    return tuple((s, e) for s, e in pairs if e)


@dataclass(frozen=True)
class FormDescriptor:
    brane: int
    form: str
    kind: str
    charge: Fraction
    wedge: tuple[int, ...]
    # exponents of H_s' in the electric field strength; empty for magnetic
    h_exponents: Exponents = ()

    def describe(self) -> str:
        tau = "tau(" + ",".join(map(str, self.wedge)) + ")"
        if self.kind == ELECTRIC:
            prod = " ".join(f"H{s + 1}^({format_rational(e)})" for s, e in self.h_exponents) or "1"
            return f"-{format_rational(self.charge)} {prod} rho drho ^ {tau}"
        return f"{format_rational(self.charge)} {tau}"

    def to_json(self) -> dict:
        return {
            "brane": self.brane + 1,
            "form": self.form,
            "kind": self.kind,
            "Q": format_rational(self.charge),
            "wedge": list(self.wedge),
            "H_exponents": [[s + 1, format_rational(e)] for s, e in self.h_exponents],
            "expression": self.describe(),
        }


@dataclass(frozen=True)
class SolutionProfile:
    w: int
    D: int
    dims: tuple[int, ...]
    m1_topology: str | None
    radial: Exponents
    spaces: tuple[Exponents, ...]
    scalars: tuple[Exponents, ...]
    forms: tuple[FormDescriptor, ...]
    matrix: QuasiCartanMatrix | None

    @property
    def n_branes(self) -> int:
        return len(self.forms)

    def to_json(self) -> dict:
        def enc(pairs):
            return [[s + 1, format_rational(e)] for s, e in pairs]

        return {
            "w": self.w,
            "D": self.D,
            "radial": {"coefficient": "w", "H_exponents": enc(self.radial)},
            "spaces": [
                {"index": i + 1, "dim": d, "rho2": i == 0, "H_exponents": enc(ex)}
                for i, (d, ex) in enumerate(zip(self.dims, self.spaces))
            ],
            "scalars": [{"index": a + 1, "H_exponents": enc(ex)} for a, ex in enumerate(self.scalars)],
            "forms": [f.to_json() for f in self.forms],
            "classification": cylindrical_specialization(self).label,
        }


def build_profile(model: BraneModel, constants: BraneConstants | None) -> SolutionProfile:
    branes = model.branes
    D = model.D
    if branes and D == 2:
        raise ModelError("D = 2 leaves the conformal exponent undefined")
    if branes and constants is None:
        raise ValueError("brane constants are required when branes are present")
    hs = constants.h if constants is not None else ()
    overall = [(s, 2 * hs[s] * model.d(b.I) / Fraction(D - 2)) for s, b in enumerate(branes)]
    spaces = []
    for i in range(1, model.n + 1):
        pairs = []
        for s, b in enumerate(branes):
            # M_1 always carries the -2 h_s factor, independent of I_s
            inside = i == 1 or i in b.I
            pairs.append((s, overall[s][1] - (2 * hs[s] if inside else 0)))
        spaces.append(_nonzero(pairs))

    l = model.n_scalars
    hinv = inverse(model.h) if l else []
    scalars = []
    for a in range(l):
        pairs = []
        for s, b in enumerate(branes):
            lam = model.coupling(b.form)
            raised = sum((hinv[a][c] * lam[c] for c in range(l)), Fraction(0))
            pairs.append((s, hs[s] * b.chi * raised))
        scalars.append(_nonzero(pairs))

    A = constants.A if constants is not None else None
    forms = []
    for s, b in enumerate(branes):
        if b.kind == ELECTRIC:
            ex = _nonzero((t, -A[s, t]) for t in range(len(branes)))
            forms.append(FormDescriptor(s, b.form, b.kind, b.Q, b.I, ex))
        else:
            forms.append(FormDescriptor(s, b.form, b.kind, b.Q, model.complement(b.I)))

    return SolutionProfile(
        w=model.w,
        D=D,
        dims=tuple(f.dim for f in model.factor_spaces),
        m1_topology=model.factor_spaces[0].topology,
        radial=_nonzero(overall),
        spaces=tuple(spaces),
        scalars=tuple(scalars),
        forms=tuple(forms),
        matrix=A,
    )


@dataclass(frozen=True)
class Classification:
    label: str
    description: str

    @property
    def is_fluxbrane(self) -> bool:
        return self.label == "fluxbrane"


def cylindrical_specialization(profile: SolutionProfile) -> Classification:
    if profile.w == -1:
        return Classification("s-brane", "w = -1: rho is time-like, S-brane solution")
    if profile.m1_topology == "circle":
        return Classification("fluxbrane", "w = +1 and M_1 is a circle with g^1 = dphi^2: composite fluxbrane")
    return Classification("flux-type", "w = +1 but M_1 is not marked as a circle")


def form_factor_series(profile: SolutionProfile, sol: ModuliSolution, s: int) -> TruncatedSeries:
    """Coefficient series multiplying ``rho drho ^ tau(I_s)`` (electric) or
    ``tau(complement)`` (magnetic)."""
    f = profile.forms[s]
    arity = sol.series[0].arity
    if f.kind != ELECTRIC:
        return TruncatedSeries([f.charge], arity)
    return build_rhs_series(sol.matrix, sol.series, s) * (-f.charge)


@dataclass(frozen=True)
class ProfilePoint:
    rho: float
    z: float
    H: tuple[float, ...]
    radial: float
    h_factors: tuple[float, ...]
    coefficients: tuple[float, ...]
    exp_phi: tuple[float, ...]
    phi: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "z": self.z,
            "H": list(self.H),
            "radial": self.radial,
            "spaces": list(self.coefficients),
            "h_factors": list(self.h_factors),
            "exp_phi": list(self.exp_phi),
            "phi": list(self.phi),
        }

    def csv_row(self) -> list[float]:
        return [self.rho, self.z, *self.H, self.radial, *self.coefficients, *self.exp_phi]


def _moduli(sol: ModuliSolution, z: Fraction, values) -> list[Fraction]:
    return [sol.evaluate(s, z, values) for s in range(sol.size)]


def _power_product(pairs: Exponents, logH: Sequence[float]) -> float:
    return math.exp(sum(float(e) * logH[s] for s, e in pairs))


def evaluate_profile(
    profile: SolutionProfile,
    sol: ModuliSolution | None,
    rho,
    values: Sequence | None = None,
) -> ProfilePoint:
    """Metric block coefficients and scalars at one radius (64-bit floats)."""
    rho_q = as_rational(rho) if not isinstance(rho, float) else Fraction(rho)
    z = rho_q * rho_q
    if profile.n_branes:
        if sol is None:
            raise ValueError("a moduli solution is required when branes are present")
        H = _moduli(sol, z, values)
    else:
        H = []
    for s, v in enumerate(H):
        if v <= 0:
            raise NonPositiveModulus(f"H_{s + 1}({float(z)}) = {float(v)} <= 0")
    logH = [math.log(v) for v in H]
    radial = profile.w * _power_product(profile.radial, logH)
    factors = tuple(_power_product(ex, logH) for ex in profile.spaces)
    coeffs = tuple(f * float(z) if i == 0 else f for i, f in enumerate(factors))
    phi = tuple(sum(float(e) * logH[s] for s, e in ex) for ex in profile.scalars)
    return ProfilePoint(
        rho=float(rho_q),
        z=float(z),
        H=tuple(float(v) for v in H),
        radial=radial,
        h_factors=factors,
        coefficients=coeffs,
        exp_phi=tuple(math.exp(p) for p in phi),
        phi=phi,
    )


@dataclass(frozen=True)
class Breakdown:
    brane: int
    z: float
    rho: float


def find_breakdown(
    sol: ModuliSolution,
    rho_max,
    values: Sequence | None = None,
    steps: int = 1000,
    tol: float = 1e-12,
) -> Breakdown | None:
    """First radius in ``(0, rho_max]`` where some ``H_s`` reaches zero.

    A uniform scan in ``rho`` brackets the first sign change, then exact
    rational bisection narrows it to ``tol`` in ``rho``.
    """
    rho_max = as_rational(rho_max) if not isinstance(rho_max, float) else Fraction(rho_max)

    def worst(r: Fraction):
        vals = _moduli(sol, r * r, values)
        s = min(range(len(vals)), key=lambda i: vals[i])
        return vals[s], s

    lo = Fraction(0)
    for k in range(1, steps + 1):
        hi = rho_max * k / steps
        v, s = worst(hi)
        if v <= 0:
            break
        lo = hi
    else:
        return None
    while hi - lo > tol:
        mid = (lo + hi) / 2
        # keep denominators bounded
        mid = mid.limit_denominator(10**18) if mid.denominator > 10**18 else mid
        if worst(mid)[0] <= 0:
            hi = mid
        else:
            lo = mid
    s = worst(hi)[1]
    return Breakdown(s, float(hi * hi), float(hi))
