"""Brane models: from dimensions, forms and worldvolumes to solution constants.

A model is a product manifold ``R_* x M_1 x ... x M_n`` (``M_1`` is
one-dimensional), a set of forms with ranks and kinetic signs, a scalar
sector ``(h, lambda)`` and a list of branes.  Everything here is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Sequence

from ._linalg import SingularMatrix, det, inverse
from .poly import as_rational, format_rational, parse_rational
from .toda import QuasiCartanMatrix

__all__ = [
    "Brane",
    "BraneConstants",
    "BraneModel",
    "Check",
    "FactorSpace",
    "FormField",
    "Inconsistent",
    "IntersectionRules",
    "ModelError",
    "NoIntegerSolution",
    "SingularScalarMetric",
    "ValidationReport",
    "ZeroDiagonal",
    "compute_B_matrix",
    "compute_brane_constants",
    "compute_quasi_cartan",
    "load_model",
    "parse_model",
    "realize_intersections",
    "solve_intersection_dims",
    "validate_model",
]

ELECTRIC = "electric"
MAGNETIC = "magnetic"


class ModelError(ValueError):
    """Malformed model description."""


class SingularScalarMetric(ValueError):
    pass


class ZeroDiagonal(ValueError):
    """Some ``B_ss`` vanishes, so the quasi-Cartan matrix is undefined."""


class NoIntegerSolution(ValueError):
    pass


class Inconsistent(ValueError):
    pass


@dataclass(frozen=True)
class FactorSpace:
    dim: int
    eps: int = 1
    topology: str | None = None


@dataclass(frozen=True)
class FormField:
    name: str
    rank: int
    theta: int = 1


@dataclass(frozen=True)
class Brane:
    form: str
    kind: str
    I: tuple[int, ...]
    Q: Fraction = Fraction(1)

    @property
    def chi(self) -> int:
        return 1 if self.kind == ELECTRIC else -1


@dataclass(frozen=True)
class BraneModel:
    factor_spaces: tuple[FactorSpace, ...]
    forms: tuple[FormField, ...]
    h: tuple[tuple[Fraction, ...], ...] = ()
    couplings: dict = field(default_factory=dict)
    eps_g: int = -1
    w: int = 1
    branes: tuple[Brane, ...] = ()
    name: str | None = None
    action: object = None

    @property
    def n(self) -> int:
        return len(self.factor_spaces)

    @property
    def D(self) -> int:
        return 1 + sum(f.dim for f in self.factor_spaces)

    @property
    def n_scalars(self) -> int:
        return len(self.h)

    def d(self, I: Sequence[int]) -> int:
        return sum(self.factor_spaces[i - 1].dim for i in I)

    def eps_of(self, I: Sequence[int]) -> int:
        out = 1
        for i in I:
            out *= self.factor_spaces[i - 1].eps
        return out

    def form(self, name: str) -> FormField:
        for f in self.forms:
            if f.name == name:
                return f
        raise KeyError(name)

    def coupling(self, form: str) -> tuple[Fraction, ...]:
        return tuple(self.couplings.get(form, (Fraction(0),) * self.n_scalars))

    def expected_dim(self, brane: Brane) -> int:
        """Worldvolume dimension forced by the form rank."""
        rank = self.form(brane.form).rank
        return rank - 1 if brane.kind == ELECTRIC else self.D - rank - 1

    def complement(self, I: Sequence[int]) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if i not in set(I))

    def replace(self, **kw) -> "BraneModel":
        from dataclasses import replace

        return replace(self, **kw)

    def to_json(self) -> dict:
        out: dict = {}
        if self.name is not None:
            out["name"] = self.name
        if self.action is not None:
            out["action"] = self.action
        fs = []
        for f in self.factor_spaces:
            item = {"dim": f.dim, "eps": f.eps}
            if f.topology is not None:
                item["topology"] = f.topology
            fs.append(item)
        out["factor_spaces"] = fs
        out["forms"] = [{"name": f.name, "rank": f.rank, "theta": f.theta} for f in self.forms]
        out["scalars"] = {
            "h": [[format_rational(x) for x in row] for row in self.h],
            "lambda": {k: [format_rational(x) for x in v] for k, v in sorted(self.couplings.items())},
        }
        out["eps_g"] = self.eps_g
        out["w"] = self.w
        out["branes"] = [
            {"form": b.form, "kind": b.kind, "I": list(b.I), "Q": format_rational(b.Q)} for b in self.branes
        ]
        return out


def _keys(obj, allowed: set, required: set, where: str):
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ModelError(f"{where}: missing keys {sorted(missing)}")


def _sign(value, where: str) -> int:
    if value not in (1, -1) or isinstance(value, bool):
        raise ModelError(f"{where} must be +1 or -1, got {value!r}")
    return int(value)


def _rational(value, where: str) -> Fraction:
    try:
        if isinstance(value, float):
            raise TypeError
        return parse_rational(value) if isinstance(value, str) else as_rational(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ModelError(f"{where}: {value!r} is not an exact rational") from None


def parse_model(data: dict) -> BraneModel:
    """Strictly parse the JSON model layout; unknown keys are errors."""
    _keys(
        data,
        {"name", "action", "factor_spaces", "forms", "scalars", "eps_g", "w", "branes"},
        {"factor_spaces", "forms", "eps_g", "w", "branes"},
        "model",
    )
    spaces = []
    for i, fs in enumerate(data["factor_spaces"], 1):
        _keys(fs, {"dim", "eps", "topology"}, {"dim", "eps"}, f"factor_spaces[{i}]")
        dim = fs["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ModelError(f"factor_spaces[{i}].dim must be a positive integer")
        topo = fs.get("topology")
        if topo not in (None, "circle", "line"):
            raise ModelError(f"factor_spaces[{i}].topology must be 'circle' or 'line'")
        spaces.append(FactorSpace(dim, _sign(fs["eps"], f"factor_spaces[{i}].eps"), topo))
    if not spaces:
        raise ModelError("at least one factor space (M_1) is required")

    forms = []
    for f in data["forms"]:
        _keys(f, {"name", "rank", "theta"}, {"name", "rank", "theta"}, "forms[]")
        if not isinstance(f["rank"], int) or f["rank"] < 1:
            raise ModelError(f"form {f['name']!r}: rank must be a positive integer")
        forms.append(FormField(str(f["name"]), f["rank"], _sign(f["theta"], f"form {f['name']!r} theta")))
    names = [f.name for f in forms]
    if len(set(names)) != len(names):
        raise ModelError("duplicate form names")

    scalars = data.get("scalars", {"h": [], "lambda": {}})
    _keys(scalars, {"h", "lambda"}, {"h"}, "scalars")
    h = tuple(tuple(_rational(x, "scalars.h") for x in row) for row in scalars["h"])
    l = len(h)
    if any(len(row) != l for row in h):
        raise ModelError("scalars.h must be square")
    if any(h[a][b] != h[b][a] for a in range(l) for b in range(l)):
        raise ModelError("scalars.h must be symmetric")
    couplings = {}
    for name, vec in scalars.get("lambda", {}).items():
        if name not in names:
            raise ModelError(f"scalars.lambda: unknown form {name!r}")
        if len(vec) != l:
            raise ModelError(f"scalars.lambda[{name!r}] must have {l} entries")
        couplings[name] = tuple(_rational(x, f"lambda[{name}]") for x in vec)

    n = len(spaces)
    branes = []
    for k, b in enumerate(data["branes"], 1):
        _keys(b, {"form", "kind", "I", "Q"}, {"form", "kind", "I", "Q"}, f"branes[{k}]")
        if b["form"] not in names:
            raise ModelError(f"branes[{k}]: unknown form {b['form']!r}")
        if b["kind"] not in (ELECTRIC, MAGNETIC):
            raise ModelError(f"branes[{k}].kind must be 'electric' or 'magnetic'")
        I = b["I"]
        if not I or any(not isinstance(i, int) or not 1 <= i <= n for i in I) or len(set(I)) != len(I):
            raise ModelError(f"branes[{k}].I must be a non-empty set of indices in 1..{n}")
        Q = _rational(b["Q"], f"branes[{k}].Q")
        if not Q:
            raise ModelError(f"branes[{k}].Q must be nonzero")
        branes.append(Brane(b["form"], b["kind"], tuple(sorted(I)), Q))

    return BraneModel(
        factor_spaces=tuple(spaces),
        forms=tuple(forms),
        h=h,
        couplings=couplings,
        eps_g=_sign(data["eps_g"], "eps_g"),
        w=_sign(data["w"], "w"),
        branes=tuple(branes),
        name=data.get("name"),
        action=data.get("action"),
    )


def load_model(path) -> BraneModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None
    return parse_model(data)


def _inverse_scalar_metric(model: BraneModel):
    if not model.n_scalars:
        return []
    try:
        return inverse(model.h)
    except SingularMatrix:
        raise SingularScalarMetric("scalar metric h_{ab} is not invertible") from None


def _dilaton_dot(model: BraneModel, hinv, a: str, b: str) -> Fraction:
    la, lb = model.coupling(a), model.coupling(b)
    l = model.n_scalars
    return sum((la[i] * hinv[i][j] * lb[j] for i in range(l) for j in range(l)), Fraction(0))


def compute_B_matrix(model: BraneModel, branes: Sequence[Brane] | None = None) -> list[list[Fraction]]:
    """``B_ss' = d(I_s & I_s') + d(I_s) d(I_s') / (2 - D) + chi chi' lambda.lambda'``."""
    branes = model.branes if branes is None else tuple(branes)
    hinv = _inverse_scalar_metric(model)
    D = model.D
    if D == 2:
        raise ModelError("D = 2 makes the intersection rule singular")
    out = []
    for s in branes:
        row = []
        for t in branes:
            common = set(s.I) & set(t.I)
            value = (
                Fraction(model.d(common))
                + Fraction(model.d(s.I) * model.d(t.I), 2 - D)
                + s.chi * t.chi * _dilaton_dot(model, hinv, s.form, t.form)
            )
            row.append(value)
        out.append(row)
    return out


def compute_quasi_cartan(B: Sequence[Sequence]) -> QuasiCartanMatrix:
    """``A_ss' = 2 B_ss' / B_s's'``."""
    B = [[as_rational(x) for x in row] for row in B]
    n = len(B)
    for t in range(n):
        if not B[t][t]:
            raise ZeroDiagonal(f"B[{t}][{t}] = 0")
    return QuasiCartanMatrix([[2 * B[s][t] / B[t][t] for t in range(n)] for s in range(n)])


@dataclass(frozen=True)
class BraneConstants:
    eps: tuple[int, ...]
    K: tuple[Fraction, ...]
    h: tuple[Fraction, ...]
    B_s: tuple[Fraction, ...]
    P: tuple[Fraction, ...]
    B: tuple[tuple[Fraction, ...], ...]
    A: QuasiCartanMatrix

    def to_json(self) -> dict:
        r = format_rational
        return {
            "eps": list(self.eps),
            "K": [r(x) for x in self.K],
            "h": [r(x) for x in self.h],
            "B_s": [r(x) for x in self.B_s],
            "P": [r(x) for x in self.P],
            "B": [[r(x) for x in row] for row in self.B],
            "A": self.A.to_json(),
        }


def brane_eps(model: BraneModel, brane: Brane) -> int:
    theta = model.form(brane.form).theta
    e = model.eps_of(brane.I) * theta
    return e if brane.kind == ELECTRIC else -model.eps_g * e


def compute_brane_constants(model: BraneModel, branes: Sequence[Brane] | None = None) -> BraneConstants:
    branes = model.branes if branes is None else tuple(branes)
    B = compute_B_matrix(model, branes)
    A = compute_quasi_cartan(B)
    eps = tuple(brane_eps(model, b) for b in branes)
    K = tuple(B[s][s] for s in range(len(branes)))
    Bs = tuple(eps[s] * K[s] * b.Q**2 for s, b in enumerate(branes))
    return BraneConstants(
        eps=eps,
        K=K,
        h=tuple(1 / k for k in K),
        B_s=Bs,
        P=tuple(x / 4 for x in Bs),
        B=tuple(tuple(row) for row in B),
        A=A,
    )


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"check": self.name, "pass": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def status(self, name: str) -> bool:
        """True iff every check called ``name`` passed (vacuously for none)."""
        return all(c.passed for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {"pass": self.passed, "checks": [c.to_json() for c in self.checks]}


def validate_model(model: BraneModel, branes: Sequence[Brane] | None = None) -> ValidationReport:
    """Collect every admissibility check; nothing here raises."""
    branes = model.branes if branes is None else tuple(branes)
    checks: list[Check] = []
    add = checks.append

    d1 = model.factor_spaces[0].dim
    add(Check("M1-one-dimensional", d1 == 1, f"d_1 = {d1}"))
    sig = model.w
    for f in model.factor_spaces:
        sig *= f.eps
    add(Check("signature", sig == model.eps_g, f"w * prod eps_i = {sig}, eps_g = {model.eps_g}"))

    for k, b in enumerate(branes, 1):
        want, got = model.expected_dim(b), model.d(b.I)
        add(Check("worldvolume-dimension", want == got, f"brane {k}: d(I) = {got}, form rank requires {want}"))

    for (i, s), (j, t) in combinations(enumerate(branes, 1), 2):
        if s.form != t.form:
            continue
        cap = model.d(set(s.I) & set(t.I))
        if s.kind == t.kind:
            add(Check("R1", cap <= model.d(s.I) - 2, f"branes {i},{j}: d(I&J) = {cap}, d(I) - 2 = {model.d(s.I) - 2}"))
        else:
            add(Check("R2", cap != 0, f"branes {i},{j}: d(I&J) = {cap}"))

    try:
        B = compute_B_matrix(model, branes)
    except (SingularScalarMetric, ModelError) as exc:
        add(Check("scalar-metric", False, str(exc)))
        return ValidationReport(tuple(checks))

    for s in range(len(branes)):
        add(Check("(i) B_ss != 0", B[s][s] != 0, f"brane {s + 1}: B_ss = {format_rational(B[s][s])}"))
    dB = det(B) if branes else Fraction(1)
    add(Check("(ii) det B != 0", dB != 0, f"det B = {format_rational(dB)}"))
    for s, b in enumerate(branes):
        e = brane_eps(model, b)
        add(Check("eps_s > 0", e > 0, f"brane {s + 1}: eps_s = {e}"))
        add(Check("K_s > 0", B[s][s] > 0, f"brane {s + 1}: K_s = {format_rational(B[s][s])}"))
    return ValidationReport(tuple(checks))


@dataclass(frozen=True)
class IntersectionRules:
    dims: dict
    notes: dict

    def to_json(self) -> dict:
        return {
            "intersections": [
                {"pair": [s + 1, t + 1], "d": d, "notes": self.notes.get((s, t), [])}
                for (s, t), d in sorted(self.dims.items())
            ]
        }


def solve_intersection_dims(
    model: BraneModel,
    target: QuasiCartanMatrix,
    branes: Sequence[Brane] | None = None,
) -> IntersectionRules:
    """Intersection dimensions that make ``2 B_ss'/B_s's'`` equal ``target``.

    Diagonal ``B_ss`` are fixed by the model; only ``d(I_s & I_s')`` is free.
    Keys of the result are 0-based brane pairs ``(s, t)`` with ``s < t``.
    """
    branes = model.branes if branes is None else tuple(branes)
    if target.size != len(branes):
        raise ValueError(f"target has size {target.size}, model has {len(branes)} branes")
    hinv = _inverse_scalar_metric(model)
    D = model.D
    diag = [
        Fraction(model.d(b.I)) + Fraction(model.d(b.I) ** 2, 2 - D) + _dilaton_dot(model, hinv, b.form, b.form)
        for b in branes
    ]
    dims, notes = {}, {}
    for s, t in combinations(range(len(branes)), 2):
        if not diag[s] or not diag[t]:
            raise ZeroDiagonal(f"B_ss vanishes for brane {s + 1 if not diag[s] else t + 1}")
        b_st = target[s, t] * diag[t] / 2
        b_ts = target[t, s] * diag[s] / 2
        if b_st != b_ts:
            raise Inconsistent(
                f"pair ({s + 1},{t + 1}): A entries need B_st = {format_rational(b_st)} "
                f"but B_ts = {format_rational(b_ts)}"
            )
        bs, bt = branes[s], branes[t]
        ds, dt = model.d(bs.I), model.d(bt.I)
        cap = b_st - Fraction(ds * dt, 2 - D) - bs.chi * bt.chi * _dilaton_dot(model, hinv, bs.form, bt.form)
        if cap.denominator != 1 or cap < 0:
            raise NoIntegerSolution(f"pair ({s + 1},{t + 1}): d(I&J) = {format_rational(cap)}")
        if cap > min(ds, dt):
            raise NoIntegerSolution(f"pair ({s + 1},{t + 1}): d(I&J) = {cap} exceeds a worldvolume dimension")
        cap = int(cap)
        pair_notes = []
        if bs.form == bt.form and bs.kind != bt.kind:
            pair_notes.append("R2 satisfied" if cap else "R2 violated (d = 0)")
        else:
            pair_notes.append("R2-irrelevant")
        if bs.form == bt.form and bs.kind == bt.kind:
            pair_notes.append("R1 satisfied" if cap <= ds - 2 else "R1 violated")
        dims[(s, t)] = cap
        notes[(s, t)] = pair_notes
    return IntersectionRules(dims, notes)


def realize_intersections(model: BraneModel, dims: dict) -> BraneModel:
    """Rebuild the factor spaces so that pairwise intersections equal ``dims``.

    ``M_1`` is kept; every nonzero pairwise overlap gets its own block, each
    brane gets a private block for the rest of its worldvolume, and one
    transverse block absorbs the remaining dimensions (it inherits the sign
    product of the original blocks).  Triple overlaps are never created.
    """
    branes = model.branes
    sizes = [model.d(b.I) for b in branes]
    total = model.D - 1
    spaces = [model.factor_spaces[0]]
    members: list[list[int]] = [[] for _ in branes]
    for (s, t), d in sorted(dims.items()):
        if d:
            spaces.append(FactorSpace(d, 1))
            members[s].append(len(spaces))
            members[t].append(len(spaces))
    for s, size in enumerate(sizes):
        own = size - sum(spaces[i - 1].dim for i in members[s])
        if own < 0:
            raise ValueError(f"brane {s + 1}: overlaps exceed its worldvolume dimension")
        if own:
            spaces.append(FactorSpace(own, 1))
            members[s].append(len(spaces))
    rest = total - sum(f.dim for f in spaces)
    if rest < 0:
        raise ValueError("intersections do not fit in the spacetime dimension")
    if rest:
        sign = 1
        for f in model.factor_spaces[1:]:
            sign *= f.eps
        spaces.append(FactorSpace(rest, sign))
    new_branes = tuple(
        Brane(b.form, b.kind, tuple(sorted(members[s])), b.Q) for s, b in enumerate(branes)
    )
    return model.replace(factor_spaces=tuple(spaces), branes=new_branes)
