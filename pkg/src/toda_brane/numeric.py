"""Floating-point cross-check of the series solutions.

The master equation is integrated as a first-order system in
``(H_1..H_m, H_1'..H_m')`` starting just off the singular point ``z = 0``,
with initial data taken from the exact Taylor polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .toda import ModuliSolution

__all__ = [
    "CrossValidation",
    "OdeRun",
    "PositivityLoss",
    "StepFailure",
    "cross_validate",
    "float_residual",
    "integrate_master_ode",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_Z0 = 1e-6
SEED_ORDER = 4


class StepFailure(RuntimeError):
    pass


class PositivityLoss(RuntimeError):
    pass


def _numeric_coeffs(sol: ModuliSolution, values) -> list[list[Fraction]]:
    if sol.mode == "numeric":
        return [sol.coefficients(s) for s in range(sol.size)]
    if values is None:
        raise ValueError("symbolic solution needs values for P_s")
    vals = [Fraction(v) if not isinstance(v, float) else Fraction(v) for v in values]
    return [[c.evaluate(vals) for c in sol.series[s].coeffs] for s in range(sol.size)]


def _param_values(sol: ModuliSolution, values) -> np.ndarray:
    if sol.mode == "numeric":
        return np.array([float(v) for v in sol.param_values()])
    if values is None:
        raise ValueError("symbolic solution needs values for P_s")
    return np.array([float(v) for v in values])


def _poly_value(coeffs: Sequence[Fraction], z: float, deriv: int = 0) -> float:
    """Horner evaluation of the ``deriv``-th derivative in floats."""
    total = 0.0
    n = len(coeffs) - 1
    for k in range(n, deriv - 1, -1):
        fall = 1
        for j in range(deriv):
            fall *= k - j
        total = total * z + fall * float(coeffs[k])
    return total


def master_rhs(A: np.ndarray, B: np.ndarray):
    m = len(B)
    quarter_b = 0.25 * B

    def f(z, y):
        H = y[:m]
        dH = y[m:]
        # |H| keeps the field finite past a zero so the event can locate it
        with np.errstate(divide="ignore"):
            coupling = np.exp(-A @ np.log(np.abs(H)))
        # d/dz(z H'/H) = (B/4) coupling, solved for H''
        d2H = (quarter_b * coupling * H - dH + z * dH * dH / H) / z
        return np.concatenate([dH, d2H])

    return f


@dataclass
class OdeRun:
    A: np.ndarray
    B: np.ndarray
    z0: float
    z1: float
    y0: np.ndarray
    rtol: float
    atol: float
    z: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    seed_deviation: float
    nfev: int
    dense: object = field(default=None, repr=False)

    def H_at(self, z) -> np.ndarray:
        m = len(self.B)
        return np.asarray(self.dense(z))[:m]

    def trajectory_rows(self) -> list[list[float]]:
        return [[float(z), *map(float, h), *map(float, d)] for z, h, d in zip(self.z, self.H.T, self.dH.T)]


def integrate_master_ode(
    A,
    B_values,
    sol: ModuliSolution,
    z0: float = DEFAULT_Z0,
    z1: float = 1.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    values: Sequence | None = None,
    seed_order: int = SEED_ORDER,
    t_eval=None,
    method: str = "DOP853",
) -> OdeRun:
    """Integrate from ``z0`` to ``z1`` seeded by the truncated series at ``z0``.

    ``B_values`` may be ``None``, in which case ``B_s = 4 P_s`` is read off the
    solution (or ``values``).
    """
    if not 0 < z0 < z1:
        raise ValueError(f"need 0 < z0 < z1, got z0={z0}, z1={z1}")
    if sol.order < seed_order:
        raise ValueError(f"seeding needs the series through z^{seed_order}, solution has order {sol.order}")
    A = np.array([[float(x) for x in row] for row in getattr(A, "entries", A)], dtype=float)
    P = _param_values(sol, values)
    B = 4.0 * P if B_values is None else np.array([float(b) for b in B_values], dtype=float)
    m = len(B)
    coeffs = [c[: seed_order + 1] for c in _numeric_coeffs(sol, values)]
    H0 = np.array([_poly_value(c, z0) for c in coeffs])
    dH0 = np.array([_poly_value(c, z0, 1) for c in coeffs])
    if np.any(H0 <= 0):
        raise PositivityLoss(f"series seed is non-positive at z0={z0}")
    seed_dev = float(np.max(np.abs(H0 - 1.0 - 0.25 * B * z0))) if m else 0.0
    y0 = np.concatenate([H0, dH0])

    events = []
    for s in range(m):
        ev = lambda z, y, s=s: y[s]
        ev.terminal = True
        ev.direction = -1
        events.append(ev)

    res = solve_ivp(
        master_rhs(A, B),
        (z0, z1),
        y0,
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=True,
        events=events or None,
    )
    if res.status == 1:
        raise PositivityLoss(f"H reached zero at z = {res.t[-1]:.6g}")
    if res.status != 0:
        raise StepFailure(res.message)
    return OdeRun(
        A=A,
        B=B,
        z0=z0,
        z1=z1,
        y0=y0,
        rtol=rtol,
        atol=atol,
        z=res.t,
        H=res.y[:m],
        dH=res.y[m:],
        seed_deviation=seed_dev,
        nfev=res.nfev,
        dense=res.sol,
    )


@dataclass
class CrossValidation:
    case: str
    z0: float
    z1: float
    max_rel_dev: float
    tolerance: float
    table: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_dev < self.tolerance)

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "z0": self.z0,
            "z1": self.z1,
            "max_rel_dev": self.max_rel_dev,
            "pass": self.passed,
        }


def cross_validate(
    sol: ModuliSolution,
    values: Sequence | None = None,
    z_grid: Sequence[float] = tuple(k / 10 for k in range(1, 11)),
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    tolerance: float = 1e-8,
    z0: float = DEFAULT_Z0,
    case: str | None = None,
) -> CrossValidation:
    """Compare the ODE trajectory with the exact series on ``z_grid``."""
    grid = sorted(float(z) for z in z_grid)
    run = integrate_master_ode(sol.matrix, None, sol, z0=z0, z1=grid[-1], rtol=rtol, atol=atol, values=values)
    coeffs = _numeric_coeffs(sol, values)
    worst = 0.0
    table = []
    for z in grid:
        ode = run.H_at(z)
        exact = np.array([float(sum(c * Fraction(z) ** k for k, c in enumerate(cs))) for cs in coeffs])
        dev = float(np.max(np.abs(ode - exact) / np.abs(exact))) if len(exact) else 0.0
        worst = max(worst, dev)
        table.append({"z": z, "ode": ode.tolist(), "series": exact.tolist(), "rel_dev": dev})
    label = case or (sol.matrix.label() or "custom")
    return CrossValidation(label, z0, grid[-1], worst, tolerance, table)


def float_residual(sol: ModuliSolution, z_grid: Sequence[float], values: Sequence | None = None) -> float:
    """Max over the grid of |LHS - RHS| / max(|RHS|, tiny) of the cleared
    master equation, all in floats."""
    coeffs = _numeric_coeffs(sol, values)
    P = _param_values(sol, values)
    A = np.array([[float(x) for x in row] for row in sol.matrix.entries])
    worst = 0.0
    for z in z_grid:
        H = np.array([_poly_value(c, z) for c in coeffs])
        d1 = np.array([_poly_value(c, z, 1) for c in coeffs])
        d2 = np.array([_poly_value(c, z, 2) for c in coeffs])
        lhs = z * d2 * H + d1 * H - z * d1 * d1
        rhs = P * H * H * np.exp(-A @ np.log(H))
        scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return worst
