"""Exact polynomial moduli functions for composite fluxbrane and S-brane solutions."""
from .poly import ParamPoly, TruncatedSeries, series_d_dz, series_mul, series_pow
from .toda import (
    ModuliSolution,
    QuasiCartanMatrix,
    build_rhs_series,
    cartan_matrix,
    residual_check,
    solve_coefficients,
    verify_conjecture,
    weyl_degrees,
)

__version__ = "0.1.0"

__all__ = [
    "ModuliSolution",
    "ParamPoly",
    "QuasiCartanMatrix",
    "TruncatedSeries",
    "build_rhs_series",
    "cartan_matrix",
    "residual_check",
    "series_d_dz",
    "series_mul",
    "series_pow",
    "solve_coefficients",
    "verify_conjecture",
    "weyl_degrees",
]
