"""Solvers for the time-fractional wave equation D_t^alpha u + A u = f(u)."""

import json

from ._core import (
    DEFAULT_ML_TOL,
    FracwaveError,
    SpectralGrid,
    dirichlet_laplacian,
    fit_power_law,
    fractional_power,
    harmonic_oscillator,
    log_spectrum,
    ml,
    ml_kernel,
    ml_regime,
    shift,
    solve_linear,
    spectral_measure,
)
from . import _core

__all__ = [
    "DEFAULT_ML_TOL",
    "FracwaveError",
    "SpectralGrid",
    "dirichlet_laplacian",
    "error_kind",
    "fit_power_law",
    "fractional_power",
    "harmonic_oscillator",
    "log_spectrum",
    "ml",
    "ml_kernel",
    "ml_regime",
    "rate_suite",
    "resolve_config",
    "shift",
    "solve_linear",
    "solve_semilinear",
    "spectral_measure",
]


def error_kind(err):
    """Kind name ("validation", "parameter-domain", ...) of a FracwaveError."""
    return err.args[1] if len(err.args) > 1 else None


def solve_semilinear(grid, alpha, u0, u1, nonlinearity="zero", coeff=1.0, p=2, T=1.0, dt=1e-3):
    out = _core.solve_semilinear(grid, alpha, u0, u1, nonlinearity, coeff, p, T, dt)
    out["report"] = json.loads(out["report"])
    return out


def rate_suite(alpha, single_mode=False):
    return json.loads(_core.rate_suite_json(alpha, single_mode))


def resolve_config(text, base_dir="."):
    if not isinstance(text, str):
        text = json.dumps(text)
    return json.loads(_core.resolve_config(text, base_dir))
