"""Pseudospectral simulation and verification tools for Muskat flow with surface tension."""

from .grid_spectral import (
    PeriodicGrid,
    ScalarField,
    derivative,
    frac_laplacian,
    hilbert,
    make_grid,
    multiplier,
    sample,
    shift,
)
from .norms import NormReport, besov, lp, norm_report, smallness, sobolev
from .quadrature import QuadratureSpec, laplace_moment, pv_integrate
from .rhs_muskat import PhysicalParams, TermBreakdown, curvature, rhs_cp0, rhs_cp1, rhs_nf
from .timestepper import BlowUpError, SimConfig, Trajectory, run, step

__all__ = [
    "PeriodicGrid", "ScalarField", "make_grid", "sample", "multiplier", "derivative",
    "hilbert", "frac_laplacian", "shift", "NormReport", "sobolev", "besov", "lp",
    "smallness", "norm_report", "QuadratureSpec", "laplace_moment", "pv_integrate",
    "PhysicalParams", "TermBreakdown", "curvature", "rhs_cp0", "rhs_cp1", "rhs_nf",
    "SimConfig", "Trajectory", "BlowUpError", "run", "step",
]
