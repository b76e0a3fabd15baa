"""Finite-difference operator algebra in the shift parameter ``alpha``.

Notation (``tau_a f(x) = f(x - a)``)::

    delta_a f     = f - tau_a f            bar_delta_a f = f - tau_{-a} f
    slope_a f     = delta_a f / a          bar_slope_a f = bar_delta_a f / a
    s_a f         = 2f - tau_a f - tau_{-a} f
    d_a f         = tau_{-a} f - tau_a f   (= f(x+a) - f(x-a))
    S_a f         = slope + bar_slope      D_a f = slope - bar_slope

The inner integration variable of the eta/kappa integrals is called ``eta``
throughout; it is unrelated to the curvature.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .grid_spectral import ScalarField, derivative, hilbert, product
from .quadrature import QuadratureSpec, gauss_legendre

__all__ = [
    "DiffOpKind",
    "apply",
    "diff_symbol",
    "dS_dalpha_closed",
    "d2S_dalpha_closed",
    "dD_dalpha_closed",
    "d2D_dalpha_closed",
    "eta_integral",
    "eta_symbol",
    "hilbert_commutator",
]


class DiffOpKind(enum.Enum):
    DELTA = "delta"
    BAR_DELTA = "bar_delta"
    SLOPE = "slope"
    BAR_SLOPE = "bar_slope"
    S_SECOND = "s_second"
    D_CENTERED = "d_centered"
    S_SYM = "S_sym"
    D_SYM = "D_sym"

    @property
    def normalized(self) -> bool:
        return self in _NORMALIZED


_NORMALIZED = {DiffOpKind.SLOPE, DiffOpKind.BAR_SLOPE, DiffOpKind.S_SYM, DiffOpKind.D_SYM}


def diff_symbol(kind: DiffOpKind | str, k: np.ndarray, alpha) -> np.ndarray:
    """Fourier symbol of a difference operator.

    Written without the cancellation in ``1 - cos``, e.g. the symbol of
    ``s_a`` is ``4 sin(k a / 2)**2`` rather than ``2 - 2 cos(k a)``.
    ``alpha`` may be an array; the result then has one row per alpha.
    """
    kind = DiffOpKind(kind)
    ka = np.multiply.outer(alpha, k)
    half = 2.0 * np.sin(0.5 * ka) ** 2
    if kind in (DiffOpKind.DELTA, DiffOpKind.SLOPE):
        sym = half + 1j * np.sin(ka)
    elif kind in (DiffOpKind.BAR_DELTA, DiffOpKind.BAR_SLOPE):
        sym = half - 1j * np.sin(ka)
    elif kind in (DiffOpKind.S_SECOND, DiffOpKind.S_SYM):
        sym = (2.0 * half).astype(complex)
    else:
        sym = 2j * np.sin(ka)
    if kind.normalized:
        sym = sym / np.asarray(alpha, dtype=float)[..., None] if np.ndim(alpha) else sym / alpha
    return sym


def apply(kind: DiffOpKind | str, f: ScalarField, alpha: float) -> ScalarField:
    """Evaluate a difference operator, e.g. ``s_a f = 2f - tau_a f - tau_{-a} f``.

    The combination of shifted copies is formed in Fourier space in one
    multiplication, which keeps small differences free of cancellation.
    """
    kind = DiffOpKind(kind)
    alpha = float(alpha)
    if kind.normalized and alpha == 0.0:
        raise ZeroDivisionError("division by zero shift")
    a = math.remainder(alpha, f.grid.length) if not kind.normalized else alpha
    sym = diff_symbol(kind, f.grid.k, a)
    # Nyquist mode: keep the even part of the symbol only
    sym[-1] = sym[-1].real
    return ScalarField.from_spectral(f.grid, sym * f.spectral)


def _nonzero(alpha: float) -> float:
    alpha = float(alpha)
    if alpha == 0.0:
        raise ZeroDivisionError("division by zero shift")
    return alpha


def _s(f, a):
    return apply(DiffOpKind.S_SECOND, f, a).values


def _d(f, a):
    return apply(DiffOpKind.D_CENTERED, f, a).values


# --- eta integral --------------------------------------------------------------

def eta_panels(alpha: float, k_band: float, order: int) -> int:
    """Panel count so that each panel spans at most ``order / (2 k_band)``."""
    if k_band <= 0:
        return 1
    return max(1, math.ceil(abs(alpha) * k_band * 2.0 / order))


def eta_symbol(k: np.ndarray, alpha: float, order: int, k_band: float | None = None) -> np.ndarray:
    """Symbol of ``g -> (1/alpha) int_0^alpha s_eta g d eta`` by composite Gauss-Legendre."""
    alpha = _nonzero(alpha)
    k = np.asarray(k, dtype=float)
    if k_band is None:
        k_band = float(np.max(np.abs(k), initial=0.0))
    a = abs(alpha)
    panels = eta_panels(a, k_band, order)
    x, w = gauss_legendre(order)
    width = a / panels
    eta = ((np.arange(panels)[:, None] + x[None, :]) * width).ravel()
    wts = np.tile(w, panels) * width
    # (1/a) sum_q w_q s-symbol(k eta_q)
    return (4.0 * np.sin(0.5 * np.multiply.outer(k, eta)) ** 2 @ wts) / a


def eta_integral(g: ScalarField, alpha: float, rule: QuadratureSpec) -> ScalarField:
    """``(1/alpha) int_0^alpha s_eta g d eta`` with the rule's inner order."""
    sym = eta_symbol(g.grid.k, alpha, rule.inner_order, g.grid.k_max)
    return ScalarField.from_spectral(g.grid, sym * g.spectral)


# --- closed-form alpha derivatives --------------------------------------------

def dS_dalpha_closed(f: ScalarField, alpha: float) -> ScalarField:
    """``d/da S_a f = -d_a f_x / a - s_a f / a**2``."""
    a = _nonzero(alpha)
    fx = derivative(f)
    return ScalarField(f.grid, -_d(fx, a) / a - _s(f, a) / a**2)


def d2S_dalpha_closed(f: ScalarField, alpha: float, rule: QuadratureSpec) -> ScalarField:
    """Second alpha-derivative of ``S_a f``.

    ``s_a f_xx / a - J / a**2 + d_a f_x / a**2 + 2 s_a f / a**3`` where
    ``J = int_0^a s_eta f_xx d eta``.
    """
    a = _nonzero(alpha)
    fx = derivative(f)
    fxx = derivative(f, 2)
    J = a * eta_integral(fxx, a, rule).values
    out = _s(fxx, a) / a - J / a**2 + _d(fx, a) / a**2 + 2.0 * _s(f, a) / a**3
    return ScalarField(f.grid, out)


def dD_dalpha_closed(f: ScalarField, alpha: float, rule: QuadratureSpec) -> ScalarField:
    """``d/da D_a f = -s_a f_x / a + (1/a**2) int_0^a s_eta f_x d eta``."""
    a = _nonzero(alpha)
    fx = derivative(f)
    J = a * eta_integral(fx, a, rule).values
    return ScalarField(f.grid, -_s(fx, a) / a + J / a**2)


def d2D_dalpha_closed(f: ScalarField, alpha: float, rule: QuadratureSpec) -> ScalarField:
    """``d_a f_xx / a + 2 s_a f_x / a**2 - (2/a**3) int_0^a s_eta f_x d eta``."""
    a = _nonzero(alpha)
    fx = derivative(f)
    fxx = derivative(f, 2)
    J = a * eta_integral(fx, a, rule).values
    out = _d(fxx, a) / a + 2.0 * _s(fx, a) / a**2 - 2.0 * J / a**3
    return ScalarField(f.grid, out)


def hilbert_commutator(g: ScalarField, h: ScalarField) -> ScalarField:
    """``[H, g] h = H(g h) - g H(h)`` with dealiased products."""
    if g.grid != h.grid:
        raise ValueError("fields live on different grids")
    return hilbert(product(g, h)) - product(g, hilbert(h))


def shift_rows(spectral: np.ndarray, k: np.ndarray, alphas: np.ndarray, n: int) -> np.ndarray:
    """Rows ``tau_a f`` for every ``a`` in ``alphas`` (batched phase shifts)."""
    phase = np.exp(-1j * np.multiply.outer(alphas, k))
    return np.fft.irfft(phase * spectral[None, :], n, axis=1)
