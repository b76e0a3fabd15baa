"""Right-hand side of the Muskat equation with surface tension.

Three formulations are provided:

``rhs_cp0``
    curvature form with the kernel ``(y + f_x delta) / (y**2 + delta**2)``
    acting on ``d/dx tau_y (sigma kappa(f) - g_rho f)``.
``rhs_cp1``
    slope form, ``(1 + f_x Delta) / (1 + Delta**2)`` acting on
    ``tau_a d/dx kappa(f) / a`` plus the gravity term ``d/dx arctan(Delta_a f)``.
``rhs_nf``
    the oscillatory-integral form split into seven labelled terms.

Here ``kappa(f) = f_xx / (1 + f_x**2)**1.5``.  All pointwise nonlinear work
happens on a grid padded by 3/2; results are truncated back (2/3 rule) with
the Nyquist mode set to zero.

Principal values over the whole line are handled in two ways.  ``rhs_cp0``,
``rhs_nf`` and ``rhs_cp1(method="log")`` split off the linear part, whose
principal value is exactly ``pi H``, and integrate the regular remainder on
symmetric log-spaced nodes truncated at ``alpha_max``.  The default
``rhs_cp1(method="lattice")`` sums the whole-line integral over periods in
closed form, ``sum_m 1/(z + m L) = (pi/L) cot(pi z / L)``, and applies the
periodic trapezoid rule on the grid, which involves no truncation at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import parallel
from .difference_ops import eta_symbol
from .grid_spectral import PeriodicGrid, ScalarField, padded_size
from .quadrature import QuadratureSpec, pv_integrate, rule_moment

__all__ = [
    "PhysicalParams",
    "TermBreakdown",
    "curvature",
    "rhs_cp0",
    "rhs_cp1",
    "rhs_nf",
    "evaluate_rhs",
    "FORMULATIONS",
]

FORMULATIONS = ("cp0", "cp1", "nf")


@dataclass(frozen=True)
class PhysicalParams:
    """Surface tension ``sigma`` and gravity times density jump ``g_rho``.

    ``cp0_prefactor`` multiplies the curvature-form integral.  Its default
    ``1/pi`` makes the curvature and slope forms agree.
    """

    sigma: float = 1.0
    g_rho: float = 0.0
    cp0_prefactor: float = 1.0 / math.pi

    def __post_init__(self) -> None:
        for name in ("sigma", "g_rho"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative")
        if not math.isfinite(self.cp0_prefactor):
            raise ValueError("cp0_prefactor must be finite")


@dataclass(frozen=True)
class TermBreakdown:
    commutator: ScalarField
    elliptic: ScalarField
    hfxx: ScalarField
    rem_eta_minus: ScalarField
    rem_eta_plus: ScalarField
    rem_S_minus: ScalarField
    rem_S_plus: ScalarField
    total: ScalarField

    TERMS = (
        "commutator",
        "elliptic",
        "hfxx",
        "rem_eta_minus",
        "rem_eta_plus",
        "rem_S_minus",
        "rem_S_plus",
    )

    def terms(self) -> dict[str, ScalarField]:
        return {name: getattr(self, name) for name in self.TERMS}


# --- shared padded-grid state -------------------------------------------------

class _Padded:
    """Derivatives and curvature pieces of ``f`` on the 3/2-padded grid."""

    def __init__(self, f: ScalarField, rule: QuadratureSpec | None):
        grid = f.grid
        n = grid.n_points
        m = padded_size(n)
        self.grid, self.n, self.m = grid, n, m
        self.pgrid = PeriodicGrid(m, grid.length)
        kp = self.pgrid.k
        F = np.zeros(m // 2 + 1, dtype=complex)
        F[: n // 2] = f.spectral[: n // 2] * (m / n)
        self.k = kp
        self.F = F
        self.f = np.fft.irfft(F, m)
        self.fx = np.fft.irfft(1j * kp * F, m)
        self.fxx = np.fft.irfft(-(kp**2) * F, m)
        self.fxxx = np.fft.irfft(-1j * kp**3 * F, m)

        a = self.fx
        q = 1.0 + a * a
        if rule is None or rule.laplace_mode == "closed_form":
            c0 = 1.0 / q
            s1 = 2.0 * a / (q * q)
        else:
            c0 = rule_moment(rule, "cos", 0, a)
            s1 = rule_moment(rule, "sin", 1, a)
        cc = q**-0.5  # cos(arctan a)
        # weight (1+a^2)^(-3/2) and its x-derivative as Laplace moments
        self.W = cc * c0
        self.dW = -self.fxx * (cc * s1 + a * q**-1.5 * c0)
        self.G = self.fxxx * self.W + self.fxx * self.dW  # d/dx kappa

    def spec(self, v: np.ndarray) -> np.ndarray:
        return np.fft.rfft(v)

    def hilbert(self, v: np.ndarray) -> np.ndarray:
        return np.fft.irfft(-1j * np.sign(self.k) * np.fft.rfft(v), self.m)

    def ddx(self, v: np.ndarray) -> np.ndarray:
        return np.fft.irfft(1j * self.k * np.fft.rfft(v), self.m)

    def down(self, v: np.ndarray) -> ScalarField:
        F = np.fft.rfft(v)[: self.n // 2 + 1] * (self.n / self.m)
        F[-1] = 0.0
        return ScalarField.from_spectral(self.grid, F)


def curvature(f: ScalarField) -> ScalarField:
    """``f_xx / (1 + f_x**2)**1.5``, dealiased."""
    P = _Padded(f, None)
    return P.down(P.fxx * P.W)


# --- lattice-summed (periodic) slope form --------------------------------------

@lru_cache(maxsize=8)
def _lattice(m: int, length: float):
    h = length / m
    j = np.arange(m)
    beta = np.where(j < m // 2, j, j - m) * h
    idx = (np.arange(m)[None, :] - j[:, None]) % m  # row j: x - beta_j
    for arr in (beta, idx):
        arr.setflags(write=False)
    return beta, idx


def _lattice_sums(P: _Padded, sigma: float, g_rho: float, workers=None) -> np.ndarray:
    m, L = P.m, P.grid.length
    h = L / m
    c = math.pi / L
    beta, idx = _lattice(m, L)
    f, a, fx, fxx, G = P.f, P.fx, P.fx, P.fxx, P.G
    with np.errstate(divide="ignore", invalid="ignore"):
        cot_b = c / np.tan(c * beta)
    cot_b[0] = 0.0
    cot_b[m // 2] = 0.0

    def chunk(sl: slice) -> np.ndarray:
        rows = idx[sl]
        b = beta[sl, None]
        delta = f[None, :] - f[rows]
        with np.errstate(divide="ignore", invalid="ignore"):
            ck = c / np.tan(c * (b - 1j * delta))
        out = np.zeros(m)
        zero = b[:, 0] == 0.0
        if sigma:
            K = (ck.real + a[None, :] * ck.imag) - cot_b[sl, None]
            if np.any(zero):
                K[zero] = a * fxx / (2.0 * (1.0 + a * a))
            out = out + sigma * np.sum(K * G[rows], axis=0)
        if g_rho:
            with np.errstate(invalid="ignore"):
                Kg = (fx[None, :] - fx[rows]) * ck.real
            if np.any(zero):
                Kg[zero] = fxx / (1.0 + a * a)
            out = out + g_rho * np.sum(Kg, axis=0)
        return out

    total = parallel.ordered_sum(chunk, m, workers=workers) * (h / math.pi)
    if sigma:
        # the subtracted cot(beta) part is exactly the periodic Hilbert transform
        total = total + sigma * P.hilbert(G)
    return total


def _log_remainders(P: _Padded, kernel_fn, rule: QuadratureSpec, workers=None) -> np.ndarray:
    """pv integral of ``kernel_fn`` over symmetric log nodes on the padded grid."""
    m = P.m
    Ff = P.F

    def integrand(al: np.ndarray) -> np.ndarray:
        tf = np.fft.irfft(np.exp(-1j * np.multiply.outer(al, P.k)) * Ff[None, :], m, axis=1)
        return kernel_fn(al, tf)

    return pv_integrate(integrand, rule, vectorized=True, workers=workers)


def _shift_rows(P: _Padded, spec: np.ndarray, al: np.ndarray) -> np.ndarray:
    return np.fft.irfft(np.exp(-1j * np.multiply.outer(al, P.k)) * spec[None, :], P.m, axis=1)


def _default_rule(f: ScalarField, rule: QuadratureSpec | None) -> QuadratureSpec:
    return QuadratureSpec.for_grid(f.grid) if rule is None else rule


def rhs_cp1(
    f: ScalarField,
    p: PhysicalParams,
    rule: QuadratureSpec | None = None,
    *,
    method: str = "lattice",
    workers: int | None = None,
) -> ScalarField:
    """Slope-form right-hand side.

    ``method="lattice"`` (default) uses the closed-form sum over periods;
    ``method="log"`` uses the truncated log-node rule from ``rule``.
    """
    P = _Padded(f, rule)
    if method == "lattice":
        return P.down(_lattice_sums(P, p.sigma, p.g_rho, workers))
    if method != "log":
        raise ValueError("method must be 'lattice' or 'log'")
    rule = _default_rule(f, rule)
    spec_G = P.spec(P.G)
    spec_fx = P.spec(P.fx)
    f0, a = P.f, P.fx

    def kern(al, tf):
        D = (f0[None, :] - tf) / al[:, None]
        inv = 1.0 / (1.0 + D * D)
        out = np.zeros_like(D)
        if p.sigma:
            tG = _shift_rows(P, spec_G, al)
            out += p.sigma * (a[None, :] * D - D * D) * inv * tG / al[:, None]
        if p.g_rho:
            tfx = _shift_rows(P, spec_fx, al)
            out -= p.g_rho * (a[None, :] - tfx) * D * D * inv / al[:, None]
        return out

    rem = _log_remainders(P, kern, rule, workers)
    lin = p.sigma * math.pi * P.hilbert(P.G) - p.g_rho * math.pi * P.hilbert(P.fx)
    return P.down((lin + rem) / math.pi)


def rhs_cp0(
    f: ScalarField,
    p: PhysicalParams,
    rule: QuadratureSpec | None = None,
    *,
    workers: int | None = None,
) -> ScalarField:
    """Curvature-form right-hand side, scaled by ``p.cp0_prefactor``."""
    rule = _default_rule(f, rule)
    P = _Padded(f, rule)
    Q = p.sigma * P.G - p.g_rho * P.fx
    spec_Q = P.spec(Q)
    f0, a = P.f, P.fx

    def kern(al, tf):
        dl = f0[None, :] - tf
        y = al[:, None]
        # (y + a dl)/(y^2 + dl^2) - 1/y, written without cancellation
        K = dl * (a[None, :] * y - dl) / (y * (y * y + dl * dl))
        return K * _shift_rows(P, spec_Q, al)

    rem = _log_remainders(P, kern, rule, workers)
    return P.down(p.cp0_prefactor * (math.pi * P.hilbert(Q) + rem))


def rhs_nf(
    f: ScalarField,
    sigma: float,
    rule: QuadratureSpec | None = None,
    *,
    workers: int | None = None,
) -> TermBreakdown:
    """Seven-term oscillatory-integral form of the surface-tension part.

    With ``W = (1 + f_x**2)**-1.5``, ``G = d/dx kappa(f)``, ``M = Delta/(1+Delta**2)``
    (a sine Laplace moment of ``Delta``) and ``E_a = (1/a) int_0^a s_eta f_x``:

    * commutator ``d/dx (H(W f_xx) - W H f_xx)``
    * elliptic ``-W Lambda^3 f``
    * hfxx ``H(f_xx) d/dx W``
    * rem_eta_-/+ ``(1/4pi) pv int E (M -/+ Mbar) tau_a G / a``
    * rem_S_-/+ ``-(1/4pi) pv int S (M -/+ Mbar) tau_a G / a``

    each multiplied by ``sigma``.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError("sigma must be positive")
    rule = _default_rule(f, rule)
    P = _Padded(f, rule)
    n, m = P.n, P.m
    k = P.k

    fxx_h = P.hilbert(P.fxx)
    comm = P.ddx(P.hilbert(P.W * P.fxx) - P.W * fxx_h)
    lam3 = np.fft.irfft(np.abs(k) ** 3 * P.F, m)
    ell = -P.W * lam3
    hf = fxx_h * P.dW

    spec_G = P.spec(P.G)
    spec_fx = P.spec(P.fx)
    k_low = f.grid.k
    f0 = P.f

    def kern(al, tf):
        tfm = _shift_rows(P, P.F, -al)  # f(x + a)
        y = al[:, None]
        D = (f0[None, :] - tf) / y
        Db = (f0[None, :] - tfm) / y
        S = D + Db
        Ms = rule_moment(rule, "sin", 0, D)
        Mb = rule_moment(rule, "sin", 0, Db)
        E = np.empty_like(D)
        for i, a in enumerate(al):
            sym = np.zeros(k.size)
            sym[: k_low.size] = eta_symbol(k_low, a, rule.inner_order, f.grid.k_max)
            E[i] = np.fft.irfft(sym * spec_fx, m)
        base = _shift_rows(P, spec_G, al) / (4.0 * math.pi * y)
        minus = (Ms - Mb) * base
        plus = (Ms + Mb) * base
        return np.hstack([E * minus, E * plus, -S * minus, -S * plus])

    rem = _log_remainders(P, kern, rule, workers).reshape(4, m)
    parts = [comm, ell, hf, rem[0], rem[1], rem[2], rem[3]]
    downs = [P.down(sigma * v) for v in parts]
    total = ScalarField(f.grid, np.sum([d.values for d in downs], axis=0))
    return TermBreakdown(*downs, total=total)


def evaluate_rhs(
    f: ScalarField,
    p: PhysicalParams,
    rule: QuadratureSpec | None = None,
    formulation: str = "cp1",
    *,
    workers: int | None = None,
) -> ScalarField:
    """Dispatch on ``formulation``; ``nf`` adds the slope-form gravity term."""
    if formulation == "cp1":
        return rhs_cp1(f, p, rule, workers=workers)
    if formulation == "cp0":
        return rhs_cp0(f, p, rule, workers=workers)
    if formulation == "nf":
        out = ScalarField.zeros(f.grid)
        if p.sigma > 0:
            out = rhs_nf(f, p.sigma, rule, workers=workers).total
        if p.g_rho > 0:
            out = out + rhs_cp1(f, PhysicalParams(0.0, p.g_rho), rule, workers=workers)
        return out
    raise ValueError(f"unknown formulation {formulation!r}; expected one of {FORMULATIONS}")
