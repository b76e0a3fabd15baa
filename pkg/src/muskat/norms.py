"""Sobolev, Besov and Lebesgue norms, the smallness functional and Hoelder checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import zeta

from .difference_ops import DiffOpKind, diff_symbol
from .grid_spectral import ScalarField, derivative
from .quadrature import QuadratureSpec, log_nodes

__all__ = [
    "NormReport",
    "sobolev",
    "besov",
    "lp",
    "smallness",
    "interp_check",
    "norm_report",
    "DEFAULT_C",
]

DEFAULT_C = 12.0
SOBOLEV_RANGE = (0.0, 4.5)


@dataclass(frozen=True)
class NormReport:
    l2: float
    h32: float
    h3: float
    h52: float
    h4: float
    b1_inf_1: float
    lip: float
    smallness: float
    time: float = 0.0
    h2: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _mode_weights(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """``|c_k|^2`` times multiplicity for the rfft half spectrum, without k = 0."""
    n = f.grid.n_points
    c = f.spectral / n
    p = np.abs(c) ** 2
    mult = np.full(p.shape, 2.0)
    mult[0] = 0.0
    mult[-1] = 1.0
    return f.grid.k, p * mult


def sobolev(f: ScalarField, s: float) -> float:
    """Homogeneous ``H^s`` seminorm ``||Lambda^s f||_{L^2}`` (mean excluded)."""
    lo, hi = SOBOLEV_RANGE
    if not lo <= s <= hi:
        raise ValueError(f"s must lie in [{lo}, {hi}], got {s}")
    k, p = _mode_weights(f)
    return math.sqrt(f.grid.length * float(np.sum(np.abs(k) ** (2 * s) * p)))


def lp(f: ScalarField, p: float) -> float:
    """Trapezoidal ``L^p`` norm; ``p = inf`` gives the max of ``|f|``.

    The maximum is taken over the band-limited interpolant rather than the
    nodes, so it does not depend on where the grid sits.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        return float(sup_rows(f.spectral[None, :], f.grid.n_points, f.grid.length)[0])
    v = np.abs(f.values)
    return float((f.grid.h * np.sum(v**p)) ** (1.0 / p))


def sup_rows(coeffs: np.ndarray, n: int, length: float, *, upsample: int = 4,
             candidates: int = 2, newton: int = 3) -> np.ndarray:
    """``max |u|`` of the trigonometric interpolant of every row of rfft ``coeffs``.

    Each row is sampled on a grid ``upsample`` times finer; the largest few
    samples seed Newton iterations on ``u' = 0``.
    """
    coeffs = np.atleast_2d(coeffs)
    rows, half = coeffs.shape
    w = np.full(half, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    c = coeffs * (w / n)
    c[:, -1] = c[:, -1].real
    m = upsample * n
    pad = np.zeros((rows, m // 2 + 1), dtype=complex)
    pad[:, :half] = 0.5 * c * m
    pad[:, 0] = c[:, 0] * m
    fine = np.fft.irfft(pad, m, axis=1)
    best = np.max(np.abs(fine), axis=1)
    if not np.any(best):
        return best
    idx = np.argpartition(-np.abs(fine), candidates - 1, axis=1)[:, :candidates]
    k = 2 * math.pi / length * np.arange(half)
    dx = length / m
    x0 = idx * dx
    x = x0.copy()
    for _ in range(newton):
        ce = c[:, None, :] * _phases(x, length, half)
        d1 = np.real(1j * k * ce).sum(-1)
        d2 = np.real(-(k * k) * ce).sum(-1)
        step = np.divide(d1, d2, out=np.zeros_like(d1), where=d2 != 0)
        x = x - np.clip(step, -dx, dx)
    u = np.real(c[:, None, :] * _phases(x, length, half)).sum(-1)
    ok = np.abs(x - x0) <= dx
    refined = np.max(np.where(ok, np.abs(u), 0.0), axis=1)
    return np.maximum(best, refined)


def _phases(x: np.ndarray, length: float, half: int) -> np.ndarray:
    # exp(i k x) for k = 0..half-1 by repeated multiplication (cheaper than exp)
    out = np.empty(x.shape + (half,), dtype=complex)
    out[..., 0] = 1.0
    out[..., 1:] = np.exp(2j * math.pi / length * x)[..., None]
    return np.cumprod(out, axis=-1, out=out)


def _row_lp(rows: np.ndarray, h: float, p: float, coeffs, length: float) -> np.ndarray:
    if math.isinf(p):
        return sup_rows(coeffs, rows.shape[1], length)
    return (h * np.sum(np.abs(rows) ** p, axis=1)) ** (1.0 / p)


def besov(
    f: ScalarField,
    s: float,
    p: float,
    q: float,
    rule: QuadratureSpec | None = None,
    *,
    alpha_max: float | None = None,
    periodic_images: bool = False,
) -> float:
    """Difference-based homogeneous Besov seminorm.

    First differences are used for ``0 < s < 1`` and second differences
    ``s_a`` for ``1 <= s < 2``.  The ``alpha`` integral runs over
    ``+-(0, alpha_max]`` (default ``L/2``) on the rule's log-spaced nodes.

    With ``periodic_images=True`` the integral is taken over the whole real
    line instead, by summing the kernel ``|alpha|**-(s q + 1)`` over all
    periods (Hurwitz zeta).  ``alpha_max`` is then fixed to ``L/2``.
    """
    if not 0 < s < 2:
        raise ValueError("s must lie in (0, 2)")
    if not (p >= 1 and q >= 1):
        raise ValueError("p and q must be >= 1")
    grid = f.grid
    L = grid.length
    amax = L / 2 if alpha_max is None or periodic_images else float(alpha_max)
    if not amax > 0:
        raise ValueError("alpha_max must be positive")
    rule = QuadratureSpec.for_grid(grid) if rule is None else rule
    amin = min(rule.alpha_min, 0.5 * amax)
    alphas, weights = log_nodes(amin, amax, rule.n_alpha)

    kind = DiffOpKind.DELTA if s < 1 else DiffOpKind.S_SECOND
    sym = diff_symbol(kind, grid.k, alphas)
    sym[:, -1] = sym[:, -1].real
    rows = np.fft.irfft(sym * f.spectral[None, :], grid.n_points, axis=1)
    phi = _row_lp(rows, grid.h, p, sym * f.spectral[None, :], L)
    # first differences with -alpha have the same L^p norm; second ones are even

    if math.isinf(q):
        return float(np.max(phi / alphas**s))

    rho = s * q + 1.0
    if periodic_images:
        t = alphas / L
        kern = L**-rho * (zeta(rho, t) + zeta(rho, 1.0 - t))
    else:
        kern = alphas**-rho
    vals = phi**q * kern

    # replace the crude near-origin rectangle by a power-law fit
    w = weights.copy()
    w[0] -= amin
    head = amin * vals[0]
    if vals[0] > 0 and vals[1] > 0:
        gamma = 1.0 + math.log(vals[1] / vals[0]) / math.log(alphas[1] / alphas[0])
        if gamma > 0.05:
            head = amin * vals[0] / gamma
    total = 2.0 * (float(np.sum(w * vals)) + head)
    return total ** (1.0 / q)


def smallness(
    f: ScalarField,
    C: float = DEFAULT_C,
    rule: QuadratureSpec | None = None,
    *,
    h32: float | None = None,
    b1: float | None = None,
    lip: float | None = None,
) -> float:
    """``(C X + C X**4 + X B)(1 + lip**2)**1.5`` with ``X = |f|_{H^3/2}``, ``B = |f|_{B^1_inf,1}``."""
    if not C > 0:
        raise ValueError("C must be positive")
    X = sobolev(f, 1.5) if h32 is None else h32
    B = besov(f, 1.0, math.inf, 1.0, rule) if b1 is None else b1
    Lp = lp(derivative(f), math.inf) if lip is None else lip
    return (C * X + C * X**4 + X * B) * (1.0 + Lp * Lp) ** 1.5


def interp_check(f: ScalarField, s1: float, s2: float, theta: float) -> dict:
    """Hoelder interpolation ``|f|_{th s1 + (1-th) s2} <= |f|_{s1}^th |f|_{s2}^(1-th)``."""
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    lhs = sobolev(f, theta * s1 + (1 - theta) * s2)
    rhs = sobolev(f, s1) ** theta * sobolev(f, s2) ** (1 - theta)
    return {"lhs": lhs, "rhs": rhs, "ok": bool(lhs <= rhs * (1 + 1e-12))}


def norm_report(
    f: ScalarField,
    C: float = DEFAULT_C,
    rule: QuadratureSpec | None = None,
    time: float = 0.0,
) -> NormReport:
    h32 = sobolev(f, 1.5)
    b1 = besov(f, 1.0, math.inf, 1.0, rule)
    lip = lp(derivative(f), math.inf)
    return NormReport(
        l2=lp(f, 2),
        h32=h32,
        h3=sobolev(f, 3.0),
        h52=sobolev(f, 2.5),
        h4=sobolev(f, 4.0),
        b1_inf_1=b1,
        lip=lip,
        smallness=smallness(f, C, rule, h32=h32, b1=b1, lip=lip),
        time=float(time),
        h2=sobolev(f, 2.0),
    )
