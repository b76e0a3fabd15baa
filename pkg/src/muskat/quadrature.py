"""Alpha-quadrature rules, principal-value integration and Laplace moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_laguerre

from . import parallel
from .grid_spectral import PeriodicGrid, ScalarField

__all__ = [
    "QuadratureSpec",
    "log_nodes",
    "pv_integrate",
    "laplace_moment",
    "gauss_legendre",
]

LAPLACE_MODES = ("closed_form", "gauss_laguerre")


@dataclass(frozen=True)
class QuadratureSpec:
    """Layout of the symmetric log-spaced alpha nodes and inner rules.

    Attributes
    ----------
    alpha_min, alpha_max : float
        Smallest and largest positive node.  Each node ``a`` is used together
        with ``-a``.
    n_alpha : int
        Nodes per sign.
    inner_order : int
        Gauss-Legendre order of each panel of the inner eta/kappa integrals.
    laplace_mode : {"closed_form", "gauss_laguerre"}
    laguerre_order : int
        Node count when ``laplace_mode == "gauss_laguerre"``.
    """

    alpha_min: float
    alpha_max: float
    n_alpha: int = 256
    inner_order: int = 16
    laplace_mode: str = "closed_form"
    laguerre_order: int = 64

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha_min) and self.alpha_min > 0):
            raise ValueError("alpha_min must be positive")
        if not (math.isfinite(self.alpha_max) and self.alpha_max > 0):
            raise ValueError("alpha_max must be positive")
        if not self.alpha_min < self.alpha_max:
            raise ValueError("alpha_min must be smaller than alpha_max")
        if int(self.n_alpha) != self.n_alpha or self.n_alpha < 32:
            raise ValueError("n_alpha must be an integer >= 32")
        if int(self.inner_order) != self.inner_order or self.inner_order < 2:
            raise ValueError("inner_order must be an integer >= 2")
        if self.laplace_mode not in LAPLACE_MODES:
            raise ValueError(f"laplace_mode must be one of {LAPLACE_MODES}")
        if int(self.laguerre_order) != self.laguerre_order or self.laguerre_order < 1:
            raise ValueError("laguerre_order must be a positive integer")

    @classmethod
    def for_grid(cls, grid: PeriodicGrid, **overrides) -> "QuadratureSpec":
        """Default rule: ``alpha_min = h/4``, ``alpha_max = 4L``, 256 nodes."""
        base = dict(alpha_min=grid.h / 4, alpha_max=4 * grid.length)
        base.update(overrides)
        return cls(**base)

    def refined(self, level: int) -> "QuadratureSpec":
        """Double ``n_alpha`` and ``alpha_max`` ``level`` times."""
        f = 2**level
        return replace(self, n_alpha=self.n_alpha * f, alpha_max=self.alpha_max * f)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return log_nodes(self.alpha_min, self.alpha_max, self.n_alpha)


def log_nodes(alpha_min: float, alpha_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Positive nodes and weights of the trapezoid rule in ``log(alpha)``.

    The weights integrate over ``(0, alpha_max]``: the panel ``(0, alpha_min]``
    is folded into the first node (rectangle rule), which is second order
    for integrands that are smooth and even once paired with ``-alpha``.
    """
    u = np.linspace(math.log(alpha_min), math.log(alpha_max), n)
    a = np.exp(u)
    w = a * (u[1] - u[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    w[0] += alpha_min
    return a, w


def pv_integrate(
    integrand: Callable,
    rule: QuadratureSpec,
    *,
    vectorized: bool = False,
    workers: int | None = None,
):
    """Principal-value integral over ``[-alpha_max, alpha_max]``.

    Returns ``sum_j w_j (F(a_j) + F(-a_j))``.

    Parameters
    ----------
    integrand
        ``alpha -> ScalarField | ndarray``.  With ``vectorized=True`` it
        receives an array of alphas and returns one row per alpha.
    """
    alphas, weights = rule.nodes()
    like: list = []

    def as_rows(vals, al):
        if isinstance(vals, ScalarField):
            like.append(vals.grid)
            vals = vals.values
        vals = np.asarray(vals, dtype=float)
        if vals.ndim == 1:
            vals = vals[None, :]
        bad = np.argwhere(~np.isfinite(vals))
        if bad.size:
            raise ValueError(f"integrand is not finite at alpha = {al[bad[0, 0]]!r}")
        return vals

    def chunk(sl: slice):
        al = alphas[sl]
        if vectorized:
            plus = as_rows(integrand(al), al)
            minus = as_rows(integrand(-al), -al)
        else:
            plus = np.vstack([as_rows(integrand(a), [a]) for a in al])
            minus = np.vstack([as_rows(integrand(-a), [-a]) for a in al])
        return np.sum(weights[sl, None] * (plus + minus), axis=0)

    total = parallel.ordered_sum(chunk, alphas.size, workers=workers)
    if like:
        return ScalarField(like[0], total)
    return total if total.size > 1 else float(total[0])


# --- Laplace moments ---------------------------------------------------------

def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    return _gl01(int(order))


@lru_cache(maxsize=None)
def _gl01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _laguerre(order: int):
    x, w = roots_laguerre(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def laplace_moment(trig: str, n: int, a, *, mode: str = "closed_form", order: int = 64):
    """``int_0^inf g^n exp(-g) trig(a g) dg`` for ``trig`` in {cos, sin}, ``n`` in {0, 1}.

    ``mode="gauss_laguerre"`` evaluates the integral with an ``order``-point
    Gauss-Laguerre rule instead of the closed form.
    """
    if trig not in ("cos", "sin"):
        raise ValueError("trig must be 'cos' or 'sin'")
    if n not in (0, 1):
        raise ValueError("only moments n = 0 and n = 1 are supported")
    a = np.asarray(a, dtype=float)
    if mode == "closed_form":
        q = 1.0 / (1.0 + a * a)
        if n == 0:
            out = q if trig == "cos" else a * q
        else:
            out = (1.0 - a * a) * q * q if trig == "cos" else 2.0 * a * q * q
    elif mode == "gauss_laguerre":
        g, w = _laguerre(int(order))
        fn = np.cos if trig == "cos" else np.sin
        wt = w * g if n == 1 else w
        out = np.tensordot(fn(np.multiply.outer(a, g)), wt, axes=([-1], [0]))
    else:
        raise ValueError(f"unknown laplace mode {mode!r}")
    return out if out.ndim else float(out)


def rule_moment(rule: QuadratureSpec, trig: str, n: int, a):
    """:func:`laplace_moment` with the mode carried by ``rule``."""
    return laplace_moment(trig, n, a, mode=rule.laplace_mode, order=rule.laguerre_order)
