"""Periodic grids, real-valued fields and Fourier multipliers.

All spectral work uses the real FFT.  A field on ``n`` nodes is stored by
its nodal values; the half-spectrum ``numpy.fft.rfft(values)`` is computed
on first use and cached.  Because fields never change after construction
the cache can never go stale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "PeriodicGrid",
    "ScalarField",
    "make_grid",
    "sample",
    "multiplier",
    "derivative",
    "hilbert",
    "frac_laplacian",
    "shift",
    "reflect",
    "product",
    "padded_size",
    "upsample",
    "downsample",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on ``[0, length)`` with ``n_points`` nodes."""

    n_points: int
    length: float

    def __post_init__(self) -> None:
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValueError("n_points must be an integer")
        object.__setattr__(self, "n_points", int(n))
        if self.n_points % 2:
            raise ValueError("n_points must be even")
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValueError("length must be positive and finite")
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n_points) * self.h
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Non-negative wavenumbers matching the ``rfft`` layout."""
        k = 2.0 * np.pi / self.length * np.arange(self.n_points // 2 + 1)
        k.setflags(write=False)
        return k

    @property
    def k_max(self) -> float:
        return float(self.k[-1])

    def wavenumbers(self) -> np.ndarray:
        """All wavenumbers ``2*pi*j/L`` for ``j = -n/2+1, ..., n/2``."""
        j = np.arange(-self.n_points // 2 + 1, self.n_points // 2 + 1)
        return 2.0 * np.pi * j / self.length


def make_grid(n_points: int, length: float = 2.0 * np.pi) -> PeriodicGrid:
    return PeriodicGrid(n_points, length)


class ScalarField:
    """Immutable real field sampled on a :class:`PeriodicGrid`.

    Parameters
    ----------
    grid : PeriodicGrid
    values : array_like
        One finite real value per node.
    """

    __slots__ = ("grid", "values", "_spectral")

    def __init__(self, grid: PeriodicGrid, values, *, _spectral=None):
        vals = np.array(values, dtype=float, copy=True).reshape(-1)
        if vals.shape[0] != grid.n_points:
            raise ValueError(
                f"expected {grid.n_points} values, got {vals.shape[0]}"
            )
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            j = int(bad[0])
            raise ValueError(
                f"non-finite value {vals[j]!r} at node {j} (x = {j * grid.h:.17g})"
            )
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals
        self._spectral = _spectral

    @classmethod
    def from_spectral(cls, grid: PeriodicGrid, coeffs) -> "ScalarField":
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n_points // 2 + 1,):
            raise ValueError("coefficient array does not match the grid")
        coeffs = coeffs.copy()
        coeffs.setflags(write=False)
        return cls(grid, np.fft.irfft(coeffs, grid.n_points), _spectral=coeffs)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n_points))

    @property
    def spectral(self) -> np.ndarray:
        """Half-spectrum ``rfft(values)`` (filled once, read-only)."""
        if self._spectral is None:
            c = np.fft.rfft(self.values)
            c.setflags(write=False)
            self._spectral = c
        return self._spectral

    def mean(self) -> float:
        return float(self.spectral[0].real / self.grid.n_points)

    def _check(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return product(self, other)
        return ScalarField(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / float(other))

    def __repr__(self) -> str:
        return f"ScalarField(n={self.grid.n_points}, L={self.grid.length:g})"


def sample(grid: PeriodicGrid, fn: Callable[[float], float]) -> ScalarField:
    """Sample ``fn`` at the grid nodes; ``fn`` may be scalar or vectorised."""
    try:
        vals = np.asarray(fn(grid.x), dtype=float)
        if vals.shape != grid.x.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(fn(float(xj))) for xj in grid.x])
    with np.errstate(all="ignore"):
        return ScalarField(grid, vals)


def _symbol_half(grid: PeriodicGrid, symbol, tol: float = 1e-12) -> np.ndarray:
    """Evaluate ``symbol`` on the rfft half-spectrum and check realness."""
    k = grid.k
    pos = np.asarray(symbol(k), dtype=complex) * np.ones_like(k)
    neg = np.asarray(symbol(-k), dtype=complex) * np.ones_like(k)
    scale = max(1.0, float(np.max(np.abs(pos[np.isfinite(pos)]), initial=0.0)))
    inner = slice(1, -1)
    if np.any(np.abs(neg[inner] - np.conj(pos[inner])) > tol * scale):
        raise ValueError("symbol is not conjugate-symmetric; output would not be real")
    if abs(pos[0].imag) > tol * scale:
        raise ValueError("symbol has a non-real mean-mode value")
    out = pos.copy()
    out[0] = pos[0].real
    # The Nyquist mode is its own mirror image; only the even part survives.
    out[-1] = 0.5 * (pos[-1] + neg[-1]).real
    return out


def multiplier(f: ScalarField, symbol, *, zero_mean: bool = False) -> ScalarField:
    """Apply the Fourier multiplier ``symbol(k)`` to ``f``.

    ``symbol`` is called with arrays of wavenumbers (both signs) and must
    satisfy ``symbol(-k) == conj(symbol(k))``.  Pass ``zero_mean=True`` to
    discard the mean mode when ``symbol(0)`` is undefined.
    """
    if zero_mean:
        with np.errstate(all="ignore"):
            sym = _symbol_half_masked(f.grid, symbol)
    else:
        sym = _symbol_half(f.grid, symbol)
        if not np.all(np.isfinite(sym)):
            raise ValueError("symbol is not finite; pass zero_mean=True to drop k = 0")
    return ScalarField.from_spectral(f.grid, sym * f.spectral)


def _symbol_half_masked(grid: PeriodicGrid, symbol) -> np.ndarray:
    def safe(k):
        k = np.asarray(k, dtype=float)
        kk = np.where(k == 0, 1.0, k)
        return np.where(k == 0, 0.0, np.asarray(symbol(kk), dtype=complex))

    sym = _symbol_half(grid, safe)
    sym[0] = 0.0
    return sym


def derivative(f: ScalarField, order: int = 1) -> ScalarField:
    if order < 0:
        raise ValueError("order must be non-negative")
    return multiplier(f, lambda k: (1j * k) ** order)


def hilbert(f: ScalarField) -> ScalarField:
    """Hilbert transform, symbol ``-i sign(k)``; kills the mean."""
    return multiplier(f, lambda k: -1j * np.sign(k))


def frac_laplacian(f: ScalarField, s: float) -> ScalarField:
    """``Lambda^s f`` with symbol ``|k|^s`` (mean removed for ``s > 0``)."""
    if s == 0:
        return f
    return multiplier(f, lambda k: np.abs(k) ** s, zero_mean=s < 0)


def shift(f: ScalarField, alpha: float) -> ScalarField:
    """Return ``x -> f(x - alpha)`` via the phase factor ``exp(-i k alpha)``."""
    a = math.remainder(float(alpha), f.grid.length)
    if a == 0.0:
        return f
    return multiplier(f, lambda k: np.exp(-1j * k * a))


def reflect(f: ScalarField) -> ScalarField:
    """``x -> f(-x)``; exact on the grid (node ``j`` maps to ``-j mod n``)."""
    return ScalarField(f.grid, np.roll(f.values[::-1], 1))


# --- dealiasing --------------------------------------------------------------

def padded_size(n: int) -> int:
    """Smallest even size >= 3n/2 (the 2/3 rule)."""
    m = -(-3 * n // 2)
    return m + (m % 2)


def upsample(values: np.ndarray, m: int, *, spectral: np.ndarray | None = None) -> np.ndarray:
    """Trigonometric interpolation of ``n`` samples onto ``m >= n`` nodes.

    Works along the last axis.  The Nyquist coefficient of the source is
    split evenly between the two mirror modes.
    """
    n = values.shape[-1]
    F = np.fft.rfft(values, axis=-1) if spectral is None else spectral
    G = np.zeros(F.shape[:-1] + (m // 2 + 1,), dtype=complex)
    G[..., : n // 2 + 1] = F
    if m > n:
        G[..., n // 2] *= 0.5
    return np.fft.irfft(G * (m / n), m, axis=-1)


def downsample(values: np.ndarray, n: int) -> np.ndarray:
    """Spectral truncation from ``m`` nodes to ``n``; the Nyquist mode is zeroed."""
    F = truncated_spectrum(values, n)
    return np.fft.irfft(F, n, axis=-1)


def truncated_spectrum(values: np.ndarray, n: int) -> np.ndarray:
    m = values.shape[-1]
    F = np.fft.rfft(values, axis=-1)[..., : n // 2 + 1] * (n / m)
    F[..., -1] = 0.0
    return F


def product(f: ScalarField, g: ScalarField) -> ScalarField:
    """Dealiased pointwise product (products formed on a 3/2-padded grid)."""
    f._check(g)
    n = f.grid.n_points
    m = padded_size(n)
    pf = upsample(f.values, m, spectral=f.spectral)
    pg = upsample(g.values, m, spectral=g.spectral)
    return ScalarField.from_spectral(f.grid, truncated_spectrum(pf * pg, n))
