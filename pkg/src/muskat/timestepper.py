"""ETD-RK2 time integration of ``f_t = RHS(f)``.

The linear part ``L(k) = -sigma |k|^3 - c_g g_rho |k|`` is integrated
exactly; the remainder ``N(f) = RHS(f) - L f`` is treated explicitly with
the second-order Cox-Matthews exponential Runge-Kutta scheme::

    a   = e^{z} u + dt phi1(z) N(u)
    u+  = a + dt phi2(z) (N(a) - N(u)),        z = dt L(k)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .grid_spectral import PeriodicGrid, ScalarField
from .monitor import EnergyReport, energy_report
from .norms import DEFAULT_C, NormReport, norm_report, smallness
from .quadrature import QuadratureSpec
from .rhs_muskat import FORMULATIONS, PhysicalParams, evaluate_rhs

__all__ = [
    "SimConfig",
    "Trajectory",
    "BlowUpError",
    "linear_symbol",
    "step",
    "run",
    "growth_rate",
    "fit_gravity_constant",
    "scale_to_smallness",
    "DEFAULT_C_STAB",
]

# dt * (sigma k_max^3 + g_rho k_max) may reach this value; see stability_cap
DEFAULT_C_STAB = 1.0e4
EXPLOSION_FACTOR = 1.0e6


@dataclass(frozen=True)
class SimConfig:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    grid: PeriodicGrid = field(default_factory=lambda: PeriodicGrid(256, 2 * math.pi))
    quad: QuadratureSpec | None = None
    dt: float = 1e-3
    t_end: float = 1.0
    formulation: str = "cp1"
    report_every: int = 1
    seed: int = 0
    c_stab: float = DEFAULT_C_STAB
    c_g: float = 1.0
    smallness_C: float = DEFAULT_C
    halt_on_smallness: bool = True
    init: str = "zero"
    init_smallness: float | None = None
    snapshot_every: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError("t_end must be positive")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if int(self.report_every) != self.report_every or self.report_every < 1:
            raise ValueError("report_every must be a positive integer")
        if not self.c_stab > 0:
            raise ValueError("c_stab must be positive")
        if not self.c_g >= 0:
            raise ValueError("c_g must be non-negative")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be non-negative")
        if self.dt > self.stability_cap:
            raise ValueError(
                f"dt = {self.dt:g} exceeds the stability cap {self.stability_cap:.6g}"
            )

    @property
    def rule(self) -> QuadratureSpec:
        return QuadratureSpec.for_grid(self.grid) if self.quad is None else self.quad

    @property
    def stability_cap(self) -> float:
        km = self.grid.k_max
        p = self.params
        return self.c_stab / (p.sigma * km**3 + p.g_rho * km + 1e-12)


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    reports: list[NormReport] = field(default_factory=list)
    energies: list[EnergyReport] = field(default_factory=list)
    means: list[float] = field(default_factory=list)
    final_field: ScalarField | None = None
    snapshots: list[tuple[float, ScalarField]] = field(default_factory=list)
    steps: int = 0
    halted: bool = False
    halt_step: int | None = None
    halt_reason: str | None = None

    def records(self) -> list[dict]:
        out = []
        for nr, er in zip(self.reports, self.energies):
            d = nr.as_dict()
            d.update(ddt_e=er.ddt_e, dissip3=er.dissip3, dissip32=er.dissip32,
                     K_required=er.K_required)
            out.append(d)
        return out


class BlowUpError(RuntimeError):
    """Raised when the state stops being finite or explodes."""

    def __init__(self, message: str, time: float, last_report=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.last_report = last_report
        self.trajectory = trajectory


def linear_symbol(p: PhysicalParams, k, c_g: float = 1.0):
    k = np.abs(np.asarray(k, dtype=float))
    out = -p.sigma * k**3 - c_g * p.g_rho * k
    return out if out.ndim else float(out)


def _phi12(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi1 = em1 / zs
    phi2 = (em1 - zs) / zs**2
    zz = z[small]
    phi1[small] = 1 + zz / 2 + zz**2 / 6 + zz**3 / 24 + zz**4 / 120
    phi2[small] = 0.5 + zz / 6 + zz**2 / 24 + zz**3 / 120 + zz**4 / 720
    return phi1, phi2


class _Stepper:
    def __init__(self, cfg: SimConfig, rhs: Callable | None, workers):
        self.cfg = cfg
        self.rule = cfg.rule
        self.workers = workers
        self.L = linear_symbol(cfg.params, cfg.grid.k, cfg.c_g)
        self._rhs = rhs
        self._coef: dict[float, tuple] = {}

    def rhs(self, f: ScalarField) -> ScalarField:
        if self._rhs is not None:
            return self._rhs(f)
        c = self.cfg
        return evaluate_rhs(f, c.params, self.rule, c.formulation, workers=self.workers)

    def coef(self, dt: float):
        if dt not in self._coef:
            z = dt * self.L
            p1, p2 = _phi12(z)
            self._coef[dt] = (np.exp(z), dt * p1, dt * p2)
        return self._coef[dt]

    def advance(self, f: ScalarField, r: ScalarField, dt: float, t: float) -> ScalarField:
        E, d1, d2 = self.coef(dt)
        with np.errstate(over="ignore", invalid="ignore"):
            u = f.spectral
            Nu = r.spectral - self.L * u
            a = E * u + d1 * Nu
        fa = _finite_field(f.grid, a, t)
        with np.errstate(over="ignore", invalid="ignore"):
            Na = self.rhs(fa).spectral - self.L * a
            b = a + d2 * (Na - Nu)
        return _finite_field(f.grid, b, t + dt)


def _finite_field(grid: PeriodicGrid, coeffs: np.ndarray, t: float) -> ScalarField:
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(f"blow-up detected at t = {t:.17g}", t)
    return ScalarField.from_spectral(grid, coeffs)


def step(
    f: ScalarField,
    cfg: SimConfig,
    *,
    rhs: Callable | None = None,
    dt: float | None = None,
    workers: int | None = None,
) -> ScalarField:
    """One ETD-RK2 step.  ``rhs`` overrides the configured formulation."""
    st = _Stepper(cfg, rhs, workers)
    r = st.rhs(f)
    return st.advance(f, r, cfg.dt if dt is None else dt, 0.0)


def _schedule(t0: float, t_end: float, dt: float) -> list[float]:
    """Times after each step; the last step is shortened to land on ``t_end``."""
    n = max(1, math.ceil((t_end - t0) / dt - 1e-9))
    times = [t0 + i * dt for i in range(1, n)]
    times.append(t_end)
    return times


def run(
    cfg: SimConfig,
    f0: ScalarField,
    *,
    rhs: Callable | None = None,
    workers: int | None = None,
    t0: float = 0.0,
    callback: Callable | None = None,
) -> Trajectory:
    """Integrate from ``t0`` to ``cfg.t_end``, reporting every ``report_every`` steps.

    The run halts early (``traj.halted``) when the smallness functional
    crosses 1 from below.  Non-finite states or ``h32`` growing beyond
    ``1e6`` times its initial value raise :class:`BlowUpError` carrying the
    partial trajectory.
    """
    if f0.grid != cfg.grid:
        raise ValueError("initial field does not live on the configured grid")
    if not t0 < cfg.t_end:
        raise ValueError("t0 must be smaller than t_end")
    st = _Stepper(cfg, rhs, workers)
    traj = Trajectory()
    times = _schedule(t0, cfg.t_end, cfg.dt)
    f, t = f0, t0
    h32_0 = None
    prev_small = None
    nsteps = len(times)

    for i in range(nsteps + 1):
        try:
            r = st.rhs(f)
        except (ValueError, FloatingPointError) as exc:
            raise BlowUpError(
                f"blow-up detected at t = {t:.17g}: {exc}",
                t,
                traj.reports[-1] if traj.reports else None,
                traj,
            ) from exc
        if i % cfg.report_every == 0 or i == nsteps:
            nr = norm_report(f, cfg.smallness_C, st.rule, time=t)
            er = energy_report(f, cfg.params, st.rule, rhs_values=r, norms=nr,
                               C=cfg.smallness_C)
            traj.times.append(t)
            traj.reports.append(nr)
            traj.energies.append(er)
            traj.means.append(f.mean())
            if callback is not None:
                callback(i, t, nr, er)
            if h32_0 is None:
                h32_0 = nr.h32
            elif nr.h32 > EXPLOSION_FACTOR * max(h32_0, 1e-300):
                traj.final_field = f
                traj.steps = i
                raise BlowUpError(f"norm explosion at t = {t:.17g}", t, nr, traj)
            if (
                cfg.halt_on_smallness
                and prev_small is not None
                and prev_small < 1.0 <= nr.smallness
            ):
                traj.halted = True
                traj.halt_step = i
                traj.halt_reason = (
                    f"smallness crossed 1 at step {i} (t = {t:.17g}): "
                    f"{prev_small:.6g} -> {nr.smallness:.6g}"
                )
                break
            prev_small = nr.smallness
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            traj.snapshots.append((t, f))
        if i == nsteps:
            break
        t_next = times[i]
        dt = t_next - t if i == nsteps - 1 else cfg.dt
        try:
            f = st.advance(f, r, dt, t)
        except BlowUpError as exc:
            traj.final_field = f
            traj.steps = i
            last = traj.reports[-1] if traj.reports else None
            raise BlowUpError(str(exc), exc.time, last, traj) from None
        t = t_next
        traj.steps = i + 1
    traj.final_field = f
    return traj


# --- diagnostics -------------------------------------------------------------

def growth_rate(f: ScalarField, p: PhysicalParams, rule=None, formulation: str = "cp1") -> float:
    """Projected rate ``<RHS(f), f> / <f, f>`` (the symbol for a single mode)."""
    r = evaluate_rhs(f, p, rule, formulation)
    return float(np.dot(r.values, f.values) / np.dot(f.values, f.values))


def fit_gravity_constant(grid: PeriodicGrid, k: int = 1, amplitude: float = 1e-6,
                         formulation: str = "cp1") -> float:
    """``c_g`` from the gravity-only rate of ``amplitude * sin(k x)``."""
    kk = 2 * math.pi * k / grid.length
    f = ScalarField(grid, amplitude * np.sin(kk * grid.x))
    return -growth_rate(f, PhysicalParams(0.0, 1.0), None, formulation) / kk


def scale_to_smallness(f: ScalarField, target: float, C: float = DEFAULT_C,
                       rule: QuadratureSpec | None = None) -> ScalarField:
    """Multiply ``f`` by the factor that makes its smallness equal ``target``."""
    if not target > 0:
        raise ValueError("target must be positive")
    if not np.any(f.values - f.mean()):
        raise ValueError("cannot rescale a constant field")
    g = lambda e: smallness(f * e, C, rule) - target
    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
    lo = 0.0
    eps = brentq(g, lo, hi, xtol=1e-15, rtol=1e-13)
    return f * eps
