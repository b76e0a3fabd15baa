"""Energy functionals and a-priori inequality checks along trajectories.

The monitored quantities are

* ``e_h32 = |f|_{H^3/2}^2 / 2`` and its rate ``<Lambda^3/2 f, Lambda^3/2 f_t>``;
* the weighted dissipations ``int |Lambda^s f|^2 (1 + f_x^2)^(-3/2) dx`` for
  ``s = 3`` and ``s = 3/2`` (and ``s = 4`` at the ``H^5/2`` level);
* the majorant ``|f|_{H^3}^2 (P(X) + X B) + Q(X) X`` with
  ``X = |f|_{H^3/2}``, ``B = |f|_{B^1_inf,1}``, ``P(X) = X + X^2 + X^3 + X^4``
  and ``Q(X) = X + X^2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

import numpy as np

from .grid_spectral import ScalarField, padded_size, upsample
from .norms import DEFAULT_C, NormReport, norm_report
from .quadrature import QuadratureSpec
from .rhs_muskat import PhysicalParams, evaluate_rhs

__all__ = [
    "EnergyReport",
    "energy_report",
    "majorant",
    "check_inequality",
    "smallness_gate",
    "decay_surveillance",
    "poly_P",
    "poly_Q",
]


def poly_P(X: float) -> float:
    return X + X**2 + X**3 + X**4


def poly_Q(X: float) -> float:
    return X + X**2


def majorant(h32: float, h3: float, b1: float) -> float:
    return h3 * h3 * (poly_P(h32) + h32 * b1) + poly_Q(h32) * h32


@dataclass(frozen=True)
class EnergyReport:
    e_h32: float
    ddt_e: float
    dissip3: float
    dissip32: float
    bound: float
    K_required: float
    ddt_e52: float = 0.0
    dissip4: float = 0.0
    h52_gate: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(f: ScalarField, g: ScalarField, s: float) -> float:
    """``<Lambda^s f, Lambda^s g>`` over one period."""
    n = f.grid.n_points
    k = f.grid.k
    mult = np.full(k.shape, 2.0)
    mult[0] = 0.0
    mult[-1] = 1.0
    prod = np.real(np.conj(f.spectral) * g.spectral) * mult * np.abs(k) ** (2 * s)
    return f.grid.length * float(np.sum(prod)) / n**2


def _weighted(f: ScalarField, s_list: Iterable[float]) -> list[float]:
    """``int |Lambda^s f|^2 (1+f_x^2)^(-3/2) dx`` on the padded grid."""
    n = f.grid.n_points
    m = padded_size(n)
    k = f.grid.k
    fx = upsample(np.fft.irfft(1j * k * f.spectral, n), m)
    w = (1.0 + fx * fx) ** -1.5
    h = f.grid.length / m
    out = []
    for s in s_list:
        ls = upsample(np.fft.irfft(np.abs(k) ** s * f.spectral, n), m)
        out.append(h * float(np.sum(ls * ls * w)))
    return out


def energy_report(
    f: ScalarField,
    p: PhysicalParams,
    rule: QuadratureSpec | None = None,
    *,
    rhs_values: ScalarField | None = None,
    formulation: str = "cp1",
    norms: NormReport | None = None,
    C: float = DEFAULT_C,
) -> EnergyReport:
    """Energy balance of the ``H^3/2`` seminorm at one instant.

    ``rhs_values`` can carry an already evaluated ``f_t`` to avoid a second
    right-hand-side evaluation.
    """
    r = evaluate_rhs(f, p, rule, formulation) if rhs_values is None else rhs_values
    nr = norm_report(f, C, rule) if norms is None else norms
    X, B, L = nr.h32, nr.b1_inf_1, nr.lip
    ddt = _pair(f, r, 1.5)
    ddt52 = _pair(f, r, 2.5)
    d3, d32, d4 = _weighted(f, (3.0, 1.5, 4.0))
    bound = majorant(X, nr.h3, B)
    excess = ddt + p.sigma * d3
    if bound > 0:
        K = max(0.0, excess) / bound
    else:
        K = 0.0 if excess <= 0 else math.inf
    gate = (1.0 + L * L) ** 1.5 * (poly_P(X) + X * B)
    return EnergyReport(
        e_h32=0.5 * X * X,
        ddt_e=ddt,
        dissip3=d3,
        dissip32=d32,
        bound=bound,
        K_required=K,
        ddt_e52=ddt52,
        dissip4=d4,
        h52_gate=gate,
    )


# --- trajectory-level checks -------------------------------------------------

def _records(traj) -> list[Mapping]:
    if hasattr(traj, "records"):
        return list(traj.records())
    return list(traj)


def _trapz_cumulative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def check_inequality(traj, K: float) -> dict:
    """Integrated ``H^3/2`` inequality at every report time.

    ``LHS(T) = |f(T)|^2_{H^3/2} + int_0^T |f|^2_{H^2}/(1+L^2)^2 + |f|^2_{H^3}/(1+L^2)^(3/2)``
    must not exceed ``K int_0^T bound + |f_0|^2_{H^3/2}``.  Records lacking
    an ``h2`` entry use the interpolation bound ``h32^(2/3) h3^(1/3)``.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    recs = _records(traj)
    if not recs:
        raise ValueError("trajectory has no reports")
    t = np.array([float(r["time"]) for r in recs])
    h32 = np.array([float(r["h32"]) for r in recs])
    h3 = np.array([float(r["h3"]) for r in recs])
    lip = np.array([float(r["lip"]) for r in recs])
    b1 = np.array([float(r["b1_inf_1"]) for r in recs])
    h2 = np.array(
        [
            float(r["h2"]) if r.get("h2") not in (None, "") else
            float(r["h32"]) ** (2 / 3) * float(r["h3"]) ** (1 / 3)
            for r in recs
        ]
    )
    q = 1.0 + lip**2
    dissip = h2**2 / q**2 + h3**2 / q**1.5
    bound = np.array([majorant(a, b, c) for a, b, c in zip(h32, h3, b1)])
    lhs = h32**2 + _trapz_cumulative(t, dissip)
    rhs = K * _trapz_cumulative(t, bound) + h32[0] ** 2
    margin = rhs - lhs
    scale = np.maximum(1.0, np.abs(rhs))
    ok_each = margin >= -1e-12 * scale
    worst = int(np.argmin(margin))
    kreq = [float(r["K_required"]) for r in recs if r.get("K_required") not in (None, "")]
    return {
        "ok": bool(np.all(ok_each)),
        "worst_time": float(t[worst]),
        "worst_margin": float(margin[worst]),
        "K_required_max": max(kreq) if kreq else None,
        "degenerate": bool(K == 0 and float(np.max(_trapz_cumulative(t, dissip))) > 0),
    }


def smallness_gate(traj) -> dict:
    recs = _records(traj)
    for r in recs:
        if not float(r["smallness"]) < 1.0:
            return {"held_throughout": False, "first_violation": float(r["time"])}
    return {"held_throughout": True, "first_violation": None}


def decay_surveillance(traj, slack: float = 1e-8) -> dict:
    """Check that ``h32`` never grows by more than ``slack`` between reports.

    Only meaningful while the smallness gate holds; the result says whether
    it did.
    """
    recs = _records(traj)
    gate = smallness_gate(recs)["held_throughout"]
    violations = []
    for a, b in zip(recs, recs[1:]):
        growth = float(b["h32"]) - float(a["h32"])
        if growth > slack:
            violations.append((float(b["time"]), growth))
    worst = max((g for _, g in violations), default=0.0)
    return {"gate_held": gate, "violations": violations, "max_growth": worst}
