"""Verification suites shared by the command line and the test-suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .difference_ops import (
    DiffOpKind,
    apply,
    d2D_dalpha_closed,
    d2S_dalpha_closed,
    dD_dalpha_closed,
    dS_dalpha_closed,
    eta_integral,
)
from .grid_spectral import PeriodicGrid, ScalarField, derivative, make_grid, sample
from .norms import interp_check
from .quadrature import QuadratureSpec
from .rhs_muskat import PhysicalParams, rhs_cp1, rhs_nf
from .timestepper import growth_rate

IDENTITY_FIELDS = {
    "sin x": lambda x: np.sin(x),
    "sin 2x": lambda x: np.sin(2 * x),
    "sin x + 0.3 sin 3x": lambda x: np.sin(x) + 0.3 * np.sin(3 * x),
}
IDENTITY_ALPHAS = (0.1, 0.25, 0.5, 1.0)
H_ALPHA = 2e-3
INTERP_TRIPLES = ((1.5, 3.0, 0.5), (1.5, 3.0, 2.0 / 3.0), (0.0, 1.5, 0.5))


@dataclass
class IdentityRow:
    field: str
    alpha: float
    identity: str
    error: float
    ratio: float | None
    passed: bool
    message: str = ""


def _fd(op, a: float, h: float, order: int) -> np.ndarray:
    if order == 1:
        return (op(a + h) - op(a - h)) / (2 * h)
    return (op(a + h) - 2 * op(a) + op(a - h)) / (h * h)


def identity_suite(
    n: int = 256,
    alphas=IDENTITY_ALPHAS,
    *,
    tol: float = 1e-5,
    min_ratio: float = 3.5,
    h_alpha: float = H_ALPHA,
    fields=None,
) -> list[IdentityRow]:
    """Compare closed-form alpha derivatives with central differences in alpha.

    Each row reports the sup-norm error at step ``h_alpha / 2`` and the ratio
    of errors at ``h_alpha`` and ``h_alpha / 2``.  The ``eta`` rows check
    ``2 f_x - D_a f = (1/a) int_0^a s_eta f_x d eta`` directly.
    """
    grid = make_grid(n)
    rule = QuadratureSpec.for_grid(grid)
    fields = IDENTITY_FIELDS if fields is None else fields
    rows: list[IdentityRow] = []
    for name, fn in fields.items():
        f = sample(grid, fn)
        fx = derivative(f)
        S = lambda b: apply(DiffOpKind.S_SYM, f, b).values
        D = lambda b: apply(DiffOpKind.D_SYM, f, b).values
        for a in alphas:
            if not (math.isfinite(a) and a != 0):
                rows.append(IdentityRow(name, a, "all", math.nan, None, False,
                                        "alpha must be nonzero and finite"))
                continue
            cases = (
                ("dS", S, lambda: dS_dalpha_closed(f, a), 1),
                ("d2S", S, lambda: d2S_dalpha_closed(f, a, rule), 2),
                ("dD", D, lambda: dD_dalpha_closed(f, a, rule), 1),
                ("d2D", D, lambda: d2D_dalpha_closed(f, a, rule), 2),
            )
            for label, op, closed, order in cases:
                c = closed().values
                e1 = float(np.max(np.abs(_fd(op, a, h_alpha, order) - c)))
                e2 = float(np.max(np.abs(_fd(op, a, h_alpha / 2, order) - c)))
                ratio = e1 / e2 if e2 > 0 else math.inf
                ok = e1 <= tol and e2 <= tol and ratio >= min_ratio
                rows.append(IdentityRow(name, a, label, e2, ratio, ok))
            lhs = 2 * fx.values - D(a)
            err = float(np.max(np.abs(eta_integral(fx, a, rule).values - lhs)))
            rows.append(IdentityRow(name, a, "eta", err, None, err <= tol))
    return rows


def relative_mismatch(a: ScalarField, b: ScalarField) -> float:
    nb = float(np.linalg.norm(b.values))
    diff = float(np.linalg.norm(a.values - b.values))
    if nb == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / nb


def equivalence_study(
    f: ScalarField,
    sigma: float = 1.0,
    refinements: int = 3,
    rule: QuadratureSpec | None = None,
    *,
    workers: int | None = None,
) -> dict:
    """Slope form against the seven-term form under successive refinement.

    Level ``j`` doubles ``n_alpha`` and ``alpha_max`` ``j`` times.
    """
    if refinements < 1:
        raise ValueError("refinements must be >= 1")
    base = QuadratureSpec.for_grid(f.grid) if rule is None else rule
    ref = rhs_cp1(f, PhysicalParams(sigma, 0.0), base, workers=workers)
    levels = []
    for j in range(refinements):
        r = base.refined(j)
        tb = rhs_nf(f, sigma, r, workers=workers)
        levels.append(
            {
                "level": j,
                "n_alpha": r.n_alpha,
                "alpha_max": r.alpha_max,
                "mismatch": relative_mismatch(tb.total, ref),
                "terms": {k: float(np.linalg.norm(v.values) * math.sqrt(f.grid.h))
                          for k, v in tb.terms().items()},
            }
        )
    mm = [lv["mismatch"] for lv in levels]
    decreasing = all(b < a or (a == 0.0 and b == 0.0) for a, b in zip(mm, mm[1:]))
    return {"levels": levels, "mismatches": mm, "decreasing": decreasing, "final": mm[-1]}


def linear_symbol_fit(
    k_max: int = 8,
    sigmas=(1.0,),
    *,
    n: int = 256,
    amplitude: float = 1e-6,
    formulation: str = "cp1",
) -> dict:
    """Projected growth rates of small single modes.

    Returns surface-tension rows ``(sigma, k, rate, expected, rel_err)`` and
    gravity-only rows ``(k, c_g(k))`` with ``c_g(k) = -rate / k``.
    """
    grid = make_grid(n)
    cap_rows, grav_rows = [], []
    for k in range(1, k_max + 1):
        f = ScalarField(grid, amplitude * np.sin(k * grid.x))
        for s in sigmas:
            rate = growth_rate(f, PhysicalParams(s, 0.0), None, formulation)
            expected = -s * k**3
            cap_rows.append((s, k, rate, expected, abs(rate - expected) / abs(expected)))
        rate = growth_rate(f, PhysicalParams(0.0, 1.0), None, formulation)
        grav_rows.append((k, -rate / k))
    c1 = grav_rows[0][1]
    spread = max(abs(c - c1) / abs(c1) for _, c in grav_rows)
    return {"surface": cap_rows, "gravity": grav_rows, "c_g": c1, "c_g_spread": spread}


def random_trig(grid: PeriodicGrid, rng: np.random.Generator, max_modes: int = 20) -> ScalarField:
    m = int(rng.integers(1, max_modes + 1))
    ks = rng.choice(np.arange(1, max_modes + 1), size=m, replace=False)
    a, b = rng.standard_normal((2, m))
    v = np.zeros(grid.n_points)
    for kk, ak, bk in zip(ks, a, b):
        v += ak * np.cos(kk * grid.x) + bk * np.sin(kk * grid.x)
    return ScalarField(grid, v)


def interpolation_suite(samples: int = 100, seed: int = 0, n: int = 256) -> dict:
    """Random trigonometric polynomials through :func:`interp_check`."""
    grid = make_grid(n)
    rng = np.random.default_rng(seed)
    failures = []
    passed = 0
    for i in range(samples):
        f = random_trig(grid, rng)
        res = [interp_check(f, *t) for t in INTERP_TRIPLES]
        if all(r["ok"] for r in res):
            passed += 1
        else:
            failures.append(i)
    worst_eq = 0.0
    for k in (1, 2, 5, 13):
        f = ScalarField(grid, np.sin(k * grid.x))
        for t in INTERP_TRIPLES:
            r = interp_check(f, *t)
            worst_eq = max(worst_eq, abs(r["lhs"] - r["rhs"]) / r["rhs"])
    return {"samples": samples, "passed": passed, "failures": failures,
            "single_mode_max_rel_gap": worst_eq}
