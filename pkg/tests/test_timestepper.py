import math

import numpy as np
import pytest

from muskat.grid_spectral import ScalarField, make_grid, multiplier, sample
from muskat.norms import lp, smallness
from muskat.rhs_muskat import PhysicalParams
from muskat.timestepper import (
    BlowUpError,
    SimConfig,
    fit_gravity_constant,
    growth_rate,
    linear_symbol,
    run,
    scale_to_smallness,
    step,
)

G = make_grid(64)
NO_REPORTS = 10**9


def cfg(**kw):
    kw.setdefault("grid", G)
    return SimConfig(**kw)


class TestLinearSymbol:
    def test_values(self):
        assert linear_symbol(PhysicalParams(1.0, 0.0), 2) == -8.0
        assert linear_symbol(PhysicalParams(1.0, 3.0), 0) == 0.0
        assert linear_symbol(PhysicalParams(0.5, 2.0), -3, c_g=1.0) == -0.5 * 27 - 6

    def test_gravity_fit_predicts_k4(self):
        c = fit_gravity_constant(G, 1)
        f = sample(G, lambda x: 1e-6 * np.sin(4 * x))
        rate = growth_rate(f, PhysicalParams(0.0, 1.0))
        assert rate == pytest.approx(-c * 4, rel=0.01)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1e-3}, {"t_end": 0.0},
                                    {"formulation": "cp7"}, {"report_every": 0},
                                    {"c_stab": 0.0}, {"dt": 1.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            cfg(**kw)

    def test_stability_cap(self):
        c = cfg()
        km = G.k_max
        assert c.stability_cap == pytest.approx(c.c_stab / km**3, rel=1e-9)


class TestStep:
    def test_zero_is_fixed_point(self):
        out = step(ScalarField.zeros(G), cfg(dt=1e-3))
        assert not np.any(out.values)

    def test_pure_linear_is_exact(self):
        c = cfg(dt=1e-2, t_end=0.5, params=PhysicalParams(1.0, 0.3), c_stab=1e9)
        L = lambda k: linear_symbol(c.params, k)
        f0 = sample(G, lambda x: np.sin(x) + 0.2 * np.cos(4 * x) + 0.01 * np.sin(11 * x))
        tr = run(c, f0, rhs=lambda f: multiplier(f, L), t0=0.0)
        exact = multiplier(f0, lambda k: np.exp(0.5 * L(k)))
        assert np.max(np.abs(tr.final_field.values - exact.values)) <= 1e-12

    def test_second_order_self_convergence(self):
        f0 = sample(G, lambda x: 0.1 * np.sin(x))
        finals = [
            run(cfg(dt=dt, t_end=0.2, report_every=NO_REPORTS), f0).final_field.values
            for dt in (4e-3, 2e-3, 1e-3, 5e-4)
        ]
        err = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
        orders = [math.log2(a / b) for a, b in zip(err, err[1:])]
        print("self-convergence orders:", orders)
        assert round(orders[-1], 2) >= 2.0

    def test_overflow_is_reported(self):
        f0 = sample(G, np.sin)
        with pytest.raises(BlowUpError, match="blow-up detected at t"):
            step(f0, cfg(dt=1e-3), rhs=lambda f: f * 1e308)


class TestRun:
    def test_zero_data(self):
        tr = run(cfg(dt=1e-2, t_end=0.05), ScalarField.zeros(G))
        assert len(tr.reports) == 6
        assert all(r.h32 == 0 and r.smallness == 0 for r in tr.reports)
        assert all(e.K_required == 0 for e in tr.energies)

    def test_schedule_lands_on_t_end(self):
        tr = run(cfg(dt=0.03, t_end=0.1), sample(G, lambda x: 0.01 * np.sin(x)))
        assert tr.times[-1] == 0.1 and tr.steps == 4

    def test_single_mode_decays_at_unit_rate(self):
        eps = 1e-4
        f0 = sample(G, np.sin) * eps
        tr = run(cfg(dt=1e-2, t_end=1.0, report_every=10), f0)
        for t, r in zip(tr.times, tr.reports):
            assert abs(r.l2 - math.exp(-t) * lp(f0, 2)) <= eps**2

    def test_mean_drift_is_small(self):
        f0 = sample(G, lambda x: 0.3 + 0.1 * np.sin(x) + 0.05 * np.cos(2 * x))
        tr = run(cfg(dt=5e-3, t_end=0.2, report_every=4), f0)
        drift = max(abs(m - tr.means[0]) for m in tr.means)
        assert drift <= 1e-12

    def test_workers_give_identical_bits(self):
        f0 = sample(G, lambda x: 0.2 * np.sin(x) + 0.1 * np.cos(3 * x))
        c = cfg(dt=5e-3, t_end=0.05)
        a = run(c, f0, workers=1)
        b = run(c, f0, workers=3)
        assert np.array_equal(a.final_field.values, b.final_field.values)
        assert a.records() == b.records()

    def test_early_halt(self):
        f0 = scale_to_smallness(sample(G, np.sin), 0.5)
        tr = run(cfg(dt=1e-2, t_end=1.0), f0, rhs=lambda f: f * 5.0)
        assert tr.halted
        i = tr.halt_step
        assert tr.reports[-1].smallness >= 1.0 > tr.reports[-2].smallness
        assert f"step {i}" in tr.halt_reason
        assert tr.times[-1] == pytest.approx(i * 1e-2)

    def test_norm_explosion_keeps_partial_trajectory(self):
        f0 = sample(G, lambda x: 1.5 * np.sin(x) + np.sin(5 * x))
        with pytest.raises(BlowUpError) as info:
            run(cfg(dt=0.01, t_end=2.0, c_stab=1e9, halt_on_smallness=False), f0)
        err = info.value
        assert err.trajectory is not None and len(err.trajectory.reports) > 1
        assert err.last_report is not None and 0 < err.time < 2.0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            run(cfg(), sample(make_grid(32), np.sin))


class TestScaling:
    def test_scale_to_smallness(self):
        f = scale_to_smallness(sample(G, lambda x: np.sin(x) + np.cos(2 * x)), 0.5)
        assert smallness(f) == pytest.approx(0.5, rel=1e-10)

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            scale_to_smallness(ScalarField(G, np.ones(64)), 0.5)
