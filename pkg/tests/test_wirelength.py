"""Smoothed wirelength: values, bounds, gradients, numerical stability."""

import numpy as np
import pytest

from hybroplace.metrics import hpwl_net, hpwl_total
from hybroplace.model import Cell, CellKind, Net, Netlist, Pin, Placement
from hybroplace.wirelength import (
    NonPositiveGamma,
    WaParams,
    wa_eval,
    wa_gradient,
    wa_net,
    wa_total,
)

from conftest import make_rng
from oracles import central_diff, naive_wa_extent, naive_wa_total, random_instance


def two_cell_net(x0, x1):
    cells = [Cell(0, "a", 1.0, 1.0, CellKind.MOVABLE),
             Cell(1, "b", 1.0, 1.0, CellKind.MOVABLE)]
    nl = Netlist(cells, [Net(0, (Pin(0, 0.0, 0.0), Pin(1, 0.0, 0.0)))])
    return nl, Placement(np.array([[x0, 0.0], [x1, 0.0]]))


class TestWaNet:
    def test_coincident_pins_zero(self):
        assert wa_net(np.array([3.0, 3.0, 3.0]), 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_zero_ten_gamma_one(self):
        got = wa_net(np.array([0.0, 10.0]), 1.0)
        assert got == pytest.approx(9.99909, abs=5e-6)
        assert got == pytest.approx(naive_wa_extent([0.0, 10.0], 1.0), rel=1e-12)

    def test_gamma_sweep_increases_toward_exact(self):
        gammas = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]
        vals = [wa_net(np.array([0.0, 10.0]), g) for g in gammas]
        for v in vals:
            assert v <= 10.0
        # non-decreasing throughout; strictly increasing until float64 saturates
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert all(b > a for a, b in zip(vals, vals[1:]) if a < 10.0)
        assert vals[-1] == pytest.approx(10.0, abs=1e-12)

    def test_matches_scalar_oracle(self):
        rng = make_rng(31)
        for _ in range(300):
            n = int(rng.integers(2, 8))
            xs = rng.uniform(-50, 50, n)
            gamma = float(rng.uniform(0.1, 20.0))
            assert wa_net(xs, gamma) == pytest.approx(
                naive_wa_extent(xs, gamma), rel=1e-10, abs=1e-10)

    def test_non_positive_gamma(self):
        with pytest.raises(NonPositiveGamma):
            wa_net(np.array([0.0, 1.0]), 0.0)
        with pytest.raises(NonPositiveGamma):
            WaParams(-1.0)


class TestWaTotal:
    def test_single_pin_net_zero(self):
        cells = [Cell(0, "a", 1.0, 1.0, CellKind.MOVABLE)]
        nl = Netlist(cells, [Net(0, (Pin(0, 0.0, 0.0),))])
        assert wa_total(nl, Placement(np.zeros((1, 2))), WaParams(1.0)) \
            == pytest.approx(0.0, abs=1e-12)

    def test_additivity(self):
        rng = make_rng(32)
        nl, pl = random_instance(rng, 10, 6)
        params = WaParams(2.0)
        total = wa_total(nl, pl, params)
        assert total == pytest.approx(naive_wa_total(nl, pl, 2.0), rel=1e-10)

    def test_lower_bound_property(self):
        rng = make_rng(33)
        for _ in range(100):
            nl, pl = random_instance(rng, int(rng.integers(3, 15)),
                                     int(rng.integers(1, 20)))
            gamma = float(rng.uniform(0.05, 30.0))
            assert wa_total(nl, pl, WaParams(gamma)) \
                <= hpwl_total(nl, pl).total + 1e-9

    def test_per_net_lower_bound(self):
        rng = make_rng(34)
        nl, pl = random_instance(rng, 12, 20)
        for j in range(nl.n_nets):
            s, t = nl.net_start[j], nl.net_start[j + 1]
            xs = pl.x[nl.pin_cell[s:t]] + nl.pin_dx[s:t]
            assert wa_net(xs, 0.7) <= (xs.max() - xs.min()) + 1e-9

    def test_gamma_convergence_quota(self):
        rng = make_rng(35)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            xs = rng.uniform(0, 100, n)
            exact = xs.max() - xs.min()
            if exact < 1e-6:
                continue
            gaps = [exact - wa_net(xs, exact * 2.0 ** -k) for k in range(1, 7)]
            assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
            assert exact - wa_net(xs, exact * 1e-3) < 1e-3 * exact

    def test_stability_at_chip_scale(self):
        xs = np.array([0.0, 1e6, 5e5, 123456.789])
        val = wa_net(xs, 10.0)
        assert np.isfinite(val)
        assert 0.0 <= val <= 1e6

    def test_stability_total_at_chip_scale(self):
        nl, pl = two_cell_net(0.0, 1e6)
        out = wa_eval(nl, pl, WaParams(10.0))
        assert np.isfinite(out.wa)
        assert np.isfinite(out.grad.d_x).all()

    def test_translation_invariance(self):
        rng = make_rng(36)
        nl, pl = random_instance(rng, 20, 30)
        params = WaParams(3.0)
        base = wa_total(nl, pl, params)
        g0 = wa_gradient(nl, pl, params)
        shifted = pl.copy()
        shifted.xy += np.array([777.0, -333.0])
        assert wa_total(nl, shifted, params) == pytest.approx(base, rel=1e-9)
        g1 = wa_gradient(nl, shifted, params)
        np.testing.assert_allclose(g1.d_x, g0.d_x, rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(g1.d_y, g0.d_y, rtol=1e-7, atol=1e-10)


class TestWaGradient:
    def test_single_pin_net_zero_gradient(self):
        cells = [Cell(0, "a", 1.0, 1.0, CellKind.MOVABLE)]
        nl = Netlist(cells, [Net(0, (Pin(0, 0.0, 0.0),))])
        g = wa_gradient(nl, Placement(np.zeros((1, 2))), WaParams(1.0))
        assert g.d_x[0] == pytest.approx(0.0, abs=1e-12)

    def test_far_pins_saturate_to_unit_slope(self):
        nl, pl = two_cell_net(0.0, 10.0)
        g = wa_gradient(nl, pl, WaParams(1.0))
        assert g.d_x[1] == pytest.approx(1.0, abs=1e-3)
        assert g.d_x[0] == pytest.approx(-1.0, abs=1e-3)

    def test_fixed_cells_zeroed(self):
        cells = [Cell(0, "a", 1.0, 1.0, CellKind.MOVABLE),
                 Cell(1, "b", 1.0, 1.0, CellKind.FIXED)]
        nl = Netlist(cells, [Net(0, (Pin(0, 0.0, 0.0), Pin(1, 0.0, 0.0)))])
        pl = Placement(np.array([[0.0, 0.0], [10.0, 5.0]]))
        g = wa_gradient(nl, pl, WaParams(1.0))
        assert g.d_x[1] == 0.0
        assert g.d_y[1] == 0.0
        assert g.d_x[0] != 0.0

    def test_finite_differences_random_instances(self):
        rng = make_rng(37)
        for _ in range(100):
            n_cells = int(rng.integers(3, 30))
            nl, pl = random_instance(rng, n_cells, int(rng.integers(2, 40)))
            gamma = 1.0  # 1% of the 100-unit coordinate scale
            params = WaParams(gamma)
            g = wa_gradient(nl, pl, params)

            def f(p):
                return wa_total(nl, p, params)

            cell = int(rng.integers(0, n_cells))
            for axis, arr in ((0, g.d_x), (1, g.d_y)):
                fd = central_diff(f, pl, cell, axis, 1e-4)
                scale = max(abs(fd), abs(arr[cell]), 1e-3)
                assert abs(arr[cell] - fd) / scale < 1e-5

    def test_multiple_pins_same_cell_accumulate(self):
        cells = [Cell(0, "a", 2.0, 2.0, CellKind.MOVABLE),
                 Cell(1, "b", 2.0, 2.0, CellKind.MOVABLE)]
        nets = [Net(0, (Pin(0, 0.0, 0.0), Pin(0, 2.0, 0.0), Pin(1, 0.0, 0.0)))]
        nl = Netlist(cells, nets)
        pl = Placement(np.array([[0.0, 0.0], [9.0, 0.0]]))
        params = WaParams(0.9)
        g = wa_gradient(nl, pl, params)
        fd = central_diff(lambda p: wa_total(nl, p, params), pl, 0, 0, 1e-5)
        assert g.d_x[0] == pytest.approx(fd, rel=1e-5)

    def test_eval_reports_exact_hpwl(self):
        rng = make_rng(38)
        nl, pl = random_instance(rng, 15, 25)
        out = wa_eval(nl, pl, WaParams(2.5))
        assert out.hpwl == pytest.approx(hpwl_total(nl, pl).total, rel=1e-12)

    def test_empty_netlist(self):
        cells = [Cell(0, "a", 1.0, 1.0, CellKind.MOVABLE)]
        nl = Netlist(cells, [])
        out = wa_eval(nl, Placement(np.zeros((1, 2))), WaParams(1.0))
        assert out.wa == 0.0
        assert out.hpwl == 0.0
        assert out.grad.d_x.shape == (1,)
