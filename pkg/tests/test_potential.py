import math
from dataclasses import replace

import numpy as np
import pytest

from kjpa import potential as pot
from kjpa import device

from conftest import TWO_PI, rel_err

KPG = device.KAPPA + device.GAMMA


class TestCriticalAmplitude:
    def test_zero_detuning_is_half_linewidth(self):
        assert pot.critical_amplitude(0.0, device.KAPPA, device.GAMMA) \
            == pytest.approx(0.5 * KPG, rel=1e-15)

    def test_operating_detuning_ratio(self):
        # direct formula evaluation: sqrt(0.7^2 + 3.37^2)/6.74
        ac = pot.critical_amplitude(TWO_PI * 0.7e6, device.KAPPA, device.GAMMA)
        assert abs(ac / KPG - 0.5107) < 1e-3

    def test_large_detuning_asymptote(self):
        delta = TWO_PI * 1e12
        ac = pot.critical_amplitude(delta, device.KAPPA, device.GAMMA)
        assert rel_err(ac, delta) < 1e-9


class TestPotentialShape:
    def test_origin_is_zero(self, face_op):
        assert pot.potential(0.0, face_op) == 0.0

    def test_even_symmetry_without_tilt(self, face_op):
        q = np.linspace(0.0, 50.0, 301)
        up = pot.potential(q, face_op)
        dn = pot.potential(-q, face_op)
        assert np.allclose(up, dn, rtol=1e-12, atol=0.0)

    def test_tilt_is_exactly_linear(self, face_op):
        q = np.linspace(-40.0, 40.0, 81)
        tilt = 3.3e5
        diff = pot.potential(q, face_op, tilt) - pot.potential(q, face_op)
        assert np.allclose(diff, tilt * q, rtol=1e-12, atol=1e-3)

    def test_confining_at_large_amplitude(self, face_op):
        assert pot.potential(500.0, face_op) > 0.0
        assert pot.potential(-500.0, face_op) > 0.0

    def test_origin_curvature_flips_at_critical_line(self, face_op):
        ac = pot.critical_amplitude(face_op.delta, face_op.kappa, face_op.gamma)
        h = 1e-4
        for alpha, sign in ((0.995 * ac, 1.0), (1.005 * ac, -1.0)):
            op = replace(face_op, alpha_mag=alpha)
            curv = (pot.potential(h, op) - 2.0 * pot.potential(0.0, op)
                    + pot.potential(-h, op)) / h**2
            assert math.copysign(1.0, curv) == sign


class TestExtrema:
    def test_closed_form_against_numeric_roots(self, face_op):
        closed = pot.extrema(face_op)
        numeric = pot.numeric_extrema(face_op)
        assert len(closed) == len(numeric) == 5
        for (qc, uc, kc), (qn, un, kn) in zip(closed, numeric):
            assert kc == kn
            if qc != 0.0:
                assert rel_err(qc, qn) < 1e-9

    def test_operating_point_locations(self, face_op):
        ext = pot.extrema(face_op)
        outer = sorted(abs(q) for q, _, k in ext if k == "min" and q != 0.0)
        tops = sorted(abs(q) for q, _, k in ext if k == "max")
        assert abs(outer[0] - 33.2) < 0.1
        assert abs(tops[0] - 4.26) < 0.01

    def test_monostable_region_has_single_minimum(self, face_op):
        op = replace(face_op, alpha_mag=0.3 * KPG)
        ext = pot.extrema(op)
        assert ext == [(0.0, 0.0, "min")]

    def test_boundary_degeneracies(self, face_op):
        # lower boundary: maxima merge with the outer minima at
        # sqrt(delta / 6|K|); upper boundary: maxima collapse onto the
        # origin as the central well destabilizes
        merge = math.sqrt(face_op.delta / (6.0 * abs(face_op.kerr)))
        op_lo = replace(face_op, alpha_mag=face_op.alpha_c0 * (1.0 + 1e-9))
        qs = sorted(abs(q) for q, _, _ in pot.extrema(op_lo) if q > 0.0)
        assert rel_err(qs[0], merge) < 1e-3
        assert rel_err(qs[1], merge) < 1e-3

        ac = pot.critical_amplitude(face_op.delta, face_op.kappa, face_op.gamma)
        op_hi = replace(face_op, alpha_mag=ac * (1.0 - 1e-9))
        tops = [abs(q) for q, _, k in pot.extrema(op_hi) if k == "max" and q != 0.0]
        assert max(tops) < 1e-3 * merge

    def test_barrier_vanishes_at_critical_line(self, face_op):
        ac = pot.critical_amplitude(face_op.delta, face_op.kappa, face_op.gamma)
        barriers = []
        for eps in (0.02, 0.005, 0.001):
            op = replace(face_op, alpha_mag=ac * (1.0 - eps))
            ext = pot.extrema(op)
            barriers.append(max(u for _, u, k in ext if k == "max"))
        assert barriers[0] > barriers[1] > barriers[2] > 0.0
        assert barriers[2] < 0.02 * barriers[0]


class TestClassifyRegion:
    def test_second_order_crossing(self):
        delta = -TWO_PI * 2e6
        ac = pot.critical_amplitude(delta, device.KAPPA, device.GAMMA)
        below = pot.classify_region(0.99 * ac, delta, device.KAPPA, device.GAMMA)
        above = pot.classify_region(1.01 * ac, delta, device.KAPPA, device.GAMMA)
        assert below == "monostable"
        assert above == "bistable_secondorder"

    def test_operating_point_is_tristable(self, face_op):
        label = pot.classify_region(face_op.alpha_mag, face_op.delta,
                                    face_op.kappa, face_op.gamma)
        assert label == "tristable_firstorder"

    def test_above_first_order_line(self, face_op):
        ac = pot.critical_amplitude(face_op.delta, face_op.kappa, face_op.gamma)
        label = pot.classify_region(1.02 * ac, face_op.delta,
                                    face_op.kappa, face_op.gamma)
        assert label == "bistable_above"

    def test_critical_point_neighborhood(self):
        # at zero detuning the 0.5 ratio is the junction of all labels
        lo = pot.classify_region(0.499 * KPG, 0.0, device.KAPPA, device.GAMMA)
        hi = pot.classify_region(0.501 * KPG, 0.0, device.KAPPA, device.GAMMA)
        assert lo == "monostable"
        assert hi == "bistable_secondorder"


class TestProfile:
    def test_grid_covers_outer_wells(self, face_op):
        prof = pot.build_profile(face_op)
        assert len(prof.q_grid) == 4001
        outer = max(abs(q) for q, _, k in prof.extrema if k == "min")
        assert prof.q_grid[-1] > 1.4 * outer

    def test_gradient_matches_finite_difference(self, face_op):
        q = np.linspace(-30.0, 30.0, 41)
        h = 1e-6
        fd = (pot.potential(q + h, face_op) - pot.potential(q - h, face_op)) / (2 * h)
        assert np.allclose(pot.potential_gradient(q, face_op), fd,
                           rtol=1e-6, atol=1e-3)

    def test_extrema_are_stationary_by_finite_difference(self, face_op):
        prof = pot.build_profile(face_op)
        grad_scale = np.max(np.abs(pot.potential_gradient(prof.q_grid, face_op)))
        for q, _, _ in prof.extrema:
            h = 1e-5
            fd = (pot.potential(q + h, face_op)
                  - pot.potential(q - h, face_op)) / (2 * h)
            assert abs(fd) < 1e-9 * grad_scale
