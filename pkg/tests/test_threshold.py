import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from rotorct.errors import PhiZero, SupercriticalData
from rotorct.fields import FieldSpec, TrigMode, grad_analysis
from rotorct.threshold import (Lattice, ThresholdReport, Verdict, classify_field,
                               default_margin_tol, free_transport_breakdown,
                               free_transport_eigenvalue, material_constants, theta0_params,
                               theta_from_p0, threshold_1d, threshold_indicator, threshold_report)

from conftest import ulps

entries = st.floats(-5, 5, allow_nan=False)
mats = st.lists(entries, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))
ks = st.floats(0.05, 3.0)


class TestIndicator:
    def test_isotropic_expansion(self):
        assert threshold_indicator(grad_analysis(np.eye(2) / 2, 0.5)) == 1

    def test_pure_strain(self):
        assert threshold_indicator(grad_analysis(np.diag([2.0, -2.0]), 1.0)) == -12

    @pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
    def test_rigid_rotation_marginal(self, k):
        # omega = u_y - v_x = 2k, gap2 = -4k^2
        g = grad_analysis([[0, k], [-k, 0]], k)
        assert g.omega == 2 * k and g.gap2 == -4 * k * k
        assert threshold_indicator(g) == 0
        assert threshold_report(g).verdict is Verdict.MARGINAL

    @given(mats, ks)
    def test_phi_form(self, M, k):
        g = grad_analysis(M, k)
        i0 = threshold_indicator(g)
        alt = 2 * g.phi - g.gap2 - 4 * k * k
        scale = max(abs(2 * g.phi), abs(g.gap2), 4 * k * k)
        assert abs(i0 - alt) <= ulps(scale)


class TestMaterialConstants:
    def test_isotropic(self):
        assert material_constants(grad_analysis(np.eye(2) / 2, 0.5)) == (1.0, 3.0)

    def test_pure_strain(self):
        C0, _ = material_constants(grad_analysis(np.diag([2.0, -2.0]), 1.0))
        assert C0 == -0.75

    def test_zero_gradient(self):
        assert material_constants(grad_analysis(np.zeros((2, 2)), 0.5)) == (1.0, 2.0)

    def test_phi_zero_raises(self):
        # phi = 4k^2 - 2k omega = 0 when omega = 2k
        with pytest.raises(PhiZero):
            material_constants(grad_analysis([[0, 0.25], [-0.25, 0]], 0.25))

    @given(mats, ks)
    def test_two_forms_of_D0(self, M, k):
        g = grad_analysis(M, k)
        assume(abs(g.phi) > 1e-3)
        C0, D0 = material_constants(g)
        alt = (g.d ** 2 - g.gap2 + 2 * g.phi) / g.phi
        scale = (g.d ** 2 + abs(g.gap2) + 2 * abs(g.phi) + 4 * k * k) / abs(g.phi)
        assert abs(D0 - alt) <= ulps(scale, 16)

    @given(mats, ks)
    def test_i0_equals_C0_phi2(self, M, k):
        g = grad_analysis(M, k)
        assume(abs(g.phi) > 1e-3)
        r = threshold_report(g)
        assert r.i0 == pytest.approx(r.C0 * g.phi ** 2, rel=1e-12, abs=1e-12)

    @given(mats, ks)
    def test_sign_of_i0_matches_C0(self, M, k):
        g = grad_analysis(M, k)
        assume(abs(g.phi) > 1e-6)
        i0 = threshold_indicator(g)
        assume(abs(i0) > 1e-9)
        C0, _ = material_constants(g)
        assert (i0 > 0) == (C0 > 0)


class TestTheta0:
    def test_from_p0_arithmetic(self):
        k = 0.7
        assert theta_from_p0(3 / (8 * k), k) == pytest.approx(1 / 3, rel=1e-15)

    def test_isotropic(self):
        p0, th = theta0_params(grad_analysis(np.eye(2) / 2, 0.5))
        assert p0 == 1.0
        assert th == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-14)

    def test_one_dimensional_instance(self):
        g = grad_analysis(np.diag([0.5, 0.0]), 0.5)
        assert (g.omega, g.d, g.gap2) == (0, 0.5, 0.25)
        p0, th = theta0_params(g)
        i0 = 0.75
        assert p0 == pytest.approx(math.sqrt(i0) / (0.25 + (math.sqrt(i0) - 1) ** 2), rel=1e-14)
        assert p0 == pytest.approx(3.2320, abs=1e-4)
        assert th == pytest.approx(1 / math.sqrt(3), rel=1e-12)

    @pytest.mark.parametrize("k", [0.5, 2.0])
    def test_zero_gradient_is_orbit_center(self, k):
        p0, th = theta0_params(grad_analysis(np.zeros((2, 2)), k))
        assert p0 == math.inf and th == 1.0

    def test_supercritical_raises(self):
        with pytest.raises(SupercriticalData):
            theta0_params(grad_analysis(np.diag([2.0, -2.0]), 1.0))

    @given(mats, ks)
    def test_report_invariants(self, M, k):
        g = grad_analysis(M, k)
        r = threshold_report(g)
        if r.verdict is Verdict.SUBCRITICAL:
            assert r.i0 > r.margin_tol and r.C0 > 0 and 0 < r.theta0 <= 1 and r.p0 > 0
            # theta0 = 1 - O(d0^2): rounding to 1 needs d0 negligible against 2k
            if r.theta0 == 1:
                assert abs(g.d) <= 1e-7 * 2 * k
        elif r.verdict is Verdict.SUPERCRITICAL:
            assert r.i0 < -r.margin_tol and r.theta0 is None
        else:
            assert abs(r.i0) <= r.margin_tol

    def test_margin_default(self):
        assert default_margin_tol(0.5) == 2e-10


class TestOneDimensional:
    def test_subcritical(self):
        r = threshold_1d(0.5, 0.0, 0.5)
        assert r.B0 == 4 and r.verdict is Verdict.SUBCRITICAL
        assert r.theta0_1d == pytest.approx(1 / 3, rel=1e-15)

    @pytest.mark.parametrize("k", [0.25, 1.0])
    def test_boundary_marginal(self, k):
        r = threshold_1d(2 * k, 0.0, k)
        assert r.B0 == 1 and r.verdict is Verdict.MARGINAL and r.theta0_1d is None

    def test_supercritical(self):
        k = 0.8
        r = threshold_1d(0.0, -2 * k, k)
        assert r.B0 == 0 and r.verdict is Verdict.SUPERCRITICAL

    @given(st.floats(-4, 4), st.floats(-4, 4), ks)
    def test_agrees_with_general_indicator(self, up, vp, k):
        g = grad_analysis([[up, 0.0], [vp, 0.0]], k)
        # one-dimensional data: gap2 = d^2, omega = -v'
        assert g.gap2 == up * up and g.omega == -vp
        i0 = threshold_indicator(g)
        r = threshold_1d(up, vp, k)
        assume(abs(i0) > 1e-9 and abs(r.B0 - 1) > 1e-9)
        assert (i0 > 0) == (r.verdict is Verdict.SUBCRITICAL)

    def test_general_theta_squared_is_one_dimensional_theta(self):
        k, up = 0.5, 0.5
        _, th = theta0_params(grad_analysis([[up, 0.0], [0.0, 0.0]], k))
        th1 = threshold_1d(up, 0.0, k).theta0_1d
        assert th ** 2 == pytest.approx(th1, rel=1e-12)
        assert th == pytest.approx(0.5774, abs=1e-4) and th1 == pytest.approx(1 / 3)


class TestFreeTransport:
    def test_negative_real_breaks(self):
        assert free_transport_breakdown(-1.0) == 1.0

    def test_positive_real_forward_smooth(self):
        assert free_transport_breakdown(2.0) == math.inf
        assert free_transport_breakdown(2.0, "backward") == 0.5

    def test_nonreal_never_breaks(self):
        assert free_transport_breakdown(1j) == math.inf
        assert free_transport_breakdown(1j, "backward") == math.inf

    def test_closed_form_solves_riccati(self):
        lam0 = -0.3 + 0.8j
        h = 1e-5
        t = 0.7
        dl = (free_transport_eigenvalue(lam0, t + h) - free_transport_eigenvalue(lam0, t - h)) / (2 * h)
        assert dl == pytest.approx(-free_transport_eigenvalue(lam0, t) ** 2, rel=1e-8)


class TestClassifyField:
    def test_affine_uniform_subcritical(self):
        r = classify_field(FieldSpec.affine(np.eye(2) / 2), 0.5, Lattice(4, 4, x=(-1, 1), y=(-1, 1)))
        assert r.verdict is Verdict.SUBCRITICAL and r.min_i0 == 1
        assert np.all(r.i0() == 1)

    def test_affine_strain_supercritical(self):
        r = classify_field(FieldSpec.affine(np.diag([2.0, -2.0])), 1.0, Lattice(3, 3, x=(0, 1), y=(0, 1)))
        assert r.verdict is Verdict.SUPERCRITICAL and r.min_i0 == -12

    def test_small_sine_field(self):
        eps = 0.1
        spec = FieldSpec.trig([TrigMode(0, 1, 0, sin=eps)])
        r = classify_field(spec, 1.0, Lattice(16, 4))
        # gap2 = u_x^2 = eps^2 cos^2 x, omega = 0; x = 0 is on the lattice
        assert r.min_i0 == pytest.approx(4 - eps ** 2, rel=1e-14)
        assert r.verdict is Verdict.SUBCRITICAL

    def test_refinement_multiplies_points(self):
        spec = FieldSpec.trig([TrigMode(0, 1, 0, sin=0.1)])
        assert len(classify_field(spec, 1.0, Lattice(4, 4, refine=3)).reports) == 144

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            classify_field(FieldSpec.affine(np.eye(2)), 1.0, np.zeros((0, 2)))

    def test_rotation_invariance(self, rng):
        for _ in range(100):
            G = rng.normal(size=(2, 2))
            a = rng.uniform(0, 2 * np.pi)
            Q = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
            g1 = grad_analysis(G, 0.9)
            g2 = grad_analysis(Q @ G @ Q.T, 0.9)
            for key in ("omega", "d", "gap2"):
                assert getattr(g2, key) == pytest.approx(getattr(g1, key), abs=1e-12)
            assert threshold_indicator(g2) == pytest.approx(threshold_indicator(g1), abs=1e-11)

    def test_csv_row_layout(self):
        g = grad_analysis(np.eye(2) / 2, 0.5)
        row = threshold_report(g, alpha=(1.0, 2.0)).csv_row()
        assert len(row) == len(ThresholdReport.CSV_HEADER)
        assert row[0] == "1.0" and row[-1] == "Subcritical"
        assert float(row[ThresholdReport.CSV_HEADER.index("i0")]) == 1.0
