import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotorct.errors import DegenerateOrbit, SupercriticalData
from rotorct.period import (SWEEP_HEADER, orbit_geometry, period_from_phi_integral, period_integrand,
                            period_quadrature, physical_period, rossby_to_rotation, sweep_rows)
from rotorct.spectral_ode import empirical_period, integrate

THETA_GRID = [0.01] + [round(0.05 * i, 10) for i in range(1, 21)]


def analytic_half_integral(theta0):
    # antiderivative 2/sqrt(a^2-b^2) atan((a tan(t/2) + b)/sqrt(a^2-b^2)), with a^2 - b^2 = 4
    a, b = theta0 + 1 / theta0, 1 / theta0 - theta0
    return math.atan((a + b) / 2) - math.atan((b - a) / 2)


class TestOrbitGeometry:
    def test_golden_orbit(self):
        g = orbit_geometry(1.0, 3.0, 0.5)
        assert g.center_phi == 1.0 and g.ellipse_rhs_coeff == 1.0
        assert g.phi_minus == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-15)
        assert g.phi_plus == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-15)

    def test_point_orbit(self):
        g = orbit_geometry(1.0, 2.0, 0.5)
        assert g.ellipse_rhs_coeff == 0.0
        assert g.phi_minus == pytest.approx(1.0) and g.phi_plus == pytest.approx(1.0)

    @given(st.floats(0.1, 3), st.floats(0.05, 4), st.floats(1.001, 5))
    def test_vieta(self, k, C0, ratio):
        D0 = ratio * 4 * k * math.sqrt(C0)
        g = orbit_geometry(C0, D0, k)
        assert g.phi_minus * g.phi_plus == pytest.approx(4 * k * k / C0, rel=1e-12)
        assert g.phi_minus <= g.center_phi <= g.phi_plus

    def test_left_half_plane(self):
        g = orbit_geometry(1.0, -3.0, 0.5)
        assert g.phi_plus < g.phi_minus < 0

    def test_supercritical(self):
        with pytest.raises(SupercriticalData):
            orbit_geometry(-0.1, 3.0, 0.5)


class TestIntegrand:
    def test_examples(self):
        assert period_integrand(0.3, 1.0) == 0.5
        assert period_integrand(-math.pi / 2, 1 / 3) == pytest.approx(1.5, rel=1e-15)
        assert period_integrand(math.pi / 2, 1 / 3) == pytest.approx(1 / 6, rel=1e-15)

    @given(st.floats(-math.pi / 2, math.pi / 2), st.floats(1e-3, 1.0))
    def test_positive(self, th, th0):
        assert period_integrand(th, th0) > 0


class TestQuadrature:
    def test_constant_integrand(self):
        assert period_quadrature(1.0, 1.0).T_bar == pytest.approx(math.pi, abs=1e-15)

    def test_examples(self):
        tol = 1e-12
        assert abs(period_quadrature(0.381966, 0.5, tol).T_bar - 2 * math.pi) <= tol
        assert abs(period_quadrature(0.01, 1.0, tol).T_bar - math.pi) <= tol

    @pytest.mark.parametrize("theta0", THETA_GRID)
    def test_half_pi_against_oracles(self, theta0):
        tol = 1e-12
        res = period_quadrature(theta0, 1.0, tol)
        integral = res.T_bar / 2
        assert analytic_half_integral(theta0) == pytest.approx(math.pi / 2, abs=1e-14)
        assert abs(integral - math.pi / 2) <= tol
        assert res.quadrature_error_estimate <= tol
        if theta0 >= 0.1:
            x, w = np.polynomial.legendre.leggauss(400)
            th = 0.5 * math.pi * x
            gl = 0.5 * math.pi * np.sum(w / (theta0 + 1 / theta0 + (1 / theta0 - theta0) * np.sin(th)))
            assert integral == pytest.approx(gl, abs=1e-12)

    def test_rejects_bad_theta(self):
        with pytest.raises(ValueError):
            period_quadrature(0.0, 1.0)
        with pytest.raises(ValueError):
            period_quadrature(1.5, 1.0)

    def test_sweep_rows(self):
        rows = list(sweep_rows([0.2, 1.0], 2.0))
        assert len(rows[0]) == len(SWEEP_HEADER)
        assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-12)


class TestPhiIntegral:
    def test_examples(self):
        tol = 1e-12
        assert abs(period_from_phi_integral(1.0, 3.0, 0.5, tol).T_bar - 2 * math.pi) <= tol
        # phi ~ k^2, C0 ~ 1/k^2, D0 ~ k
        assert abs(period_from_phi_integral(0.25, 6.0, 1.0, tol).T_bar - math.pi) <= tol

    def test_degenerate(self):
        with pytest.raises(DegenerateOrbit):
            period_from_phi_integral(1.0, 2.0, 0.5)

    def test_agrees_with_theta_form(self, rng):
        tol = 1e-12
        for _ in range(200):
            k = rng.uniform(0.1, 3)
            C0 = rng.uniform(0.05, 5)
            D0 = 4 * k * math.sqrt(C0) * rng.uniform(1.01, 6)
            a = period_from_phi_integral(C0, D0, k, tol)
            b = period_quadrature(a.theta0, k, tol)
            assert abs(a.T_bar - b.T_bar) <= 2 * tol

    def test_matches_ode_period(self):
        k, C0, D0 = 0.5, 1.0, 3.0
        g = orbit_geometry(C0, D0, k)
        state = (g.phi_plus, 0.0, 2 * g.phi_plus - 4 * k * k - C0 * g.phi_plus ** 2)
        tr = integrate(state, k, 1.5 * math.pi / k)
        Tq = period_quadrature(g.theta0, k).T_bar
        assert abs(empirical_period(tr) - Tq) <= 1e-5


class TestUnits:
    def test_unit_scales(self):
        assert physical_period(math.pi, 1.0, 1.0) == math.pi

    def test_weather(self):
        Omega, k = rossby_to_rotation(0.14, 1e6, 20.0)
        T = physical_period(math.pi / k, 1e6, 20.0)
        assert T / 3600 == pytest.approx(12.22, abs=0.005)
        assert T == pytest.approx(math.pi / Omega, rel=1e-15)

    def test_gulf_stream_computed(self):
        _, k = rossby_to_rotation(0.07, 1e5, 1.0)
        assert k == pytest.approx(7.142857, rel=1e-6)
        T = physical_period(math.pi / k, 1e5, 1.0)
        assert T == pytest.approx(43982, abs=1)

    def test_validation(self):
        with pytest.raises(ValueError):
            rossby_to_rotation(0, 1, 1)
        with pytest.raises(ValueError):
            physical_period(1, -1, 1)
