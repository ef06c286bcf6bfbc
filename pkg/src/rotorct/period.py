"""Orbit geometry of the reduced gradient dynamics and the orbit period.

The period is evaluated two ways: from the eccentricity parameter ``theta0``
and directly from the ``phi`` turning points.  Both reduce to smooth
integrands on ``[-pi/2, pi/2]`` and are evaluated with adaptive
Gauss-Kronrod quadrature (QUADPACK through :func:`scipy.integrate.quad`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import DegenerateOrbit, SupercriticalData


@dataclass(frozen=True)
class OrbitGeometry:
    center_phi: float
    phi_minus: float
    phi_plus: float
    ellipse_rhs_coeff: float

    @property
    def theta0(self) -> float:
        """Eccentricity parameter: ``sqrt(phi_minus / phi_plus)``."""
        return math.sqrt(self.phi_minus / self.phi_plus)


@dataclass(frozen=True)
class PeriodResult:
    T_bar: float
    quadrature_error_estimate: float
    theta0: float


def orbit_geometry(C0: float, D0: float, k: float) -> OrbitGeometry:
    """Center and ``d = 0`` turning points of the closed orbit fixed by ``(C0, D0)``.

    Orbits in the left half-plane (``D0 < 0``) are returned with negative
    ``phi`` values; ``phi_minus`` is then the turning point nearest zero.
    """
    if C0 <= 0:
        raise SupercriticalData(f"C0 = {C0} <= 0: orbit is unbounded")
    sc = math.sqrt(C0)
    sign = 1.0 if D0 >= 0 else -1.0
    D = abs(D0)
    coeff = D - 4.0 * k * sc
    disc = D * D - 16.0 * k * k * C0
    if disc < 0:
        if disc < -1e-12 * D * D:
            raise ValueError("no real turning points: (C0, D0) not attainable")
        disc = 0.0
    phi_far = (D + math.sqrt(disc)) / (2.0 * C0)
    phi_near = 4.0 * k * k / (C0 * phi_far)
    return OrbitGeometry(center_phi=sign * 2.0 * k / sc, phi_minus=sign * phi_near,
                         phi_plus=sign * phi_far, ellipse_rhs_coeff=coeff)


def period_integrand(theta: float, theta0: float) -> float:
    a = theta0 + 1.0 / theta0
    b = 1.0 / theta0 - theta0
    return 1.0 / (a + b * math.sin(theta))


def period_quadrature(theta0: float, k: float, tol: float = 1e-12) -> PeriodResult:
    """Orbit period ``(2/k) * int_{-pi/2}^{pi/2} dtheta / (A + B sin theta)``."""
    if not 0.0 < theta0 <= 1.0:
        raise ValueError("theta0 must lie in (0, 1]")
    if k <= 0:
        raise ValueError("k must be positive")
    a = theta0 + 1.0 / theta0
    b = 1.0 / theta0 - theta0
    val, err = integrate.quad(lambda th: 1.0 / (a + b * math.sin(th)),
                              -0.5 * math.pi, 0.5 * math.pi,
                              epsabs=0.5 * k * tol, epsrel=0.0, limit=500)
    return PeriodResult(T_bar=2.0 / k * val, quadrature_error_estimate=2.0 / k * err,
                        theta0=theta0)


def period_from_phi_integral(C0: float, D0: float, k: float, tol: float = 1e-12) -> PeriodResult:
    """Period as twice the ``phi``-transit time between the turning points.

    ``T = (2/sqrt C0) int ds / (s sqrt((phi+ - s)(s - phi-)))``; the
    substitution ``s = mid + half*sin(theta)`` removes both endpoint
    singularities, leaving
    ``(4/sqrt C0) int_{-pi/2}^{pi/2} dtheta / (phi- + phi+ + (phi+ - phi-) sin theta)``.
    """
    geo = orbit_geometry(C0, D0, k)
    lo, hi = abs(geo.phi_minus), abs(geo.phi_plus)
    if hi - lo <= 1e-14 * hi:
        raise DegenerateOrbit("turning points coincide: equilibrium data")
    sc = math.sqrt(C0)
    s_sum, s_diff = lo + hi, hi - lo
    val, err = integrate.quad(lambda th: 1.0 / (s_sum + s_diff * math.sin(th)),
                              -0.5 * math.pi, 0.5 * math.pi,
                              epsabs=0.25 * sc * tol, epsrel=0.0, limit=500)
    return PeriodResult(T_bar=4.0 / sc * val, quadrature_error_estimate=4.0 / sc * err,
                        theta0=math.sqrt(lo / hi))


def rossby_to_rotation(epsilon: float, L_bar: float, U_bar: float) -> tuple[float, float]:
    """``(Omega, k)`` for Rossby number ``epsilon = U/(2 Omega L)``; ``2k = 1/epsilon``."""
    if min(epsilon, L_bar, U_bar) <= 0:
        raise ValueError("epsilon, L_bar and U_bar must be positive")
    return U_bar / (2.0 * epsilon * L_bar), 1.0 / (2.0 * epsilon)


def physical_period(T_bar: float, L_bar: float, U_bar: float) -> float:
    """Scaled period to seconds: ``T = T_bar * L_bar / U_bar``."""
    if min(T_bar, L_bar, U_bar) <= 0:
        raise ValueError("inputs must be positive")
    return T_bar * L_bar / U_bar


SWEEP_HEADER = ("theta0", "T_bar", "err_estimate", "T_bar_times_k_over_pi")


def sweep_rows(thetas, k: float, tol: float = 1e-12):
    for th in thetas:
        res = period_quadrature(th, k, tol)
        yield [repr(float(th)), repr(res.T_bar), repr(res.quadrature_error_estimate),
               repr(res.T_bar * k / math.pi)]
