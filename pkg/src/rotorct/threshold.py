"""Critical-threshold indicator, material constants and classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PhiZero, SupercriticalData
from .fields import FieldSpec, GradientState, gradient_summary, grad_analysis, sample_field


class Verdict(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    MARGINAL = "Marginal"


def default_margin_tol(k: float) -> float:
    return 1e-10 * (1.0 + 4.0 * k * k)


def verdict_for(value: float, tol: float) -> Verdict:
    if value > tol:
        return Verdict.SUBCRITICAL
    if value < -tol:
        return Verdict.SUPERCRITICAL
    return Verdict.MARGINAL


@dataclass(frozen=True)
class ThresholdReport:
    i0: float
    C0: float
    D0: Optional[float]
    p0: Optional[float]
    theta0: Optional[float]
    verdict: Verdict
    margin_tol: float
    omega0: float = math.nan
    d0: float = math.nan
    gap2_0: float = math.nan
    alpha: tuple[float, float] = (math.nan, math.nan)

    CSV_HEADER = ("alpha_x", "alpha_y", "omega0", "d0", "gap2_0", "i0",
                  "C0", "D0", "p0", "theta0", "verdict")

    def csv_row(self) -> list:
        def opt(v):
            return "" if v is None else repr(float(v))
        return [repr(float(self.alpha[0])), repr(float(self.alpha[1])),
                repr(float(self.omega0)), repr(float(self.d0)), repr(float(self.gap2_0)),
                repr(float(self.i0)), repr(float(self.C0)), opt(self.D0), opt(self.p0), opt(self.theta0),
                self.verdict.value]


@dataclass(frozen=True)
class Threshold1DReport:
    B0: float
    theta0_1d: Optional[float]
    verdict: Verdict


def threshold_indicator(g: GradientState) -> float:
    """``4k(k - omega) - gap2``; positive exactly for globally smooth data."""
    return 4.0 * g.k * (g.k - g.omega) - g.gap2


def material_constants(g: GradientState) -> tuple[float, float]:
    """Values of the two material invariants ``(C0, D0)`` at the initial state."""
    phi, k = g.phi, g.k
    if phi == 0.0:
        raise PhiZero("phi0 = 0: material constants undefined")
    C0 = (2.0 * phi - g.gap2 - 4.0 * k * k) / (phi * phi)
    D0 = (g.d * g.d + 4.0 * k * k + C0 * phi * phi) / phi
    return C0, D0


def p0_from(i0: float, d0: float, k: float) -> float:
    """``sqrt(i0) / (d0^2 + (sqrt(i0) - 2k)^2)``; infinite at orbit centers."""
    si = math.sqrt(i0)
    denom = d0 * d0 + (si - 2.0 * k) ** 2
    return math.inf if denom == 0.0 else si / denom


def theta_from_p0(p0: float, k: float) -> float:
    if math.isinf(p0):
        return 1.0
    s = math.sqrt(1.0 + 8.0 * k * p0)
    return (s - 1.0) / (s + 1.0)


def theta0_params(g: GradientState) -> tuple[float, float]:
    """``(p0, theta0)``: the orbit eccentricity parameter in ``(0, 1)``."""
    i0 = threshold_indicator(g)
    if i0 <= 0.0:
        raise SupercriticalData(f"i0 = {i0} <= 0")
    p0 = p0_from(i0, g.d, g.k)
    return p0, theta_from_p0(p0, g.k)


def threshold_report(g: GradientState, margin_tol: float | None = None,
                     alpha=(math.nan, math.nan)) -> ThresholdReport:
    tol = default_margin_tol(g.k) if margin_tol is None else margin_tol
    i0 = threshold_indicator(g)
    C0 = i0 / (g.phi * g.phi) if g.phi != 0.0 else math.nan
    D0 = p0 = theta0 = None
    if g.phi != 0.0:
        C0, D0 = material_constants(g)
    verdict = verdict_for(i0, tol)
    if verdict is Verdict.SUBCRITICAL:
        p0, theta0 = theta0_params(g)
    return ThresholdReport(i0=i0, C0=C0, D0=D0, p0=p0, theta0=theta0, verdict=verdict,
                           margin_tol=tol, omega0=g.omega, d0=g.d, gap2_0=g.gap2,
                           alpha=(float(alpha[0]), float(alpha[1])))


def threshold_1d(u0p: float, v0p: float, k: float, tol: float | None = None) -> Threshold1DReport:
    """Classify ``y``-independent data from the slopes ``u0'`` and ``v0'``."""
    if k <= 0:
        raise ValueError("k must be positive")
    tol = 1e-10 if tol is None else tol
    omega, d = -v0p, u0p
    denom = d * d + omega * omega
    num = (2.0 * k - omega) ** 2
    B0 = math.inf if denom == 0.0 else num / denom
    verdict = verdict_for(B0 - 1.0, tol)
    theta = None
    if B0 > 1.0:
        theta = 1.0 if math.isinf(B0) else (math.sqrt(B0) - 1.0) / (math.sqrt(B0) + 1.0)
    return Threshold1DReport(B0=B0, theta0_1d=theta, verdict=verdict)


def free_transport_breakdown(lambda0: complex, direction: str = "forward") -> float:
    """Breakdown time of ``lambda' = -lambda^2`` started at ``lambda0``.

    Returns the elapsed time until ``1 + t*lambda0 = 0`` in the requested
    direction, or ``inf``.  Non-real ``lambda0`` never breaks in either direction.
    """
    lam = complex(lambda0)
    if lam.imag != 0.0 or lam.real == 0.0:
        return math.inf
    if direction == "forward":
        return -1.0 / lam.real if lam.real < 0 else math.inf
    if direction == "backward":
        return 1.0 / lam.real if lam.real > 0 else math.inf
    raise ValueError("direction must be 'forward' or 'backward'")


def free_transport_eigenvalue(lambda0: complex, t: float) -> complex:
    return lambda0 / (t * lambda0 + 1.0)


# ---------------------------------------------------------------------------
# field-wide classification


@dataclass(frozen=True)
class Lattice:
    """Tensor lattice over the field domain; ``refine`` multiplies both counts."""

    nx: int = 32
    ny: int = 32
    refine: int = 1
    x: Optional[tuple[float, float]] = None
    y: Optional[tuple[float, float]] = None

    def points(self, spec: FieldSpec) -> np.ndarray:
        nx, ny = self.nx * self.refine, self.ny * self.refine
        if nx < 1 or ny < 1:
            raise ValueError("lattice must be nonempty")
        xr = self.x or spec.domain.x
        yr = self.y or spec.domain.y
        if not all(np.isfinite(xr + yr)):
            raise ValueError("lattice bounds required for an unbounded domain")
        endpoint = not spec.domain.periodic
        xs = np.linspace(xr[0], xr[1], nx, endpoint=endpoint)
        ys = np.linspace(yr[0], yr[1], ny, endpoint=endpoint)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)


@dataclass
class FieldReport:
    points: np.ndarray
    reports: list[ThresholdReport]
    min_i0: float
    argmin: int
    verdict: Verdict

    def i0(self) -> np.ndarray:
        return np.array([r.i0 for r in self.reports])


def classify_field(spec: FieldSpec, k: float, grid: Lattice | np.ndarray,
                   margin_tol: float | None = None) -> FieldReport:
    """Threshold report at every lattice point, plus the field-wide verdict.

    The field is Subcritical only if every sampled point is.
    """
    pts = grid.points(spec) if isinstance(grid, Lattice) else np.asarray(grid, float)
    if pts.size == 0:
        raise ValueError("grid must be nonempty")
    pts = pts.reshape(-1, 2)
    _, grads = sample_field(spec, pts)
    tol = default_margin_tol(k) if margin_tol is None else margin_tol
    reports = [threshold_report(grad_analysis(G, k), tol, alpha=a) for G, a in zip(grads, pts)]
    summ = gradient_summary(grads, k)
    i0 = 4.0 * k * (k - summ["omega"]) - summ["gap2"]
    j = int(np.argmin(i0))
    return FieldReport(points=pts, reports=reports, min_i0=float(i0[j]), argmin=j,
                       verdict=verdict_for(float(i0[j]), tol))
