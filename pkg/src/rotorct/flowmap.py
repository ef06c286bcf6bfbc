"""Exact Lagrangian flow map of the rotating convection model.

Particles obey ``X'' = 2k J X'``, so with ``R(t) = exp(2kJt)``::

    X(t)  = alpha + (1/2k) J^{-1} (R(t) - I) U0(alpha)
    X'(t) = R(t) U0(alpha)

and the Jacobian ``dX/dalpha = I + (1/2k) J (I - R(t)) grad U0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoConvergence, SingularJacobian
from .fields import J, FieldSpec, as_mat2, sample_field

I2 = np.eye(2)


def rotation(theta) -> np.ndarray:
    """``exp(theta J) = [[cos, sin], [-sin, cos]]`` (broadcasts over ``theta``)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


@dataclass(frozen=True)
class FlowMapState:
    X: np.ndarray
    Xdot: np.ndarray
    jac: Optional[np.ndarray] = None
    det_scaled: Optional[float] = None


@dataclass(frozen=True)
class OrbitDescriptor:
    center: np.ndarray
    radius: float
    period: float

    def to_dict(self) -> dict:
        return {"center": [float(c) for c in self.center], "radius": float(self.radius),
                "period": float(self.period)}


def _check_k(k):
    if not k > 0:
        raise ValueError("k must be positive")


def flow_map(alpha, U0, k: float, t: float, grad0=None) -> FlowMapState:
    """Position and velocity of the particle started at ``alpha`` at time ``t``.

    When ``grad0`` is given the Jacobian and ``det(jac)`` are included.
    """
    _check_k(k)
    alpha = np.asarray(alpha, float)
    U0 = np.asarray(U0, float)
    R = rotation(2.0 * k * t)
    RU = R @ U0
    # J^{-1} = -J
    X = alpha - (J @ (RU - U0)) / (2.0 * k)
    jac = det_scaled = None
    if grad0 is not None:
        jac = jacobian(grad0, k, t)
        det_scaled = float(np.linalg.det(jac))
    return FlowMapState(X=X, Xdot=RU, jac=jac, det_scaled=det_scaled)


def velocity_law(alpha, U0, X, k: float) -> np.ndarray:
    """``U(X) = U0 + 2k J (X - alpha)``."""
    return np.asarray(U0, float) + 2.0 * k * (J @ (np.asarray(X, float) - np.asarray(alpha, float)))


def orbit_descriptor(alpha, U0, k: float) -> OrbitDescriptor:
    _check_k(k)
    U0 = np.asarray(U0, float)
    center = np.asarray(alpha, float) + (J @ U0) / (2.0 * k)
    return OrbitDescriptor(center=center, radius=float(np.hypot(*U0) / (2.0 * k)),
                           period=math.pi / k)


def jacobian(grad0, k: float, t: float) -> np.ndarray:
    _check_k(k)
    G = as_mat2(grad0).astype(float)
    return I2 + (J @ (I2 - rotation(2.0 * k * t)) @ G) / (2.0 * k)


def _det_coefficients(omega0, d0, det0, k):
    A = 4.0 * k * k - 2.0 * k * omega0 + 2.0 * det0
    B = 2.0 * k * omega0 - 2.0 * det0
    C = 2.0 * k * d0
    return A, B, C


def jacobian_det(omega0: float, d0: float, det0: float, k: float, t: float) -> float:
    """Closed form of ``det(2k * jac)`` as ``A + B cos 2kt + C sin 2kt``."""
    _check_k(k)
    A, B, C = _det_coefficients(omega0, d0, det0, k)
    th = 2.0 * k * t
    return A + B * np.cos(th) + C * np.sin(th)


def no_singularity_condition(omega0, d0, det0, k) -> bool:
    """``A^2 > B^2 + C^2``: the determinant never reaches zero."""
    A, B, C = _det_coefficients(omega0, d0, det0, k)
    return A * A > B * B + C * C


def first_singularity(omega0: float, d0: float, det0: float, k: float) -> Optional[float]:
    """Smallest ``t > 0`` with ``det(jac) = 0``, or ``None`` if there is none.

    Tangential zeros (threshold indicator exactly zero) are reported too.
    """
    _check_k(k)
    A, B, C = _det_coefficients(omega0, d0, det0, k)
    R = math.hypot(B, C)
    if A > R:
        return None
    psi = math.atan2(C, B)
    beta = math.acos(max(-1.0, min(1.0, -A / R)))
    two_pi = 2.0 * math.pi
    cands = []
    for base in (psi + beta, psi - beta):
        th = math.fmod(base, two_pi)
        if th <= 0.0:
            th += two_pi
        cands.append(th)
    th = min(cands)
    t = th / (2.0 * k)
    f = A + B * math.cos(th) + C * math.sin(th)
    fp = 2.0 * k * (-B * math.sin(th) + C * math.cos(th))
    if fp != 0.0:
        step = f / fp
        if abs(step) < 1e-6 * (1.0 + t):
            t -= step
    return t


def eulerian_gradient(grad0, k: float, t: float) -> np.ndarray:
    """Velocity gradient at ``X_alpha(t)``: ``(grad U0 + 2kJ(jac - I)) jac^{-1}``."""
    G = as_mat2(grad0).astype(float)
    jac = jacobian(G, k, t)
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if abs(det) <= 1e-14 * max(1.0, np.abs(jac).max() ** 2):
        raise SingularJacobian(f"det(jac) = {det} at t = {t}")
    B = G + 2.0 * k * (J @ (jac - I2))
    inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    return B @ inv


def flow_path(alpha, U0, grad0, k: float, times) -> dict[str, np.ndarray]:
    """Vectorized path samples: positions, velocities and ``det(jac)``."""
    _check_k(k)
    times = np.asarray(times, float)
    alpha = np.asarray(alpha, float)
    U0 = np.asarray(U0, float)
    R = rotation(2.0 * k * times)
    RU = R @ U0
    X = alpha - ((RU - U0) @ J.T) / (2.0 * k)
    G = as_mat2(grad0).astype(float)
    jac = I2 + (J @ (I2 - R) @ G) / (2.0 * k)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    return {"t": times, "X": X, "U": RU, "det_scaled": det}


PATH_HEADER = ("t", "X1", "X2", "U1", "U2", "det_scaled")


def invert_flow_map(x, t: float, spec: FieldSpec, k: float, seed_grid=None,
                    max_iter: int = 50, max_seeds: int = 16) -> np.ndarray:
    """Find ``alpha`` with ``X_alpha(t) = x`` by Newton iteration.

    Seeds come from a coarse lattice (default 16x16 over the field domain,
    or over a box of half-width ``1 + |x|`` around ``x`` when the domain is
    unbounded), tried in order of how close their image lands to ``x``.
    """
    from .threshold import Lattice

    _check_k(k)
    x = np.asarray(x, float)
    grid = seed_grid
    if grid is None:
        if np.all(np.isfinite(spec.domain.x + spec.domain.y)):
            grid = Lattice(16, 16)
        else:
            h = 1.0 + float(np.hypot(*x))
            grid = Lattice(16, 16, x=(x[0] - h, x[0] + h), y=(x[1] - h, x[1] + h))
    seeds = grid.points(spec) if isinstance(grid, Lattice) else np.asarray(grid, float)
    U, _ = sample_field(spec, seeds)
    R = rotation(2.0 * k * t)
    images = seeds - ((U @ R.T - U) @ J.T) / (2.0 * k)
    order = np.argsort(np.hypot(*(images - x).T))
    tol = 1e-10 * (1.0 + np.hypot(*x))
    singular = False
    for j in order[:max_seeds]:
        a = seeds[j].copy()
        for _ in range(max_iter):
            U0, G = sample_field(spec, a)
            F = a - (J @ (R @ U0 - U0)) / (2.0 * k) - x
            if np.hypot(*F) <= tol:
                return a
            jac = I2 + (J @ (I2 - R) @ G) / (2.0 * k)
            try:
                a = a - np.linalg.solve(jac, F)
            except np.linalg.LinAlgError:
                singular = True
                break
            if not np.all(np.isfinite(a)):
                break
            if not spec.domain.periodic and not np.all(spec.domain.contains(a)):
                break
    if singular:
        raise SingularJacobian("flow-map Jacobian singular during inversion")
    raise NoConvergence(f"no preimage of {x} found at t={t}")
