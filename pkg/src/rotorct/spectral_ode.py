"""Spectral dynamics of the velocity gradient along a particle path.

The closed system for ``W = (phi, d, gap2)``::

    phi'  = -d phi
    d'    = -(d^2 + gap2)/2 + phi - 4k^2
    gap2' = 2 d (phi - 4k^2 - gap2)

with ``phi = 4k^2 - 2k omega``.  Integration uses an adaptive Dormand-Prince
5(4) pair; blowup is reported as a time bracket.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _dopri
from .errors import InconsistentInitialPair, NotEquilibrium


@dataclass(frozen=True)
class SpectralState:
    phi: float
    d: float
    gap2: float

    @classmethod
    def from_omega(cls, omega: float, d: float, gap2: float, k: float) -> "SpectralState":
        return cls(4.0 * k * k - 2.0 * k * omega, d, gap2)

    @classmethod
    def from_gradient(cls, g) -> "SpectralState":
        return cls(g.phi, g.d, g.gap2)

    def omega(self, k: float) -> float:
        return (4.0 * k * k - self.phi) / (2.0 * k)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi, self.d, self.gap2)


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_init: float = 1e-3
    dt_min: float = 1e-13
    blowup_bound: float = 1e10
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not self.dt_min < self.dt_init:
            raise ValueError("dt_min must be smaller than dt_init")


@dataclass
class RSTrack:
    r: np.ndarray
    s: np.ndarray
    amp2: np.ndarray            # gap2 + omega^2 along the path
    amp2_quadrature: np.ndarray  # (r0^2 + s0^2) exp(-2 int d)
    max_rel_discrepancy: float


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (n, 3): phi, d, gap2
    k: float
    C_drift: np.ndarray
    D_drift: np.ndarray
    blowup: Optional[tuple[float, float]] = None
    rs_track: Optional[RSTrack] = None
    dense: list = field(default_factory=list, repr=False)

    @property
    def invariant_drift(self) -> tuple[float, float]:
        if self.C_drift.size == 0 or np.all(np.isnan(self.C_drift)):
            return (math.nan, math.nan)
        return (float(np.nanmax(np.abs(self.C_drift))), float(np.nanmax(np.abs(self.D_drift))))

    @property
    def phi(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def d(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def gap2(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def omega(self) -> np.ndarray:
        return (4.0 * self.k ** 2 - self.phi) / (2.0 * self.k) if self.k else np.full(len(self.times), math.nan)

    def __call__(self, t: float) -> np.ndarray:
        """Dense-output interpolation of the state at time ``t``."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.dense) - 1)
        t0, t1 = self.times[i], self.times[i + 1]
        return np.array(_dopri.dense_eval(self.dense[i], (t - t0) / (t1 - t0)))

    CSV_HEADER = ("t", "phi", "d", "gap2", "omega", "C_drift", "D_drift")

    def csv_rows(self):
        om = self.omega
        for i, t in enumerate(self.times):
            yield [repr(float(t)), repr(float(self.states[i, 0])), repr(float(self.states[i, 1])),
                   repr(float(self.states[i, 2])), repr(float(om[i])),
                   repr(float(self.C_drift[i])), repr(float(self.D_drift[i]))]

    def summary(self) -> dict:
        cd, dd = self.invariant_drift
        return {
            "k": self.k,
            "t_final": float(self.times[-1]),
            "n_steps": len(self.times) - 1,
            "blowup": None if self.blowup is None else {"t_lo": self.blowup[0], "t_hi": self.blowup[1]},
            "max_C_drift": cd,
            "max_D_drift": dd,
            "initial_state": {"phi": float(self.states[0, 0]), "d": float(self.states[0, 1]),
                              "gap2": float(self.states[0, 2])},
        }


def rhs_w(state, k: float) -> tuple[float, float, float]:
    phi, d, g = state
    kk = 4.0 * k * k
    return (-d * phi, -0.5 * (d * d + g) + phi - kk, 2.0 * d * (phi - kk - g))


def rhs_omega(state, k: float) -> tuple[float, float, float]:
    omega, d, g = state
    return (2.0 * k * d - d * omega, -0.5 * (d * d + g) - 2.0 * k * omega,
            2.0 * d * (-2.0 * k * omega - g))


def rhs_reduced(state, C0: float, k: float) -> tuple[float, float]:
    """Two-variable ``(phi, d)`` system with the first invariant frozen at ``C0``."""
    phi, d = state
    return (-phi * d, -0.5 * (d * d + 4.0 * k * k - C0 * phi * phi))


def invariants(phi, d, gap2, k):
    """``C = (2 phi - gap2 - 4k^2)/phi^2`` and ``D = (d^2 - gap2 + 2 phi)/phi``."""
    phi = np.asarray(phi, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        C = (2.0 * phi - gap2 - 4.0 * k * k) / (phi * phi)
        D = (np.asarray(d) ** 2 - gap2 + 2.0 * phi) / phi
    return C, D


def _bracket_end(t_lo: float, y) -> float:
    # Near a Riccati singularity the most negative eigenvalue behaves like
    # -1/(t* - t); two such time constants bound the remaining time.
    _, d, g = y
    if not (math.isfinite(d) and math.isfinite(g)):
        return t_lo
    lam = 0.5 * (d - math.sqrt(g)) if g >= 0 else 0.5 * d
    rate = max(abs(lam), 1e-300)
    return t_lo + 2.0 / rate


def _package(raw: _dopri.RawSolution, k: float, C0: float, D0: float,
             three: bool = True) -> Trajectory:
    times = np.array(raw.times)
    states = np.array(raw.states)
    if three:
        C, D = invariants(states[:, 0], states[:, 1], states[:, 2], k)
        C_drift, D_drift = C - C0, D - D0
    else:
        C_drift = D_drift = np.full(len(times), math.nan)
    blowup = None
    if raw.status != "ok":
        t_lo = float(times[-2] if raw.status == "blowup" and len(times) > 1 else times[-1])
        y_last = raw.states[-1]
        t_hi = max(_bracket_end(float(times[-1]), y_last), float(times[-1]))
        if raw.status == "underflow":
            t_hi = max(t_hi, raw.last_attempt)
        if t_hi <= t_lo:
            t_hi = np.nextafter(t_lo, math.inf)
        blowup = (t_lo, float(t_hi))
    return Trajectory(times=times, states=states, k=k, C_drift=C_drift, D_drift=D_drift,
                      blowup=blowup, dense=raw.dense)


def integrate(state0, k: float, t_end: float, cfg: SolverConfig | None = None) -> Trajectory:
    """Integrate the ``(phi, d, gap2)`` system from ``state0`` up to ``t_end``.

    Blowup (state beyond ``cfg.blowup_bound`` or step underflow) stops the
    run and sets ``Trajectory.blowup`` to ``(t_lo, t_hi)``: ``t_lo`` is the
    last accepted time with the state below the bound and ``t_hi`` an upper
    estimate of the singular time from the local Riccati rate.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    cfg = cfg or SolverConfig()
    y0 = state0.as_tuple() if isinstance(state0, SpectralState) else tuple(map(float, state0))
    phi0 = y0[0]
    if phi0 != 0.0:
        C0 = (2.0 * phi0 - y0[2] - 4.0 * k * k) / phi0 ** 2
        D0 = (y0[1] ** 2 - y0[2] + 2.0 * phi0) / phi0
    else:
        C0 = D0 = math.nan
    kk = 4.0 * k * k

    def fun(y):
        phi, d, g = y
        return (-d * phi, -0.5 * (d * d + g) + phi - kk, 2.0 * d * (phi - kk - g))

    raw = _dopri.solve(fun, y0, t_end, cfg.rel_tol, cfg.abs_tol, cfg.dt_init,
                       cfg.dt_min, cfg.blowup_bound, cfg.max_steps)
    return _package(raw, k, C0, D0)


def integrate_omega(state0, k: float, t_end: float, cfg: SolverConfig | None = None) -> Trajectory:
    """Integrate the ``(omega, d, gap2)`` form.

    Usable at ``k = 0``, where ``phi`` carries no information.  ``states``
    are converted to ``phi`` form; the untouched ``(omega, d, gap2)`` samples
    are kept in ``omega_states`` and the dense output stays in omega form.
    """
    cfg = cfg or SolverConfig()
    om0, d0, g0 = map(float, state0)

    def fun(y):
        om, d, g = y
        return (2.0 * k * d - d * om, -0.5 * (d * d + g) - 2.0 * k * om,
                2.0 * d * (-2.0 * k * om - g))

    raw = _dopri.solve(fun, (om0, d0, g0), t_end, cfg.rel_tol, cfg.abs_tol, cfg.dt_init,
                       cfg.dt_min, cfg.blowup_bound, cfg.max_steps)
    traj = _package(raw, k, math.nan, math.nan, three=False)
    traj.omega_states = traj.states.copy()
    om = traj.states[:, 0]
    traj.states = np.column_stack([4 * k * k - 2 * k * om, traj.states[:, 1], traj.states[:, 2]])
    return traj


def integrate_reduced(phi0: float, d0: float, C0: float, k: float, t_end: float,
                      cfg: SolverConfig | None = None) -> Trajectory:
    """Integrate the reduced ``(phi, d)`` system and reconstruct ``gap2`` from ``C0``.

    Cross-check for :func:`integrate`: both must agree to integration tolerance.
    """
    cfg = cfg or SolverConfig()
    kk = 4.0 * k * k

    def fun(y):
        phi, d = y
        return (-phi * d, -0.5 * (d * d + kk - C0 * phi * phi))

    raw = _dopri.solve(fun, (phi0, d0), t_end, cfg.rel_tol, cfg.abs_tol, cfg.dt_init,
                       cfg.dt_min, cfg.blowup_bound, cfg.max_steps)
    st = np.array(raw.states)
    gap2 = 2.0 * st[:, 0] - kk - C0 * st[:, 0] ** 2
    full = [(p, d, g) for (p, d), g in zip(raw.states, gap2)]
    raw.states = full
    g0 = full[0][2]
    D0 = (d0 * d0 - g0 + 2 * phi0) / phi0
    return _package(raw, k, C0, D0)


def _integrate_job(args):
    state0, k, t_end, cfg = args
    traj = integrate(state0, k, t_end, cfg)
    traj.dense = []
    return traj


def default_workers() -> int:
    env = os.environ.get("ROTORCT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, (os.cpu_count() or 1))


def integrate_batch(states: Sequence, ks, t_end, cfg: SolverConfig | None = None,
                    workers: int | None = None) -> list[Trajectory]:
    """Integrate independent trajectories; output order follows input order.

    ``ks`` and ``t_end`` may be scalars or per-trajectory sequences.  Dense
    output is dropped from batch results.
    """
    n = len(states)
    ks = [ks] * n if np.isscalar(ks) else list(ks)
    ts = [t_end] * n if np.isscalar(t_end) else list(t_end)
    jobs = [(s, k, t, cfg) for s, k, t in zip(states, ks, ts)]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or n < 2:
        return [_integrate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_integrate_job, jobs, chunksize=max(1, n // (4 * workers))))


def empirical_period(traj: Trajectory) -> Optional[float]:
    """First return time of ``(phi, d)`` to its initial point, or ``None``.

    The return is detected as an upward crossing of the line through the
    initial point normal to the initial phase velocity, after the path has
    crossed it downward on the far side of the orbit; the crossing time is
    refined with the dense output.
    """
    if traj.blowup is not None or len(traj.dense) == 0:
        return None
    p0, d0 = traj.states[0, 0], traj.states[0, 1]
    v = rhs_w(traj.states[0], traj.k)[:2]
    scale = max(np.ptp(traj.states[:, 0]), np.ptp(traj.states[:, 1]))
    if scale <= 1e-12 * (1.0 + abs(p0) + abs(d0)) or math.hypot(*v) == 0.0:
        return None
    nv = math.hypot(*v)
    v = (v[0] / nv, v[1] / nv)
    sec = (traj.states[:, 0] - p0) * v[0] + (traj.states[:, 1] - d0) * v[1]
    seen_negative = False
    for i in range(1, len(sec)):
        if sec[i] < 0:
            seen_negative = True
            continue
        if seen_negative and sec[i - 1] < 0 <= sec[i]:
            rc = traj.dense[i - 1]

            def g(theta):
                y = _dopri.dense_eval(rc, theta)
                return (y[0] - p0) * v[0] + (y[1] - d0) * v[1]

            theta = brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return float(traj.times[i - 1] + theta * (traj.times[i] - traj.times[i - 1]))
    return None


def _simpson_cumulative(traj: Trajectory, values_idx: int = 1) -> np.ndarray:
    """Cumulative integral of one state component over the accepted steps.

    Trapezoid on the step nodes refined by Richardson extrapolation against
    the trapezoid that also uses dense-output midpoints (per-step Simpson).
    """
    y = traj.states[:, values_idx]
    h = np.diff(traj.times)
    mids = np.array([_dopri.dense_eval(rc, 0.5)[values_idx] for rc in traj.dense])
    trap1 = 0.5 * h * (y[:-1] + y[1:])
    trap2 = 0.25 * h * (y[:-1] + 2.0 * mids + y[1:])
    step = (4.0 * trap2 - trap1) / 3.0
    return np.concatenate([[0.0], np.cumsum(step)])


def antisymmetric_pair(traj: Trajectory, r0: float, s0: float, k: float,
                       rtol: float = 1e-8) -> RSTrack:
    """Anti-trace ``r = v_x + u_y`` and anti-vorticity ``s = u_x - v_y`` along ``traj``.

    The phase rotates at rate ``-2k`` and the amplitude is ``sqrt(gap2 + omega^2)``.
    The amplitude law ``r^2+s^2 = (r0^2+s0^2) exp(-2 int d)`` is checked by
    quadrature and its worst relative mismatch stored on the result.
    """
    amp2 = traj.gap2 + traj.omega ** 2
    if abs(r0 * r0 + s0 * s0 - amp2[0]) > rtol * max(1.0, abs(amp2[0])):
        raise InconsistentInitialPair(
            f"r0^2+s0^2 = {r0*r0+s0*s0} but gap2+omega^2 = {amp2[0]}")
    psi0 = math.atan2(r0, s0)
    amp = np.sqrt(np.clip(amp2, 0.0, None))
    ang = psi0 - 2.0 * k * traj.times
    r, s = np.sin(ang) * amp, np.cos(ang) * amp
    integral = _simpson_cumulative(traj)
    quad = (r0 * r0 + s0 * s0) * np.exp(-2.0 * integral)
    denom = np.maximum(np.abs(amp2), 1e-300)
    disc = float(np.max(np.abs(quad - amp2) / np.maximum(denom, abs(amp2[0]) * 1e-12)))
    track = RSTrack(r=r, s=s, amp2=amp2, amp2_quadrature=quad, max_rel_discrepancy=disc)
    traj.rs_track = track
    return track


def linearize(phi_star: float, gap2_star: float, k: float, exact: bool = False,
              tol: float = 1e-10):
    """Linearization at an equilibrium ``(phi*, 0, gap2*)`` and its eigenvalues.

    With ``exact=False`` the ``(3, 2)`` entry is the simplified ``2 phi*``,
    giving eigenvalues ``0, +-sqrt(-2 phi*)``.
    With ``exact=True`` it is the true Jacobian of :func:`rhs_w`; there the
    entry is ``2(phi* - 4k^2 - gap2*) = -2(phi* - 4k^2)`` and the nonzero
    eigenvalues are ``+-2ki`` for every equilibrium.
    """
    if abs(gap2_star - 2.0 * (phi_star - 4.0 * k * k)) > tol * (1.0 + abs(gap2_star)):
        raise NotEquilibrium("equilibrium requires gap2* = 2(phi* - 4k^2)")
    d = 0.0
    a32 = 2.0 * (phi_star - 4.0 * k * k - gap2_star) if exact else 2.0 * phi_star
    A = np.array([[-d, -phi_star, 0.0],
                  [1.0, -d, -0.5],
                  [2.0 * d, a32, -2.0 * d]])
    lam = np.sqrt(complex(-0.5 * a32 - phi_star))
    eig = np.array([0.0, lam, -lam], dtype=complex)
    return A, eig


def jacobian_w(state, k: float) -> np.ndarray:
    """Exact Jacobian of :func:`rhs_w` at an arbitrary state."""
    phi, d, g = state
    kk = 4.0 * k * k
    return np.array([[-d, -phi, 0.0],
                     [1.0, -d, -0.5],
                     [2.0 * d, 2.0 * (phi - kk - g), -2.0 * d]])
