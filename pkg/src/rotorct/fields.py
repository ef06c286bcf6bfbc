"""Analytic initial velocity fields and 2x2 velocity-gradient analysis.

Gradients are stored as 2x2 arrays with rows ``(u_x, u_y)`` and
``(v_x, v_y)``.  The scalar vorticity used throughout the package is

    omega = u_y - v_x

which is the sign that makes the gradient equations and the flow-map
determinant agree.  The usual curl ``v_x - u_y`` is therefore ``-omega``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateEigenvectors, OutOfDomain

J = np.array([[0.0, 1.0], [-1.0, 0.0]])

DEGENERACY_RTOL = 1e-9


def as_mat2(M) -> np.ndarray:
    M = np.asarray(M)
    if M.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenpairs of a 2x2 matrix with ``l_i @ r_j == delta_ij``.

    ``lambda1 = (d - eta)/2`` and ``lambda2 = (d + eta)/2`` where ``eta`` is
    the principal square root of ``d**2 - 4 det``, so ``eta`` is either real
    non-negative or positive imaginary.
    """

    lambda1: complex
    lambda2: complex
    l1: np.ndarray
    l2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @property
    def eta(self) -> complex:
        return self.lambda2 - self.lambda1


def _normalize_right(r: np.ndarray) -> np.ndarray:
    r = r / np.linalg.norm(r)
    # first non-negligible component made real-positive
    idx = 0 if abs(r[0]) > 1e-14 * np.abs(r).max() else 1
    return r * (abs(r[idx]) / r[idx])


def _right_eigvec(M: np.ndarray, lam: complex) -> np.ndarray:
    a11, a12 = M[0]
    a21, a22 = M[1]
    c1 = np.array([a12, lam - a11], dtype=complex)
    c2 = np.array([lam - a22, a21], dtype=complex)
    r = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    return _normalize_right(r)


def _eigenvalues(M: np.ndarray) -> tuple[complex, complex]:
    d = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    gap2 = d * d - 4.0 * det
    if gap2 >= 0:
        eta = np.sqrt(gap2)
        # avoid cancellation in the smaller root
        big = 0.5 * (d + np.copysign(eta, d)) if d != 0 else 0.5 * eta
        if big == 0:
            return complex(0.0), complex(0.0)
        small = det / big
        lo, hi = sorted((big, small))
        return complex(lo), complex(hi)
    eta = 1j * np.sqrt(-gap2)
    return complex(0.5 * (d - eta)), complex(0.5 * (d + eta))


def eigen2(M) -> EigenDecomp:
    """Left/right eigen-decomposition of a real or complex 2x2 matrix."""
    M = as_mat2(M)
    scale = 1.0 + np.abs(M).max()
    if np.isrealobj(M):
        lam1, lam2 = _eigenvalues(M)
    else:
        d = M[0, 0] + M[1, 1]
        eta = np.sqrt(complex(d * d - 4.0 * (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])))
        lam1, lam2 = complex(0.5 * (d - eta)), complex(0.5 * (d + eta))
    if abs(lam2 - lam1) <= DEGENERACY_RTOL * scale:
        half_trace = 0.5 * (M[0, 0] + M[1, 1])
        if np.abs(M - half_trace * np.eye(2)).max() <= DEGENERACY_RTOL * scale:
            e = np.eye(2, dtype=complex)
            lam = complex(half_trace)
            return EigenDecomp(lam, lam, e[0], e[1], e[:, 0], e[:, 1])
        raise DegenerateEigenvectors(
            "repeated eigenvalue of a non-diagonalizable matrix"
        )
    r1 = _right_eigvec(M, lam1)
    r2 = _right_eigvec(M, lam2)
    L = np.linalg.inv(np.column_stack([r1, r2]))
    return EigenDecomp(lam1, lam2, L[0], L[1], r1, r2)


@dataclass(frozen=True)
class GradientState:
    omega: float
    d: float
    gap2: float
    det: float
    phi: float
    r: float
    s: float
    k: float

    @property
    def curl(self) -> float:
        """``v_x - u_y``, the conventional curl (equal to ``-omega``)."""
        return -self.omega


def grad_analysis(M, k: float) -> GradientState:
    """Summarize a velocity gradient by the scalars the threshold math uses."""
    M = as_mat2(M).astype(float)
    (ux, uy), (vx, vy) = M
    d = ux + vy
    det = ux * vy - uy * vx
    omega = uy - vx
    return GradientState(
        omega=omega,
        d=d,
        gap2=d * d - 4.0 * det,
        det=det,
        phi=4.0 * k * k - 2.0 * k * omega,
        r=vx + uy,
        s=ux - vy,
        k=float(k),
    )


def gradient_summary(grads: np.ndarray, k: float) -> dict[str, np.ndarray]:
    """Vectorized :func:`grad_analysis` over an ``(..., 2, 2)`` stack."""
    g = np.asarray(grads, dtype=float)
    ux, uy, vx, vy = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    d = ux + vy
    det = ux * vy - uy * vx
    omega = uy - vx
    return {
        "omega": omega,
        "d": d,
        "det": det,
        "gap2": d * d - 4.0 * det,
        "phi": 4.0 * k * k - 2.0 * k * omega,
        "r": vx + uy,
        "s": ux - vy,
    }


def spectral_pairing_ratio(M, check: bool = True) -> complex:
    """Return ``<r2, J r1><l1, l2>`` (bilinear products, no conjugation).

    This equals ``omega / eta``.  With ``check=True`` the identity is
    asserted to a tolerance scaled by the eigenvector conditioning.
    """
    M = as_mat2(M)
    eig = eigen2(M)
    eta = eig.eta
    scale = 1.0 + np.abs(M).max()
    if abs(eta) <= DEGENERACY_RTOL * scale:
        raise DegenerateEigenvectors("spectral gap vanishes; pairing ratio unbounded")
    ratio = (eig.r2 @ J @ eig.r1) * (eig.l1 @ eig.l2)
    if check:
        expected = (M[0, 1] - M[1, 0]) / eta
        tol = 1e-8 * (abs(expected) + 1.0) * (scale / abs(eta)) ** 2
        if abs(ratio - expected) > tol:
            raise AssertionError(
                f"pairing ratio {ratio} disagrees with omega/eta {expected}"
            )
    return complex(ratio)


# ---------------------------------------------------------------------------
# analytic field families


@dataclass(frozen=True)
class Domain:
    x: tuple[float, float] = (0.0, 2 * np.pi)
    y: tuple[float, float] = (0.0, 2 * np.pi)
    periodic: bool = False

    @property
    def lengths(self) -> tuple[float, float]:
        return self.x[1] - self.x[0], self.y[1] - self.y[0]

    def contains(self, alpha: np.ndarray) -> np.ndarray:
        a = np.asarray(alpha, dtype=float)
        return (
            (a[..., 0] >= self.x[0])
            & (a[..., 0] <= self.x[1])
            & (a[..., 1] >= self.y[0])
            & (a[..., 1] <= self.y[1])
        )


@dataclass(frozen=True)
class TrigMode:
    """One Fourier term ``c*cos(kx x + ky y) + s*sin(kx x + ky y)`` of ``u`` or ``v``.

    ``m, n`` are integer wavenumbers relative to the domain lengths.
    """

    component: int
    m: int
    n: int
    cos: float = 0.0
    sin: float = 0.0


@dataclass(frozen=True)
class FieldSpec:
    """Initial velocity field: ``affine`` (``U0 = A alpha + b``) or ``trig_poly``."""

    kind: str
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    modes: tuple[TrigMode, ...] = ()
    cutoff: Optional[int] = None
    seed: Optional[int] = None
    amplitude: float = 1.0
    domain: Domain = field(default_factory=Domain)

    def __post_init__(self):
        if self.kind not in ("affine", "trig_poly"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "affine":
            A = as_mat2(np.zeros((2, 2)) if self.A is None else self.A).astype(float)
            b = np.zeros(2) if self.b is None else np.asarray(self.b, dtype=float)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)
        else:
            modes = tuple(self.modes)
            if not modes and self.seed is not None:
                modes = random_modes(self.cutoff or 1, self.seed, self.amplitude)
            for md in modes:
                if not (np.isfinite(md.cos) and np.isfinite(md.sin)):
                    raise ValueError("trig_poly coefficients must be finite")
                if md.component not in (0, 1):
                    raise ValueError("trig mode component must be 0 (u) or 1 (v)")
            object.__setattr__(self, "modes", modes)

    @classmethod
    def affine(cls, A, b=(0.0, 0.0), domain: Domain | None = None) -> "FieldSpec":
        return cls("affine", A=np.asarray(A, float), b=np.asarray(b, float),
                   domain=domain or Domain(x=(-np.inf, np.inf), y=(-np.inf, np.inf)))

    @classmethod
    def trig(cls, modes: Sequence[TrigMode], domain: Domain | None = None, **kw) -> "FieldSpec":
        return cls("trig_poly", modes=tuple(modes), domain=domain or Domain(periodic=True), **kw)


def random_modes(cutoff: int, seed: int, amplitude: float = 1.0) -> tuple[TrigMode, ...]:
    """Random trig coefficients with ``1/(1+m^2+n^2)`` spectral decay."""
    rng = np.random.default_rng(seed)
    modes = []
    for comp in (0, 1):
        for m in range(0, cutoff + 1):
            for n in range(-cutoff, cutoff + 1):
                if m == 0 and n <= 0:
                    continue
                c, s = rng.normal(size=2) * amplitude / (1.0 + m * m + n * n)
                modes.append(TrigMode(comp, m, n, float(c), float(s)))
    return tuple(modes)


def sample_field(spec: FieldSpec, alpha):
    """Evaluate ``U0`` and its exact gradient at ``alpha``.

    ``alpha`` may be a single point ``(2,)`` or a stack ``(..., 2)``; the
    returned gradient has shape ``(..., 2, 2)``.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("alpha must have a trailing dimension of 2")
    if not spec.domain.periodic and not np.all(spec.domain.contains(a)):
        raise OutOfDomain(f"point(s) outside domain {spec.domain}")

    if spec.kind == "affine":
        U = a @ spec.A.T + spec.b
        grad = np.broadcast_to(spec.A, a.shape[:-1] + (2, 2)).copy()
        return U, grad

    Lx, Ly = spec.domain.lengths
    U = np.zeros(a.shape)
    grad = np.zeros(a.shape[:-1] + (2, 2))
    for md in spec.modes:
        kx = 2 * np.pi * md.m / Lx
        ky = 2 * np.pi * md.n / Ly
        arg = kx * (a[..., 0] - spec.domain.x[0]) + ky * (a[..., 1] - spec.domain.y[0])
        c, s = np.cos(arg), np.sin(arg)
        U[..., md.component] += md.cos * c + md.sin * s
        dval = -md.cos * s + md.sin * c
        grad[..., md.component, 0] += kx * dval
        grad[..., md.component, 1] += ky * dval
    return U, grad
