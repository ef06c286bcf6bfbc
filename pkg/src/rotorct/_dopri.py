"""Dormand-Prince 5(4) stepper with dense output for small autonomous systems.

States are plain tuples of floats: the systems integrated here have two or
three components, and tuple arithmetic is several times faster than numpy
for vectors that short.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import MaxStepsExceeded

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
D1, D3, D4, D5, D6, D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                          -10690763975 / 1880347072, 701980252875 / 199316789632,
                          -1453857185 / 822651844, 69997945 / 29380423)


@dataclass
class RawSolution:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    # per accepted step: (rc1, rc2, rc3, rc4, rc5) tuples for dense output
    dense: list = field(default_factory=list)
    status: str = "ok"  # "ok" | "blowup" | "underflow"
    last_attempt: float = math.nan


def dense_eval(rc, theta):
    rc1, rc2, rc3, rc4, rc5 = rc
    t1 = 1.0 - theta
    return tuple(a + theta * (b + t1 * (c + theta * (d + t1 * e)))
                 for a, b, c, d, e in zip(rc1, rc2, rc3, rc4, rc5))


def solve(fun, y0, t_end, rtol, atol, h0, h_min, bound, max_steps, t0=0.0):
    """Integrate ``y' = fun(y)`` from ``t0`` to ``t_end`` (``t_end > t0``).

    Stops early when an accepted state leaves ``[-bound, bound]`` or becomes
    non-finite (status ``"blowup"``), or when the step size drops below
    ``h_min`` (status ``"underflow"``).
    """
    y = tuple(float(v) for v in y0)
    t = float(t0)
    sol = RawSolution(times=[t], states=[y])
    k1 = fun(y)
    h = min(h0, t_end - t)
    facmax = 10.0
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            raise MaxStepsExceeded(f"exceeded {max_steps} steps at t={t}")
        steps += 1
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        k2 = fun(tuple(a + h * A21 * b for a, b in zip(y, k1)))
        k3 = fun(tuple(a + h * (A31 * b + A32 * c) for a, b, c in zip(y, k1, k2)))
        k4 = fun(tuple(a + h * (A41 * b + A42 * c + A43 * d)
                       for a, b, c, d in zip(y, k1, k2, k3)))
        k5 = fun(tuple(a + h * (A51 * b + A52 * c + A53 * d + A54 * e)
                       for a, b, c, d, e in zip(y, k1, k2, k3, k4)))
        k6 = fun(tuple(a + h * (A61 * b + A62 * c + A63 * d + A64 * e + A65 * f)
                       for a, b, c, d, e, f in zip(y, k1, k2, k3, k4, k5)))
        y1 = tuple(a + h * (A71 * b + A73 * d + A74 * e + A75 * f + A76 * g)
                   for a, b, d, e, f, g in zip(y, k1, k3, k4, k5, k6))
        k7 = fun(y1)
        err = 0.0
        finite = True
        for a, b, e1, e3, e4, e5, e6, e7 in zip(y, y1, k1, k3, k4, k5, k6, k7):
            if not math.isfinite(b):
                finite = False
                break
            sk = atol + rtol * max(abs(a), abs(b))
            ei = h * (E1 * e1 + E3 * e3 + E4 * e4 + E5 * e5 + E6 * e6 + E7 * e7) / sk
            err += ei * ei
        err = math.sqrt(err / len(y)) if finite else math.inf
        if not math.isfinite(err):
            err = math.inf

        if err <= 1.0:
            rc2 = tuple(b - a for a, b in zip(y, y1))
            rc3 = tuple(h * a - b for a, b in zip(k1, rc2))
            rc4 = tuple(b - h * a - c for a, b, c in zip(k7, rc2, rc3))
            rc5 = tuple(h * (D1 * a + D3 * c + D4 * d + D5 * e + D6 * f + D7 * g)
                        for a, c, d, e, f, g in zip(k1, k3, k4, k5, k6, k7))
            sol.dense.append((y, rc2, rc3, rc4, rc5))
            t = t_end if last else t + h
            y, k1 = y1, k7
            sol.times.append(t)
            sol.states.append(y)
            if max(abs(v) for v in y) > bound:
                sol.status = "blowup"
                return sol
            fac = 0.9 * err ** -0.2 if err > 0 else facmax
            h *= min(facmax, max(0.2, fac))
            facmax = 10.0
        else:
            fac = 0.9 * err ** -0.2 if math.isfinite(err) else 0.2
            h *= min(1.0, max(0.2, fac))
            facmax = 1.0
        if h < h_min and t < t_end:
            sol.status = "underflow"
            sol.last_attempt = t + h
            return sol
    return sol
