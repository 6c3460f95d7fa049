"""Hot loops: fixed-step RK4 over one pulse phase with constant drive.

Within a phase the vector field is autonomous (the pulse is constant), so
the stages need no time argument. Positions are reduced mod 1 before the
site-force evaluation, which keeps translation equivariance exact and the
sin/cos arguments small for large winding displacements.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

MODE_PULSE_POTENTIAL = 0
MODE_PULSE_INTERACTION = 1


@njit(cache=True)
def _site_force(x, amps, omegas, phases):
    xr = x - math.floor(x)
    s = 0.0
    for m in range(amps.shape[0]):
        s += amps[m] * omegas[m] * math.cos(omegas[m] * xr + phases[m])
    return s


@njit(cache=True)
def _rhs_fill(u, p, q, drive, mode, c2, c4, amps, omegas, phases, out):
    # left gap of site 0 equals the winding gap q-1
    gap = u[0] + p - u[q - 1]
    f_left = 2.0 * c2 * gap + 4.0 * c4 * gap * gap * gap
    for i in range(q):
        if i < q - 1:
            gap = u[i + 1] - u[i]
        else:
            gap = u[0] + p - u[q - 1]
        f_right = 2.0 * c2 * gap + 4.0 * c4 * gap * gap * gap
        spring = f_right - f_left
        f_left = f_right
        if mode == MODE_PULSE_POTENTIAL:
            if drive != 0.0:
                out[i] = spring + drive * _site_force(u[i], amps, omegas, phases)
            else:
                out[i] = spring
        else:
            out[i] = drive * spring + _site_force(u[i], amps, omegas, phases)


@njit(cache=True)
def rk4_phase(u, p, q, nsteps, dt, drive, mode, c2, c4, amps, omegas, phases):
    """Advance u in place by nsteps RK4 steps of size dt."""
    k1 = np.empty(q)
    k2 = np.empty(q)
    k3 = np.empty(q)
    k4 = np.empty(q)
    ut = np.empty(q)
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(nsteps):
        _rhs_fill(u, p, q, drive, mode, c2, c4, amps, omegas, phases, k1)
        for i in range(q):
            ut[i] = u[i] + half * k1[i]
        _rhs_fill(ut, p, q, drive, mode, c2, c4, amps, omegas, phases, k2)
        for i in range(q):
            ut[i] = u[i] + half * k2[i]
        _rhs_fill(ut, p, q, drive, mode, c2, c4, amps, omegas, phases, k3)
        for i in range(q):
            ut[i] = u[i] + dt * k3[i]
        _rhs_fill(ut, p, q, drive, mode, c2, c4, amps, omegas, phases, k4)
        for i in range(q):
            u[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
