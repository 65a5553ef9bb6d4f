"""Independent reference computations used as test oracles.

Nothing here imports the package under test; every formula is written out
from first principles in a different form than the library uses.
"""
import math

import numpy as np

# Frozen reference values (computed by the oracles below, kept as literals so a
# regression in either side is caught).
SOD_P_STAR = 0.30313017805064685
SOD_V_STAR = 0.9274526200489499


def star_state_bisection(gamma, left, right, iters=200):
    """Star pressure and velocity from primitive states by plain bisection.

    Uses the mass-flux form of the Hugoniot locus and the isentrope, written
    as the velocity each side can reach at pressure ``p``.
    """
    rl, vl, pl = left
    rr, vr, pr = right
    cl = math.sqrt(gamma * pl / rl)
    cr = math.sqrt(gamma * pr / rr)

    def reach(p, rho, pk, c):
        if p > pk:
            mass = math.sqrt(rho * (0.5 * (gamma + 1.0) * p + 0.5 * (gamma - 1.0) * pk))
            return (p - pk) / mass
        return 2.0 * c / (gamma - 1.0) * ((p / pk) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)

    def gap(p):
        return (vl - reach(p, rl, pl, cl)) - (vr + reach(p, rr, pr, cr))

    lo, hi = 1e-14, 1.0
    while gap(hi) > 0.0:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    return p, vl - reach(p, rl, pl, cl)


def physical_entropy_vars(u, gamma):
    """Gradient of ``-rho S / (gamma - 1)``, ``S = ln(p rho^-gamma)``, for 1D Euler states."""
    rho, m, E = u
    v = m / rho
    p = (gamma - 1.0) * (E - 0.5 * rho * v * v)
    S = math.log(p * rho ** (-gamma))
    return np.array([(gamma - S) / (gamma - 1.0) - rho * v * v / (2.0 * p), rho * v / p, -rho / p])


def physical_entropy_vars_inverse(w, gamma):
    """Closed-form inverse of :func:`physical_entropy_vars`."""
    w1, w2, w3 = w
    vel = -w2 / w3
    S = gamma - (gamma - 1.0) * (w1 - w3 * vel * vel / 2.0)
    rho = (-w3 * math.exp(S)) ** (1.0 / (1.0 - gamma))
    p = -rho / w3
    return np.array([rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel])


def euler_flux(u, gamma):
    rho, m, E = u
    v = m / rho
    p = (gamma - 1.0) * (E - 0.5 * rho * v * v)
    return np.array([m, m * v + p, v * (E + p)])


def burgers_quadratic_production(um, up):
    """``-sigma [u^2/2] + [u^3/3]`` with the Rankine-Hugoniot speed."""
    sigma = 0.5 * (um + up)
    return -sigma * (up ** 2 - um ** 2) / 2.0 + (up ** 3 - um ** 3) / 3.0


def trapezoid_2d(fn, t1, t2, a, b, n=801):
    """Brute-force composite trapezoid rule on a uniform space-time grid."""
    t = np.linspace(t1, t2, n)
    x = np.linspace(a, b, n)
    T, X = np.meshgrid(t, x, indexing="ij")
    vals = fn(T, X)
    return float(np.trapezoid(np.trapezoid(vals, x, axis=1), t))
