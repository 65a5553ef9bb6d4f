"""Piecewise-smooth space-time fields in one space dimension.

A :class:`PiecewiseField` is either self-similar about an apex
``(t0, x0)``, made of constant states separated by discontinuities and
centred fans, or a globally smooth closed-form solution.  Compactly
supported bumps can be superposed on either.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (AdmissibilityViolation, NewtonDiverged,
                     NonConvexFlux, OutsideDomain, SupportViolation, VacuumFormation)
from .systems import (check_admissible, conserved_to_primitive, is_admissible,
                      rozhdestvenskii)

RH_TOL = 1e-10
RIEMANN_TOL = 1e-12


# -- building blocks ------------------------------------------------------

@dataclass(frozen=True)
class Discontinuity:
    speed: float
    label: str = "shock"
    exact: bool = True
    rh_residual: float = 0.0


@dataclass(frozen=True)
class Fan:
    """Centred fan ``u = profile(xi)`` for ``lo <= xi <= hi``."""

    lo: float
    hi: float
    profile: Callable
    dprofile: Callable
    label: str = "rarefaction"


def smoothstep5(y):
    return y * y * y * (10.0 - 15.0 * y + 6.0 * y * y)


def dsmoothstep5(y):
    return 30.0 * y * y * (1.0 - y) ** 2


def _profile(z):
    a = np.abs(z)
    inside = a < 1.0
    y = np.where(inside, 1.0 - a, 0.0)
    val = np.where(inside, smoothstep5(y), 0.0)
    der = np.where(inside, -np.sign(z) * dsmoothstep5(y), 0.0)
    return val, der


@dataclass(frozen=True)
class Bump:
    """``eps * direction * S((t-ct)/rt) * S((x-cx)/rx)`` with a quintic C2 profile."""

    center: tuple
    radii: tuple
    direction: tuple
    amplitude: float = 0.0

    def box(self):
        (ct, cx), (rt, rx) = self.center, self.radii
        return ct - rt, ct + rt, cx - rx, cx + rx

    def evaluate(self, t, x):
        (ct, cx), (rt, rx) = self.center, self.radii
        st, dst = _profile((np.asarray(t, float) - ct) / rt)
        sx, dsx = _profile((np.asarray(x, float) - cx) / rx)
        d = self.amplitude * np.asarray(self.direction, dtype=float)
        B = st * sx
        Bt = dst * sx / rt
        Bx = st * dsx / rx
        return B[..., None] * d, Bt[..., None] * d, Bx[..., None] * d

    def with_amplitude(self, eps):
        return replace(self, amplitude=float(eps))


@dataclass(frozen=True)
class PiecewiseField:
    """A candidate weak solution ``u(t, x)``.

    Self-similar fields hold ``states[k]`` left of ``waves[k]`` and
    ``states[k+1]`` right of it; smooth fields hold a closed-form
    ``smooth(t, x) -> (u, u_t, u_x)``.
    """

    system: object
    states: tuple = ()
    waves: tuple = ()
    x0: float = 0.0
    t0: float = 0.0
    t_max: float = np.inf
    smooth: Optional[Callable] = None
    bumps: tuple = ()
    label: str = "field"
    meta: dict = field(default_factory=dict)

    @property
    def self_similar(self):
        return self.smooth is None

    def wave_lines(self):
        """Each wave edge as ``(label, xi, is_discontinuity)``."""
        out = []
        for w in self.waves:
            if isinstance(w, Discontinuity):
                out.append((w.label, w.speed, True))
            else:
                out.append((w.label + ":head", w.lo, False))
                out.append((w.label + ":tail", w.hi, False))
        return out


# -- evaluation -----------------------------------------------------------

def _check_time(fld, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < fld.t0) or np.any(t > fld.t_max):
        raise OutsideDomain(f"time outside [{fld.t0}, {fld.t_max}] for {fld.label}")
    return t


def _self_similar_eval(fld, t, x, side):
    N = fld.system.N
    dt = t - fld.t0
    dx = x - fld.x0
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(dt > 0, dx / np.where(dt > 0, dt, 1.0), np.sign(dx) * np.inf)
    shape = np.broadcast(t, x).shape
    xi = np.broadcast_to(xi, shape)
    dt = np.broadcast_to(dt, shape)
    u = np.broadcast_to(np.asarray(fld.states[0], float), shape + (N,)).copy()
    ut = np.zeros(shape + (N,))
    ux = np.zeros(shape + (N,))
    for k, w in enumerate(fld.waves):
        right = np.asarray(fld.states[k + 1], float)
        if isinstance(w, Discontinuity):
            # at t == t0 every wave sits on the apex
            on = (xi == w.speed) | ((dt == 0) & (dx == 0))
            if side == 0 and np.any(on):
                raise ValueError("point lies on a discontinuity; pass side=-1 or side=+1")
            beyond = (xi > w.speed) | (on & (side > 0))
            u[beyond] = right
        else:
            beyond = xi > w.hi
            u[beyond] = right
            inside = (xi >= w.lo) & (xi <= w.hi) & (dt > 0)
            if np.any(inside):
                z = xi[inside]
                u[inside] = w.profile(z)
                du = w.dprofile(z)
                tau = dt[inside][:, None]
                ux[inside] = du / tau
                ut[inside] = -du * z[:, None] / tau
    return u, ut, ux


def evaluate(fld, t, x, side=0):
    """State and its first derivatives ``(u, u_t, u_x)`` at ``(t, x)``.

    ``side`` selects the one-sided trace (``-1`` left, ``+1`` right) when the
    point lies on a discontinuity.
    """
    t = _check_time(fld, t)
    x = np.asarray(x, dtype=float)
    if fld.self_similar:
        u, ut, ux = _self_similar_eval(fld, t, x, side)
    else:
        u, ut, ux = (np.array(a, dtype=float) for a in fld.smooth(t, x))
    for b in fld.bumps:
        du, dut, dux = b.evaluate(t, x)
        u = u + du
        ut = ut + dut
        ux = ux + dux
    return u, ut, ux


def sample_field(fld, t, x, side=0):
    """State ``u(t, x)``; ``side = -1 / +1`` picks a trace at a discontinuity."""
    return evaluate(fld, t, x, side)[0]


class Traces(NamedTuple):
    left: np.ndarray
    right: np.ndarray
    on_discontinuity: bool


def traces(fld, t, x):
    left = sample_field(fld, t, x, side=-1)
    right = sample_field(fld, t, x, side=1)
    return Traces(left, right, bool(np.any(left != right)))


class ShockData(NamedTuple):
    label: str
    position: float
    speed: float
    left: np.ndarray
    right: np.ndarray
    exact: bool


def shock_data(fld, t):
    """Position, speed and traces of every discontinuity at time ``t``."""
    t = float(_check_time(fld, t))
    out = []
    if not fld.self_similar:
        return out
    for k, w in enumerate(fld.waves):
        if not isinstance(w, Discontinuity):
            continue
        X = fld.x0 + w.speed * (t - fld.t0)
        left = np.asarray(fld.states[k], float).copy()
        right = np.asarray(fld.states[k + 1], float).copy()
        for b in fld.bumps:
            du = b.evaluate(t, X)[0]
            left = left + du
            right = right + du
        out.append(ShockData(w.label, X, w.speed, left, right, w.exact))
    return out


def rh_residual(system, sigma, um, up):
    um, up = np.asarray(um, float), np.asarray(up, float)
    return float(np.max(np.abs(-sigma * (up - um) + system.flux(up, 0) - system.flux(um, 0))))


# -- constructors ---------------------------------------------------------

def _shock(system, sigma, um, up, label):
    r = rh_residual(system, sigma, um, up)
    scale = 1.0 + max(np.max(np.abs(system.flux(np.asarray(um, float), 0))),
                      np.max(np.abs(system.flux(np.asarray(up, float), 0))))
    return Discontinuity(float(sigma), label, bool(r <= RH_TOL * scale), r)


def constant_field(system, u, label="constant", t0=0.0):
    u = check_admissible(system, np.atleast_1d(np.asarray(u, float)))
    return PiecewiseField(system, (u,), (), 0.0, t0, label=label)


def piecewise_constant(system, states, speeds, x0=0.0, t0=0.0, label="piecewise"):
    """Constant states separated by straight discontinuities from ``(t0, x0)``.

    Each discontinuity is flagged ``exact`` when its Rankine-Hugoniot
    residual is below tolerance.
    """
    states = tuple(check_admissible(system, np.atleast_1d(np.asarray(s, float))) for s in states)
    if len(speeds) != len(states) - 1:
        raise ValueError("need one speed per adjacent pair of states")
    if any(b <= a for a, b in zip(speeds[:-1], speeds[1:])):
        raise ValueError("discontinuity speeds must increase left to right")
    waves = tuple(_shock(system, s, states[k], states[k + 1], f"jump{k}")
                  for k, s in enumerate(speeds))
    return PiecewiseField(system, states, waves, x0, t0, label=label)


def _scalar_convex_on(system, lo, hi):
    w = np.linspace(lo, hi, 65)
    if system.d2flux is None or np.any(system.d2flux(w) <= 0.0):
        raise NonConvexFlux(f"{system.id}: flux not strictly convex on [{lo}, {hi}]")


def solve_riemann_scalar(system, um, up, x0=0.0, t0=0.0):
    """Entropy solution of a convex scalar Riemann problem."""
    um, up = float(np.squeeze(um)), float(np.squeeze(up))
    if system.N != 1:
        raise ValueError("scalar solver needs N = 1")
    _scalar_convex_on(system, min(um, up), max(um, up))
    L, R = np.array([um]), np.array([up])
    if um == up:
        return constant_field(system, L, label="constant", t0=t0)
    if um > up:
        sigma = (system.flux(R, 0)[0] - system.flux(L, 0)[0]) / (up - um)
        return PiecewiseField(system, (L, R), (_shock(system, sigma, L, R, "shock"),),
                              x0, t0, label="shock")
    if system.dflux_inv is None:
        raise NonConvexFlux(f"{system.id}: no inverse of f' registered")
    lo, hi = float(system.dflux(L)[0]), float(system.dflux(R)[0])
    inv, d2 = system.dflux_inv, system.d2flux

    def profile(xi):
        return inv(np.asarray(xi, float))[..., None]

    def dprofile(xi):
        return (1.0 / d2(inv(np.asarray(xi, float))))[..., None]

    fan = Fan(lo, hi, profile, dprofile, "rarefaction")
    return PiecewiseField(system, (L, R), (fan,), x0, t0, label="rarefaction")


def make_expansion_shock(system, um, up, x0=0.0, t0=0.0):
    """Single Rankine-Hugoniot discontinuity joining ``u- < u+``.

    For the full Euler system both acoustic waves are taken on the shock
    branch, which turns any rarefaction into an expansion shock.
    """
    if system.id == "euler":
        return solve_riemann_euler(system, um, up, branches=("shock", "shock"),
                                   x0=x0, t0=t0, variables="conserved")
    um, up = float(np.squeeze(um)), float(np.squeeze(up))
    if um == up:
        raise ValueError("expansion shock needs distinct states")
    if um > up:
        raise ValueError("expansion shock needs u- < u+ for a convex flux")
    _scalar_convex_on(system, um, up)
    L, R = np.array([um]), np.array([up])
    sigma = (system.flux(R, 0)[0] - system.flux(L, 0)[0]) / (up - um)
    return PiecewiseField(system, (L, R), (_shock(system, sigma, L, R, "expansion_shock"),),
                          x0, t0, label="expansion_shock")


def traveling_wave(system, profile, dprofile, speed, label="traveling_wave"):
    """Smooth field ``u(t, x) = U(x - speed t)``."""
    def smooth(t, x):
        z = np.asarray(x, float) - speed * np.asarray(t, float)
        U = profile(z)
        dU = dprofile(z)
        return U, -speed * dU, dU

    return PiecewiseField(system, smooth=smooth, t0=-np.inf, label=label,
                          meta={"speed": float(speed)})


def rozhdestvenskii_wave(c=0.5, b=1.0, level=1.0, amp=0.5, width=1.0):
    """Exact smooth wave ``(c, b, level + amp tanh((x - c t)/width))``."""
    system = rozhdestvenskii()

    def profile(z):
        z = np.asarray(z, float)
        F = level + amp * np.tanh(z / width)
        return np.stack(np.broadcast_arrays(np.full_like(z, c), np.full_like(z, b), F), -1)

    def dprofile(z):
        z = np.asarray(z, float)
        dF = amp / width / np.cosh(z / width) ** 2
        zero = np.zeros_like(z)
        return np.stack([zero, zero, dF], -1)

    return traveling_wave(system, profile, dprofile, c, label="rozhdestvenskii_wave")


# -- exact Euler Riemann solver ------------------------------------------

class StarState(NamedTuple):
    p: float
    v: float
    rho_left: float
    rho_right: float
    iterations: int
    method: str


def _wave_fn(p, rho, pk, c, gamma, branch):
    """Pressure function and its derivative for one side."""
    if branch == "shock" or (branch == "auto" and p > pk):
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        sq = np.sqrt(A / (p + B))
        return (p - pk) * sq, sq * (1.0 - 0.5 * (p - pk) / (p + B))
    ratio = p / pk
    e = (gamma - 1.0) / (2.0 * gamma)
    f = 2.0 * c / (gamma - 1.0) * (ratio ** e - 1.0)
    df = 1.0 / (rho * c) * ratio ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_state(gamma, left, right, branches=("auto", "auto"), tol=RIEMANN_TOL, max_iter=50):
    """Star pressure and velocity from primitive ``(rho, v, p)`` states.

    Newton on the two-sided pressure function, with bisection on a
    bracket if Newton fails to converge or leaves ``p > 0``.
    """
    (rl, vl, pl), (rr, vr, pr) = left, right
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    dv = vr - vl
    if branches == ("auto", "auto") and 2.0 / (gamma - 1.0) * (cl + cr) <= dv:
        raise VacuumFormation("initial data generate vacuum")

    def F(p):
        fl, dfl = _wave_fn(p, rl, pl, cl, gamma, branches[0])
        fr, dfr = _wave_fn(p, rr, pr, cr, gamma, branches[1])
        return fl + fr + dv, dfl + dfr

    p = max(tol, 0.5 * (pl + pr) - 0.125 * dv * (rl + rr) * (cl + cr))
    method = "newton"
    it = 0
    try:
        for it in range(1, max_iter + 1):
            f, df = F(p)
            p_new = p - f / df
            if not np.isfinite(p_new) or p_new <= 0.0:
                raise NewtonDiverged("Newton left p > 0")
            change = abs(p_new - p) / (0.5 * (p_new + p))
            p = p_new
            if change <= tol:
                break
        else:
            raise NewtonDiverged("Newton did not converge")
    except NewtonDiverged:
        p, it = _bisect(lambda q: F(q)[0], tol)
        method = "bisection"
    fl, _ = _wave_fn(p, rl, pl, cl, gamma, branches[0])
    fr, _ = _wave_fn(p, rr, pr, cr, gamma, branches[1])
    v = 0.5 * (vl + vr) + 0.5 * (fr - fl)
    rho_l = _star_density(p, rl, pl, gamma, branches[0])
    rho_r = _star_density(p, rr, pr, gamma, branches[1])
    return StarState(float(p), float(v), rho_l, rho_r, it, method)


def _bisect(f, tol, lo=1e-14, hi=1.0):
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise NewtonDiverged("no bracket for the star pressure")
    if f(lo) > 0.0:
        raise VacuumFormation("pressure function positive at p = 0")
    it = 0
    while (hi - lo) > tol * hi and it < 200:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi), it


def _star_density(p, rho, pk, gamma, branch):
    if branch == "shock" or (branch == "auto" and p > pk):
        g = (gamma - 1.0) / (gamma + 1.0)
        r = p / pk
        return float(rho * (r + g) / (g * r + 1.0))
    return float(rho * (p / pk) ** (1.0 / gamma))


def _prim_to_cons(gamma, rho, v, p):
    rho, v, p = np.broadcast_arrays(np.asarray(rho, float), np.asarray(v, float), np.asarray(p, float))
    return np.stack([rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v], -1)


def _fan(gamma, state, sign):
    """Closed-form centred fan; ``sign = -1`` left-facing, ``+1`` right-facing."""
    rho0, v0, p0 = state
    c0 = np.sqrt(gamma * p0 / rho0)
    g1 = gamma - 1.0
    a = 2.0 / (gamma + 1.0)
    b = g1 / ((gamma + 1.0) * c0)

    def parts(xi):
        xi = np.asarray(xi, float)
        z = a - sign * b * (v0 - xi)
        dz = sign * b
        rho = rho0 * z ** (2.0 / g1)
        drho = rho0 * 2.0 / g1 * z ** (2.0 / g1 - 1.0) * dz
        v = a * (-sign * c0 + 0.5 * g1 * v0 + xi)
        dv = a * np.ones_like(xi)
        p = p0 * z ** (2.0 * gamma / g1)
        dp = p0 * 2.0 * gamma / g1 * z ** (2.0 * gamma / g1 - 1.0) * dz
        return rho, drho, v, dv, p, dp

    def profile(xi):
        rho, _, v, _, p, _ = parts(xi)
        return _prim_to_cons(gamma, rho, v, p)

    def dprofile(xi):
        rho, drho, v, dv, p, dp = parts(xi)
        return np.stack([drho, drho * v + rho * dv,
                         dp / g1 + 0.5 * drho * v * v + rho * v * dv], -1)

    return profile, dprofile


def solve_riemann_euler(system, left, right, branches=("auto", "auto"), x0=0.0, t0=0.0,
                        variables="primitive"):
    """Exact solution of the 1D gamma-law Riemann problem.

    ``left`` and ``right`` are primitive ``(rho, v, p)`` unless
    ``variables="conserved"``.  ``branches`` forces the acoustic waves onto
    the shock branch (``"shock"``) to build non-entropic variants.
    """
    if system.id != "euler" or system.d != 1:
        raise ValueError("Euler Riemann solver needs the 1D euler system")
    gamma = float(system.params["gamma"])
    if variables == "conserved":
        left = conserved_to_primitive(check_admissible(system, np.asarray(left, float)), gamma)
        right = conserved_to_primitive(check_admissible(system, np.asarray(right, float)), gamma)
    left = tuple(float(v) for v in left)
    right = tuple(float(v) for v in right)
    UL = check_admissible(system, _prim_to_cons(gamma, *left))
    UR = check_admissible(system, _prim_to_cons(gamma, *right))
    if left == right:
        return constant_field(system, UL, label="constant", t0=t0)
    star = star_state(gamma, left, right, branches)
    (rl, vl, pl), (rr, vr, pr) = left, right
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    SL = check_admissible(system, _prim_to_cons(gamma, star.rho_left, star.v, star.p))
    SR = check_admissible(system, _prim_to_cons(gamma, star.rho_right, star.v, star.p))
    states = [UL]
    waves = []
    if branches[0] == "shock" or (branches[0] == "auto" and star.p > pl):
        speed = vl - cl * np.sqrt((gamma + 1) / (2 * gamma) * star.p / pl + (gamma - 1) / (2 * gamma)) \
            if star.p >= pl else _rh_speed(UL, SL)
        tag = "left_shock" if star.p >= pl else "left_expansion_shock"
        waves.append(_shock(system, speed, UL, SL, tag))
    else:
        cs = cl * (star.p / pl) ** ((gamma - 1) / (2 * gamma))
        prof, dprof = _fan(gamma, left, -1)
        waves.append(Fan(vl - cl, star.v - cs, prof, dprof, "left_rarefaction"))
    states.append(SL)
    waves.append(_shock(system, star.v, SL, SR, "contact"))
    states.append(SR)
    if branches[1] == "shock" or (branches[1] == "auto" and star.p > pr):
        speed = vr + cr * np.sqrt((gamma + 1) / (2 * gamma) * star.p / pr + (gamma - 1) / (2 * gamma)) \
            if star.p >= pr else _rh_speed(SR, UR)
        tag = "right_shock" if star.p >= pr else "right_expansion_shock"
        waves.append(_shock(system, speed, SR, UR, tag))
    else:
        cs = cr * (star.p / pr) ** ((gamma - 1) / (2 * gamma))
        prof, dprof = _fan(gamma, right, 1)
        waves.append(Fan(star.v + cs, vr + cr, prof, dprof, "right_rarefaction"))
    states.append(UR)
    speeds = [w.speed if isinstance(w, Discontinuity) else w.lo for w in waves]
    if any(b < a for a, b in zip(speeds[:-1], speeds[1:])):
        raise ValueError("wave fan is not ordered; forced branches are inconsistent")
    meta = {"p_star": star.p, "v_star": star.v, "rho_star_left": star.rho_left,
            "rho_star_right": star.rho_right, "iterations": star.iterations,
            "method": star.method, "branches": list(branches)}
    label = "riemann" if branches == ("auto", "auto") else "riemann_" + "_".join(branches)
    return PiecewiseField(system, tuple(states), tuple(waves), x0, t0, label=label, meta=meta)


def _rh_speed(um, up):
    """Mass-flux speed ``[rho v] / [rho]`` of a Hugoniot jump."""
    return float((up[1] - um[1]) / (up[0] - um[0]))


# -- perturbations --------------------------------------------------------

def perturb_field(fld, bump, window=None, probe=41):
    """Superpose a compactly supported bump on ``fld``.

    With a ``window`` the support box must lie strictly inside it.  The
    perturbed field is probed on a ``probe x probe`` grid over the support
    and rejected if it leaves the admissible set.
    """
    t_lo, t_hi, x_lo, x_hi = bump.box()
    if min(bump.radii) <= 0.0:
        raise SupportViolation("bump radii must be positive")
    if len(bump.direction) != fld.system.N:
        raise ValueError(f"bump direction needs {fld.system.N} components")
    if window is not None:
        if not (window.t1 < t_lo and t_hi < window.t2 and window.a < x_lo and x_hi < window.b):
            raise SupportViolation(f"bump support {bump.box()} not strictly inside {window}")
    if t_lo < fld.t0:
        raise SupportViolation("bump support starts before the field")
    out = replace(fld, bumps=fld.bumps + (bump,))
    if bump.amplitude != 0.0:
        tt, xx = np.meshgrid(np.linspace(t_lo, t_hi, probe), np.linspace(x_lo, x_hi, probe))
        for side in (-1, 1):
            u = sample_field(out, tt, xx, side=side)
            if not np.all(is_admissible(fld.system, u)):
                raise AdmissibilityViolation(
                    f"bump amplitude {bump.amplitude} leaves the admissible set")
    return out


def field_summary(fld, t=1.0):
    """Plain-data description of a field's wave structure."""
    waves = []
    for k, w in enumerate(fld.waves):
        if isinstance(w, Discontinuity):
            waves.append({"label": w.label, "type": "discontinuity", "speed": w.speed,
                          "exact": w.exact, "rh_residual": w.rh_residual,
                          "left": list(map(float, fld.states[k])),
                          "right": list(map(float, fld.states[k + 1]))})
        else:
            waves.append({"label": w.label, "type": "fan", "head_speed": w.lo,
                          "tail_speed": w.hi,
                          "left": list(map(float, fld.states[k])),
                          "right": list(map(float, fld.states[k + 1]))})
    meta = {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
            for k, v in fld.meta.items()}
    return {"label": fld.label, "system": fld.system.id, "x0": fld.x0,
            "t0": fld.t0 if np.isfinite(fld.t0) else None,
            "states": [list(map(float, s)) for s in fld.states], "waves": waves, "meta": meta}


__all__ = [
    "Bump", "Discontinuity", "Fan", "PiecewiseField", "ShockData", "StarState", "Traces",
    "constant_field", "evaluate", "field_summary", "make_expansion_shock", "perturb_field",
    "piecewise_constant", "rh_residual", "rozhdestvenskii_wave", "sample_field", "shock_data",
    "solve_riemann_euler", "solve_riemann_scalar", "star_state", "traces", "traveling_wave",
]
