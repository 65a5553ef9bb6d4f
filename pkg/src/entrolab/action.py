"""Action functional, weak-form residual and first variations over windows.

Space-time integrals run over trapezoidal cells cut by every straight line
along which the integrand may lose smoothness: wave edges, window sides and
the support and centre lines of bumps.  Inside a cell the field is smooth
and a tensor Gauss-Legendre rule is used.
"""
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from .dlm import shock_production, straight_path
from .errors import NotConservative, PairNotCompatible, SupportViolation, WindowInvalid
from .fields import Discontinuity, evaluate, perturb_field, sample_field
from .numerics import gauss_legendre, integrate
from .systems import jacobian_eval, shift_pair

SPACE_TIME_ORDER = 24
SHOCK_TIME_ORDER = 16
ZERO_VARIATION = 1e-8
DEFAULT_EPS = tuple(np.logspace(-2, -5, 4))


@dataclass(frozen=True)
class Window:
    t1: float
    t2: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.t1 < self.t2 and self.a < self.b):
            raise WindowInvalid(f"need t1 < t2 and a < b, got {self}")
        if not all(np.isfinite([self.t1, self.t2, self.a, self.b])):
            raise WindowInvalid("window bounds must be finite")


def check_window(fld, window):
    if window.t1 < fld.t0 or window.t2 > fld.t_max:
        raise WindowInvalid(f"window {window} outside the validity of {fld.label}")


@dataclass
class ActionReport:
    total: float
    smooth_part: float
    shock_parts: list
    boundary_route: Optional[float]
    route_discrepancy: Optional[float]
    orders: dict
    error_estimates: dict
    pair: str = ""
    field: str = ""
    window: tuple = ()

    def to_dict(self):
        return asdict(self)


# -- geometry -------------------------------------------------------------

def _lines(fld, window):
    """Break lines ``x = alpha + beta t`` tagged with the wave index (or None)."""
    out = [(window.a, 0.0, None), (window.b, 0.0, None)]
    if fld.self_similar:
        for k, w in enumerate(fld.waves):
            edges = [w.speed] if isinstance(w, Discontinuity) else [w.lo, w.hi]
            for xi in edges:
                out.append((fld.x0 - xi * fld.t0, xi, k))
    for bmp in fld.bumps:
        for x in (bmp.box()[2], bmp.center[1], bmp.box()[3]):
            out.append((x, 0.0, None))
    return out


def _time_breaks(fld, window, lines):
    ts = {window.t1, window.t2}
    for bmp in fld.bumps:
        ts.update((bmp.box()[0], bmp.center[0], bmp.box()[1]))
    for (a1, b1, _), (a2, b2, _) in combinations(lines, 2):
        if b1 != b2:
            ts.add((a1 - a2) / (b2 - b1))
    return sorted(t for t in ts if window.t1 <= t <= window.t2)


def _cells(fld, window):
    lines = _lines(fld, window)
    times = _time_breaks(fld, window, lines)
    cells = []
    for tl, th in zip(times[:-1], times[1:]):
        if th - tl <= 0.0:
            continue
        tm = 0.5 * (tl + th)
        inside = {}
        for al, be, _ in lines:
            xm = al + be * tm
            if window.a <= xm <= window.b:
                inside.setdefault(round(xm, 14), (al, be))
        ordered = [inside[k] for k in sorted(inside)]
        for left, right in zip(ordered[:-1], ordered[1:]):
            cells.append((tl, th, left, right))
    return cells


def _cell_rule(cell, n):
    tl, th, (al, bl), (ar, br) = cell
    tau, wt = gauss_legendre(n, tl, th)
    s, ws = gauss_legendre(n)
    xl = al + bl * tau
    xr = ar + br * tau
    T = np.repeat(tau[:, None], n, axis=1)
    X = xl[:, None] + s[None, :] * (xr - xl)[:, None]
    W = wt[:, None] * ws[None, :] * (xr - xl)[:, None]
    return T, X, W


def residual_density(system, pair, fld, t, x):
    """``grad(eta)(u)^T (u_t + A(u) u_x)`` at the given points."""
    u, ut, ux = evaluate(fld, t, x)
    flow = ut + np.einsum("...ik,...k->...i", jacobian_eval(system, u, 0), ux)
    return np.einsum("...i,...i->...", pair.grad(u), flow)


def smooth_integral(system, pair, fld, window, order=SPACE_TIME_ORDER):
    """Space-time integral of the residual density over the smooth cells.

    Returns ``(value, error_estimate)``; the estimate is the sum over cells
    of ``|I(order) - I(order // 2)|``.
    """
    total, err = 0.0, 0.0
    for cell in _cells(fld, window):
        vals = []
        for n in (order, max(order // 2, 1)):
            T, X, W = _cell_rule(cell, n)
            if not np.any(W):
                vals.append(0.0)
                continue
            vals.append(float(np.sum(W * residual_density(system, pair, fld, T, X))))
        total += vals[0]
        err += abs(vals[0] - vals[1])
    return total, err


# -- shocks ---------------------------------------------------------------

def _shock_interval(fld, k, window):
    """Times in the window during which discontinuity ``k`` is strictly inside."""
    w = fld.waves[k]
    lo, hi = window.t1, window.t2
    if w.speed == 0.0:
        X = fld.x0
        return (lo, hi) if window.a < X < window.b else None
    ta = fld.t0 + (window.a - fld.x0) / w.speed
    tb = fld.t0 + (window.b - fld.x0) / w.speed
    enter, leave = min(ta, tb), max(ta, tb)
    lo, hi = max(lo, enter), min(hi, leave)
    return (lo, hi) if hi > lo else None


def _shock_traces(fld, k, t):
    w = fld.waves[k]
    X = fld.x0 + w.speed * (t - fld.t0)
    left = np.asarray(fld.states[k], float)
    right = np.asarray(fld.states[k + 1], float)
    for bmp in fld.bumps:
        du = bmp.evaluate(t, X)[0]
        left = left + du
        right = right + du
    return left, right


def shock_integrals(system, pair, fld, window, path=None, order=SHOCK_TIME_ORDER):
    """Time integral of each discontinuity's entropy production in the window."""
    path = path or straight_path()
    parts = []
    if not fld.self_similar:
        return parts
    for k, w in enumerate(fld.waves):
        if not isinstance(w, Discontinuity):
            continue
        span = _shock_interval(fld, k, window)
        if span is None:
            continue
        ts = {span[0], span[1]}
        for bmp in fld.bumps:
            ts.update((bmp.box()[0], bmp.center[0], bmp.box()[1]))
            if w.speed != 0.0:
                for xe in (bmp.box()[2], bmp.center[1], bmp.box()[3]):
                    ts.add(fld.t0 + (xe - fld.x0) / w.speed)
        ts = sorted(t for t in ts if span[0] <= t <= span[1])
        vals = np.zeros(2)
        for lo, hi in zip(ts[:-1], ts[1:]):
            for i, n in enumerate((order, max(order // 2, 1))):
                tau, wt = gauss_legendre(n, lo, hi)
                prod = [shock_production(system, pair, w.speed, *_shock_traces(fld, k, t),
                                         path=path).value for t in tau]
                vals[i] += wt @ np.array(prod)
        parts.append({"label": w.label, "index": k, "speed": w.speed,
                      "t_enter": span[0], "t_exit": span[1],
                      "value": float(vals[0]), "error_estimate": float(abs(vals[0] - vals[1]))})
    return parts


# -- boundary functional --------------------------------------------------

def _x_breaks(fld, t):
    xs = []
    if fld.self_similar:
        for w in fld.waves:
            edges = [w.speed] if isinstance(w, Discontinuity) else [w.lo, w.hi]
            xs += [fld.x0 + xi * (t - fld.t0) for xi in edges]
    for bmp in fld.bumps:
        xs += [bmp.box()[2], bmp.center[1], bmp.box()[3]]
    return xs


def _t_breaks(fld, x):
    ts = []
    if fld.self_similar:
        for w in fld.waves:
            edges = [w.speed] if isinstance(w, Discontinuity) else [w.lo, w.hi]
            ts += [fld.t0 + (x - fld.x0) / xi for xi in edges if xi != 0.0]
    for bmp in fld.bumps:
        ts += [bmp.box()[0], bmp.center[0], bmp.box()[1]]
    return ts


def boundary_functional(fld, window, density, flux, tol=1e-13):
    """``int density(u) dx |_{t1}^{t2} + int [flux(u(t, b)) - flux(u(t, a))] dt``.

    Both maps take states of shape (M, N); quadrature is adaptive and split
    at every crossing of a wave edge or bump line.
    """
    def at_time(T):
        return integrate(lambda x: density(sample_field(fld, np.full_like(x, T), x)),
                         window.a, window.b, _x_breaks(fld, T), tol=tol)

    def at_side(X):
        return integrate(lambda t: flux(sample_field(fld, t, np.full_like(t, X))),
                         window.t1, window.t2, _t_breaks(fld, X), tol=tol)

    parts = [at_time(window.t2), at_time(window.t1), at_side(window.b), at_side(window.a)]
    value = parts[0][0] - parts[1][0] + parts[2][0] - parts[3][0]
    err = sum(p[1] for p in parts)
    return value, err


def action_boundary(system, pair, fld, window, tol=1e-13):
    """Action evaluated from entropy densities and fluxes on the window boundary."""
    if not pair.compatible:
        raise PairNotCompatible(f"{pair.id} does not satisfy the entropy-pair relation")
    if system.flux is None:
        raise NotConservative(f"{system.id} has no conservative flux")
    check_window(fld, window)
    value, _ = boundary_functional(fld, window, pair.eta, lambda u: pair.q(u, 0), tol)
    return float(value)


def weak_residual(system, fld, window, tol=1e-13):
    """Per-component conservation defect of ``fld`` over ``window``."""
    if system.flux is None:
        raise NotConservative(f"{system.id} has no conservative flux")
    check_window(fld, window)
    value, _ = boundary_functional(fld, window, lambda u: u, lambda u: system.flux(u, 0), tol)
    return np.asarray(value, dtype=float)


# -- action ---------------------------------------------------------------

def action_interior(system, pair, fld, window, path=None, order=SPACE_TIME_ORDER,
                    shock_order=SHOCK_TIME_ORDER, boundary=True):
    """Action over ``window``: smooth-cell integral plus shock productions.

    With ``boundary=True`` and a compatible pair the boundary route is also
    evaluated and the discrepancy between the two is reported.
    """
    check_window(fld, window)
    smooth, s_err = smooth_integral(system, pair, fld, window, order)
    shocks = shock_integrals(system, pair, fld, window, path, shock_order)
    total = smooth + sum(p["value"] for p in shocks)
    b_val = disc = None
    if boundary and pair.compatible and system.flux is not None:
        b_val = action_boundary(system, pair, fld, window)
        disc = abs(total - b_val)
    return ActionReport(
        total=float(total),
        smooth_part=float(smooth),
        shock_parts=shocks,
        boundary_route=b_val,
        route_discrepancy=disc,
        orders={"space_time": order, "shock_time": shock_order},
        error_estimates={"smooth": s_err, "shocks": float(sum(p["error_estimate"] for p in shocks))},
        pair=pair.label(),
        field=fld.label,
        window=(window.t1, window.t2, window.a, window.b),
    )


class AffineShift(NamedTuple):
    value: float
    direct: float
    discrepancy: float


def affine_shift_action(system, pair, c, fld, window, path=None, order=SPACE_TIME_ORDER):
    """``I[eta_c] - I[eta]`` predicted as ``<c, weak_residual>`` and evaluated directly."""
    c = np.asarray(c, dtype=float)
    predicted = float(c @ weak_residual(system, fld, window))
    if not np.any(c):
        return AffineShift(predicted, 0.0, abs(predicted))
    base = action_interior(system, pair, fld, window, path, order, boundary=False).total
    shifted = action_interior(system, shift_pair(system, pair, c), fld, window, path, order,
                              boundary=False).total
    direct = shifted - base
    return AffineShift(predicted, float(direct), float(abs(direct - predicted)))


@dataclass
class VariationReport:
    eps: list
    deltas: list
    fitted_order: Optional[float]
    max_abs: float
    verdict: str
    base_total: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def first_variation(system, pair, fld, bump, window, eps=DEFAULT_EPS, path=None,
                    order=SPACE_TIME_ORDER, zero_tol=ZERO_VARIATION):
    """``Delta(eps) = I(field + eps bump) - I(field)`` over an eps schedule.

    The reference action is computed with a zero-amplitude copy of the bump
    so both evaluations share the same quadrature cells.  The fitted order
    is the slope of ``log|Delta|`` against ``log eps``.
    """
    check_window(fld, window)
    lo_t, hi_t, lo_x, hi_x = bump.box()
    if not (window.t1 < lo_t and hi_t < window.t2 and window.a < lo_x and hi_x < window.b):
        raise SupportViolation(f"bump support {bump.box()} not strictly inside {window}")

    def action_at(e):
        f = perturb_field(fld, bump.with_amplitude(e), window)
        return action_interior(system, pair, f, window, path, order, boundary=False).total

    base = action_at(0.0)
    eps = [float(e) for e in eps]
    deltas = [0.0 if e == 0.0 else action_at(e) - base for e in eps]
    mags = np.abs(deltas)
    nz = [(e, m) for e, m in zip(eps, mags) if e > 0 and m > 0]
    worst = float(np.max(mags)) if len(mags) else 0.0
    order_fit = None
    # below the zero threshold the slope would only fit round-off
    if len(nz) >= 2 and worst >= zero_tol:
        le, lm = np.log([p[0] for p in nz]), np.log([p[1] for p in nz])
        order_fit = float(np.polyfit(le, lm, 1)[0])
    return VariationReport(
        eps=eps, deltas=[float(d) for d in deltas], fitted_order=order_fit, max_abs=worst,
        verdict="stationary" if worst < zero_tol else "non-stationary", base_total=float(base),
        details={"zero_tol": zero_tol, "pair": pair.label(), "field": fld.label},
    )
