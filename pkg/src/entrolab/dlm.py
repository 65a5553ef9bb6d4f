"""Connecting paths and non-conservative (DLM) products across jumps."""
from dataclasses import dataclass
from math import comb
from typing import Callable, NamedTuple, Optional
import warnings

import numpy as np

from .errors import InadmissibleState, QuadratureNotConverged
from .numerics import gauss_legendre
from .systems import check_admissible, is_admissible, jacobian_eval

PATH_KINDS = ("straight", "bezier", "reordered")
AMPLITUDE_RTOL = 1e-8
SPREAD_TOL = 1e-8


@dataclass(frozen=True)
class Path:
    """A Lipschitz path ``phi(s; u-, u+)`` on ``[0, 1]``.

    ``phi`` and ``dphi`` take an array of parameters ``s`` (shape (M,)) and
    return states of shape (M, N).  ``breaks`` lists interior parameters
    where ``dphi`` may jump; quadrature is split there.
    """

    id: str
    phi: Callable
    dphi: Optional[Callable] = None
    breaks: tuple = ()

    def __call__(self, s, um, up):
        return self.phi(np.asarray(s, dtype=float), np.asarray(um, float), np.asarray(up, float))

    def derivative(self, s, um, up):
        s = np.asarray(s, dtype=float)
        um, up = np.asarray(um, float), np.asarray(up, float)
        if self.dphi is not None:
            return self.dphi(s, um, up)
        h = 1e-6
        lo = np.clip(s - h, 0.0, 1.0)
        hi = np.clip(s + h, 0.0, 1.0)
        return (self.phi(hi, um, up) - self.phi(lo, um, up)) / (hi - lo)[:, None]


def _bernstein(n, s):
    s = np.asarray(s, dtype=float)[:, None]
    k = np.arange(n + 1)
    return np.array([comb(n, i) for i in k]) * s ** k * (1.0 - s) ** (n - k)


def straight_path():
    return Path(
        "straight",
        lambda s, um, up: um + np.asarray(s)[:, None] * (up - um),
        lambda s, um, up: np.broadcast_to(up - um, (len(s), len(um))).copy(),
    )


def bezier_path(controls=None, offsets=None):
    """Bezier curve through interior control points.

    ``controls`` are absolute states.  ``offsets`` are relative: each is
    added to the chord point ``u- + s_k (u+ - u-)`` at ``s_k = k/(m+1)``
    after scaling by the jump size ``|u+ - u-|``, so one offset pattern
    serves jumps of any size.
    """
    if (controls is None) == (offsets is None):
        raise ValueError("give exactly one of controls or offsets")
    rel = offsets is not None
    pts = np.atleast_2d(np.asarray(offsets if rel else controls, dtype=float))
    m = len(pts)

    def nodes(um, up):
        if rel:
            sk = np.arange(1, m + 1) / (m + 1)
            mid = um + sk[:, None] * (up - um) + np.linalg.norm(up - um) * pts
        else:
            mid = pts
        return np.vstack([um, mid, up])

    def phi(s, um, up):
        P = nodes(um, up)
        return _bernstein(m + 1, s) @ P

    def dphi(s, um, up):
        P = nodes(um, up)
        return (m + 1) * (_bernstein(m, s) @ np.diff(P, axis=0))

    tag = "bezier-offsets" if rel else "bezier"
    return Path(f"{tag}{pts.tolist()}", phi, dphi)


def reordered_path(order):
    """Move one component at a time, in ``order``, each over ``1/N`` of ``s``."""
    order = [int(k) for k in order]
    n = len(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of 0..{n - 1}")

    def phi(s, um, up):
        s = np.asarray(s, dtype=float)
        out = np.broadcast_to(um, (len(s), n)).copy()
        for pos, k in enumerate(order):
            frac = np.clip(s * n - pos, 0.0, 1.0)
            out[:, k] = um[k] + frac * (up[k] - um[k])
        return out

    def dphi(s, um, up):
        s = np.asarray(s, dtype=float)
        out = np.zeros((len(s), n))
        piece = np.minimum((s * n).astype(int), n - 1)
        for pos, k in enumerate(order):
            out[piece == pos, k] = n * (up[k] - um[k])
        return out

    return Path(f"reordered{order}", phi, dphi, tuple(i / n for i in range(1, n)))


def make_path(kind="straight", um=None, up=None, system=None, controls=None,
              offsets=None, order=None, probe_order=16):
    """Build a path and, if ``system`` and endpoints are given, probe it.

    The probe evaluates the path on the Gauss nodes used by
    :func:`jump_amplitude` and raises InadmissibleState if any node leaves
    the admissible set.
    """
    if kind == "straight":
        path = straight_path()
    elif kind == "bezier":
        path = bezier_path(controls, offsets)
    elif kind == "reordered":
        if order is None:
            order = range(system.N if system is not None else len(np.atleast_1d(um)))
        path = reordered_path(order)
    else:
        raise ValueError(f"unknown path kind {kind!r}; expected one of {PATH_KINDS}")
    if system is not None and um is not None and up is not None:
        if controls is not None:
            check_admissible(system, np.atleast_2d(controls))
        probe_path(system, path, um, up, probe_order)
    return path


def _nodes(path, order):
    cuts = (0.0, *path.breaks, 1.0)
    s, w = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        x, wx = gauss_legendre(order, lo, hi)
        s.append(x)
        w.append(wx)
    return np.concatenate(s), np.concatenate(w)


def probe_path(system, path, um, up, order=16):
    s, _ = _nodes(path, order)
    pts = path(s, um, up)
    ok = is_admissible(system, pts)
    if not np.all(ok):
        raise InadmissibleState(f"path {path.id} leaves the admissible set at s={s[~ok][0]:.4f}")


def path_integral(integrand, path, um, up, order=16):
    """``int_0^1 integrand(phi(s), phi'(s)) ds`` split at the path breaks.

    Returns ``(value, error_estimate)`` with the estimate taken as the
    difference between the ``order`` and ``order // 2`` rules.
    """
    um = np.atleast_1d(np.asarray(um, dtype=float))
    up = np.atleast_1d(np.asarray(up, dtype=float))
    vals = []
    for n in (order, max(order // 2, 1)):
        s, w = _nodes(path, n)
        g = np.asarray(integrand(path(s, um, up), path.derivative(s, um, up)))
        vals.append(np.tensordot(w, g, axes=(0, 0)))
    err = float(np.max(np.abs(vals[0] - vals[1])))
    return vals[0], err


class JumpAmplitude(NamedTuple):
    value: object
    path_id: str
    quadrature_order: int
    error_estimate: float


def _contract(b_vals, dphi):
    b_vals = np.asarray(b_vals)
    if b_vals.ndim == dphi.ndim:
        return np.einsum("mi,mi->m", b_vals, dphi)
    return np.einsum("m...i,mi->m...", b_vals, dphi)


def jump_amplitude(b, path, um, up, order=16, rtol=AMPLITUDE_RTOL):
    """Amplitude ``int_0^1 b(phi)^T phi' ds`` of the Dirac mass at a jump.

    ``b`` maps states (M, N) to vectors (M, N) or matrices (M, K, N); the
    value is a scalar or a K-vector accordingly.  The order is doubled
    (up to 128) until the error estimate falls below
    ``rtol * (1 + |value|)``.
    """
    n = int(order)
    while True:
        val, err = path_integral(lambda p, dp: _contract(b(p), dp), path, um, up, n)
        if err <= rtol * (1.0 + float(np.max(np.abs(val)))):
            break
        if n >= 128:
            raise QuadratureNotConverged(
                f"jump amplitude on {path.id}: error estimate {err:.3e} at order {n}")
        n *= 2
    value = float(val) if np.ndim(val) == 0 else np.asarray(val)
    return JumpAmplitude(value, path.id, n, err)


class ProbeResult(NamedTuple):
    values: list
    max_spread: float
    verdict: str


def perfect_derivative_probe(b, paths, um, up, order=16, tol=SPREAD_TOL):
    """Compare jump amplitudes over several paths.

    A perfect derivative ``b = grad(g)`` gives ``g(u+) - g(u-)`` on every
    path; a spread above ``tol`` witnesses path dependence.
    """
    amps = [jump_amplitude(b, p, um, up, order) for p in paths]
    vals = np.array([np.atleast_1d(a.value) for a in amps])
    spread = float(np.max(np.ptp(vals, axis=0))) if len(vals) else 0.0
    return ProbeResult(amps, spread, "path-independent" if spread <= tol else "path-dependent")


class ShockProduction(NamedTuple):
    value: float
    path_route: Optional[float]
    jump_route: Optional[float]
    discrepancy: Optional[float]
    error_estimate: float


def _normal(system, n):
    n = np.ones(1) if n is None else np.atleast_1d(np.asarray(n, dtype=float))
    if n.shape != (system.d,):
        raise ValueError(f"normal must have {system.d} components")
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError("normal must be a unit vector")
    return n


def shock_production(system, pair, sigma, um, up, n=None, path=None, order=16):
    """Entropy production of a jump, by path integral and by jump values.

    The path route integrates ``grad(eta)^T (-sigma I + sum_j n_j A_j) phi'``;
    the jump route is ``-sigma [eta] + [q . n]``.  Lipschitz-only pairs use
    the jump route only, quasi-linear systems or incompatible pairs the path
    route only.  When both exist they are cross-checked.
    """
    n = _normal(system, n)
    um = np.atleast_1d(np.asarray(um, dtype=float))
    up = np.atleast_1d(np.asarray(up, dtype=float))
    path = path or straight_path()
    path_val = jump_val = None
    err = 0.0
    if pair.convexity != "lipschitz-only":
        def integrand(p, dp):
            flow = -sigma * dp
            for j in range(system.d):
                flow = flow + n[j] * np.einsum("mik,mk->mi", jacobian_eval(system, p, j), dp)
            return np.einsum("mi,mi->m", pair.grad(p), flow)

        k = int(order)
        while True:
            val, err = path_integral(integrand, path, um, up, k)
            if err <= AMPLITUDE_RTOL * (1.0 + abs(float(val))) or k >= 128:
                break
            k *= 2
        if err > AMPLITUDE_RTOL * (1.0 + abs(float(val))):
            raise QuadratureNotConverged(f"shock production: error estimate {err:.3e}")
        path_val = float(val)
    if pair.compatible and system.flux is not None:
        dq = sum(n[j] * (pair.q(up, j) - pair.q(um, j)) for j in range(system.d))
        jump_val = float(-sigma * (pair.eta(up) - pair.eta(um)) + dq)
    disc = None
    if path_val is not None and jump_val is not None:
        disc = abs(path_val - jump_val)
        if disc > 1e-8 * (1.0 + abs(jump_val)):
            warnings.warn(f"shock production routes disagree by {disc:.3e} for {pair.id}")
    value = path_val if path_val is not None else jump_val
    return ShockProduction(value, path_val, jump_val, disc, err)


def shock_entropy_production(system, pair, sigma, um, up, n=None, path=None, order=16):
    """Entropy production ``E`` of the jump ``(u-, u+)`` moving with speed ``sigma``."""
    return shock_production(system, pair, sigma, um, up, n, path, order).value
