"""Finite differences and Gauss-Legendre quadrature.

All finite-difference helpers accept states with arbitrary leading batch
axes, ``u.shape == (..., N)``, and call the target function once on a
stacked batch of perturbed states.
"""
from functools import lru_cache

import numpy as np

from .errors import QuadratureNotConverged

EPS = np.finfo(float).eps
FD_STEP = EPS ** (1.0 / 3.0)
FD_STEP_HESS = EPS ** 0.25


def _steps(u, base):
    return np.maximum(1.0, np.abs(u)) * base


def fd_gradient(f, u):
    """Central-difference gradient of a scalar function, shape (..., N)."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    h = _steps(u, FD_STEP)
    eye = np.eye(n)
    up = u[..., None, :] + h[..., :, None] * eye
    um = u[..., None, :] - h[..., :, None] * eye
    return (np.asarray(f(up)) - np.asarray(f(um))) / (2.0 * h)


def fd_jacobian(f, u):
    """Central-difference Jacobian of a vector function.

    Returns ``J[..., i, k] = d f_i / d u_k``.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    h = _steps(u, FD_STEP)
    eye = np.eye(n)
    up = u[..., None, :] + h[..., :, None] * eye
    um = u[..., None, :] - h[..., :, None] * eye
    cols = (np.asarray(f(up)) - np.asarray(f(um))) / (2.0 * h[..., :, None])
    return np.swapaxes(cols, -1, -2)


def fd_hessian(f, u):
    """Four-point central-difference Hessian of a scalar function."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    h = _steps(u, FD_STEP_HESS)
    eye = np.eye(n)
    out = np.empty(u.shape + (n,))
    for i in range(n):
        ei = h[..., i, None] * eye[i]
        for k in range(i, n):
            ek = h[..., k, None] * eye[k]
            val = (f(u + ei + ek) - f(u + ei - ek) - f(u - ei + ek) + f(u - ei - ek))
            val = np.asarray(val) / (4.0 * h[..., i] * h[..., k])
            out[..., i, k] = val
            out[..., k, i] = val
    return out


@lru_cache(maxsize=None)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_legendre(n, a=0.0, b=1.0):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def fixed_quad(f, a, b, order=16):
    """Integrate a vectorised ``f`` over [a, b] with one Gauss panel.

    ``f`` maps an array of nodes of shape (M,) to values of shape (M, ...).
    """
    x, w = gauss_legendre(order, a, b)
    vals = np.asarray(f(x))
    return np.tensordot(w, vals, axes=(0, 0))


def integrate(f, a, b, breaks=(), order=16, tol=1e-13, max_depth=24):
    """Adaptive composite Gauss-Legendre quadrature.

    The interval is first split at every break point inside (a, b); each
    piece is then bisected until the ``order`` and ``order // 2`` rules agree
    to ``tol * (1 + |I|)``.

    Returns
    -------
    value, error_estimate
    """
    if b < a:
        v, e = integrate(f, b, a, breaks, order, tol, max_depth)
        return -v, e
    pts = sorted({a, b, *[float(p) for p in breaks if a < p < b]})
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0.0:
            continue
        v, e = _adapt(f, lo, hi, order, tol, max_depth)
        total = total + v
        err += e
    return total, err


def _adapt(f, lo, hi, order, tol, depth):
    fine = fixed_quad(f, lo, hi, order)
    coarse = fixed_quad(f, lo, hi, max(order // 2, 1))
    e = float(np.max(np.abs(np.asarray(fine - coarse))))
    scale = 1.0 + float(np.max(np.abs(fine)))
    # round-off floor keeps noisy integrands from bisecting forever
    if e <= max(tol, 64.0 * EPS) * scale:
        return fine, e
    if depth == 0:
        raise QuadratureNotConverged(
            f"adaptive quadrature stalled on [{lo}, {hi}] (estimate {e:.3e})")
    mid = 0.5 * (lo + hi)
    v1, e1 = _adapt(f, lo, mid, order, tol, depth - 1)
    v2, e2 = _adapt(f, mid, hi, order, tol, depth - 1)
    return v1 + v2, e1 + e2
