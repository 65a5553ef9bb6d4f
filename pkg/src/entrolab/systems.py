"""Conservation-law systems, entropy pairs and entropy-variable maps.

States are numpy arrays whose last axis holds the N conserved quantities;
every registered evaluator broadcasts over leading axes.  Spatial
directions are indexed from zero, ``0 <= j < d``.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import (InadmissibleState, NewtonDiverged, NotConservative,
                     NonSmoothAt, NotStrictlyConvex)
from .numerics import EPS, fd_gradient, fd_hessian, fd_jacobian, gauss_legendre

RHO_MIN = 1e-12
E_MIN = 1e-12

CONVEXITY = ("strict", "degenerate", "lipschitz-only")


@dataclass(frozen=True)
class EntropyPair:
    """An observable ``eta`` together with its entropy flux ``q``."""

    id: str
    eta: Callable
    grad: Callable
    q: Callable
    hess: Optional[Callable] = None
    convexity: str = "strict"
    compatible: bool = True
    params: Mapping = field(default_factory=dict)
    kink: Optional[Callable] = None
    shift: Optional[np.ndarray] = None

    def label(self):
        if not self.params:
            return self.id
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.id}({inner})"


@dataclass(frozen=True)
class SystemSpec:
    id: str
    N: int
    d: int
    flux: Optional[Callable]
    jacobian: Optional[Callable] = None
    admissible: Optional[Callable] = None
    sampler: Optional[Callable] = None
    pair_factories: Mapping = field(default_factory=dict)
    default_pairs: tuple = ()
    params: Mapping = field(default_factory=dict)
    reference: Optional[np.ndarray] = None
    temporal: Optional[Callable] = None
    description: str = ""
    # scalar systems only: f', f'' and the inverse of f'
    dflux: Optional[Callable] = None
    d2flux: Optional[Callable] = None
    dflux_inv: Optional[Callable] = None

    @property
    def conservative(self):
        return self.flux is not None

    def sample(self, rng, n):
        """Draw ``n`` admissible states, shape (n, N)."""
        return self.sampler(rng, n)

    def pair(self, pair_id, **params):
        try:
            factory = self.pair_factories[pair_id]
        except KeyError:
            raise KeyError(f"system {self.id!r} has no entropy pair {pair_id!r}; "
                           f"known: {sorted(self.pair_factories)}") from None
        return factory(**params)

    def pairs(self):
        return [self.pair(pid, **kw) for pid, kw in self.default_pairs]


def check_admissible(system, u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InadmissibleState(f"{system.id}: non-finite state")
    if system.admissible is not None:
        with np.errstate(all="ignore"):
            ok = np.broadcast_to(system.admissible(u), u.shape[:-1])
        if not np.all(ok):
            bad = u.reshape(-1, u.shape[-1])[~ok.reshape(-1)][0]
            raise InadmissibleState(f"{system.id}: inadmissible state {bad}")
    return u


def is_admissible(system, u):
    u = np.asarray(u, dtype=float)
    ok = np.all(np.isfinite(u), axis=-1)
    if system.admissible is not None:
        with np.errstate(all="ignore"):
            ok = ok & system.admissible(u)
    return ok


# -- evaluators -------------------------------------------------------------

def flux_eval(system, u, j=0):
    """Spatial flux ``f_j(u)``."""
    if system.flux is None:
        raise NotConservative(f"{system.id} is quasi-linear only; no flux is defined")
    _check_direction(system, j)
    u = check_admissible(system, u)
    return system.flux(u, j)


def temporal_flux(system, u):
    """Temporal flux; the identity for ordinary conservative systems."""
    u = check_admissible(system, u)
    if system.temporal is None:
        return u.copy()
    return system.temporal(u)


def jacobian_eval(system, u, j=0, analytic=True):
    """Flux Jacobian ``A_j(u)``; central differences when no closed form exists."""
    _check_direction(system, j)
    u = check_admissible(system, u)
    if analytic and system.jacobian is not None:
        return system.jacobian(u, j)
    if system.flux is None:
        raise NotConservative(f"{system.id} needs an analytic Jacobian")
    return fd_jacobian(lambda w: system.flux(w, j), u)


def _check_direction(system, j):
    if not 0 <= j < system.d:
        raise IndexError(f"direction {j} outside 0..{system.d - 1} for {system.id}")


class EntropyEval(NamedTuple):
    eta: np.ndarray
    grad: np.ndarray
    hess: Optional[np.ndarray]
    q: tuple
    nonsmooth: bool = False
    one_sided: Optional[tuple] = None


def entropy_pair_eval(system, pair, u, fd_check=False, rtol=1e-6):
    """Evaluate ``eta``, its gradient, Hessian and the fluxes ``q_j``.

    For Lipschitz-only pairs evaluated on their kink the gradient is the
    right-sided value, ``nonsmooth`` is set, and ``one_sided`` holds both
    one-sided gradients.
    """
    u = check_admissible(system, u)
    eta = pair.eta(u)
    grad = pair.grad(u)
    hess = pair.hess(u) if pair.hess is not None else None
    q = tuple(pair.q(u, j) for j in range(system.d))
    nonsmooth = False
    one_sided = None
    if pair.kink is not None and np.any(pair.kink(u)):
        nonsmooth = True
        at_kink = pair.kink(u)[..., None]
        one_sided = (np.where(at_kink, -1.0, grad), np.where(at_kink, 1.0, grad))
        grad = one_sided[1]
    if fd_check:
        if nonsmooth:
            raise NonSmoothAt("finite differences undefined at the kink",
                              left=one_sided[0], right=one_sided[1])
        g_fd = fd_gradient(pair.eta, u)
        if np.max(np.abs(g_fd - grad)) > rtol * (1 + np.max(np.abs(grad))):
            raise AssertionError(f"{pair.id}: gradient disagrees with finite differences")
        if hess is not None:
            h_fd = fd_hessian(pair.eta, u)
            if np.max(np.abs(h_fd - hess)) > 1e-4 * (1 + np.max(np.abs(hess))):
                raise AssertionError(f"{pair.id}: Hessian disagrees with finite differences")
    return EntropyEval(eta, grad, hess, q, nonsmooth, one_sided)


def pair_hessian(pair, u):
    if pair.convexity == "lipschitz-only":
        raise NotStrictlyConvex(f"{pair.id} is Lipschitz only; no Hessian")
    if pair.hess is not None:
        return pair.hess(u)
    return fd_hessian(pair.eta, u)


def shift_pair(system, pair, c):
    """The affine shift ``eta_c(u) = eta(u) + <c, u>`` with its flux."""
    c = np.asarray(c, dtype=float).reshape(system.N)
    if system.flux is None:
        raise NotConservative("affine shifts need a conservative flux")
    base = pair

    def q(u, j):
        return base.q(u, j) + system.flux(u, j) @ c

    return replace(
        pair,
        eta=lambda u: base.eta(u) + np.asarray(u) @ c,
        grad=lambda u: base.grad(u) + c,
        q=q,
        shift=c if base.shift is None else base.shift + c,
    )


# -- entropy variables ---------------------------------------------------

def to_entropy_vars(system, pair, u):
    if pair.convexity != "strict":
        raise NotStrictlyConvex(f"{pair.id} is {pair.convexity}; entropy variables undefined")
    return pair.grad(check_admissible(system, u))


def from_entropy_vars(system, pair, v, guess=None, tol=1e-12, max_iter=50):
    """Invert ``v = grad eta(u)`` by damped Newton.

    Newton steps are globalised with Armijo backtracking on the strictly
    convex merit ``eta(u) - <v, u>`` and never leave the admissible set.
    """
    if pair.convexity != "strict":
        raise NotStrictlyConvex(f"{pair.id} is {pair.convexity}; entropy variables undefined")
    v = np.asarray(v, dtype=float)
    if v.ndim > 1:
        return np.stack([from_entropy_vars(system, pair, vi, guess, tol, max_iter)
                         for vi in v.reshape(-1, v.shape[-1])]).reshape(v.shape)
    u = np.array(system.reference if guess is None else guess, dtype=float)
    check_admissible(system, u)
    target = tol * (1.0 + np.max(np.abs(v)))

    def merit(w):
        return float(pair.eta(w) - v @ w)

    for _ in range(max_iter):
        g = pair.grad(u) - v
        if np.max(np.abs(g)) <= target:
            return _polish(system, pair, u, v, g)
        step = -np.linalg.solve(pair_hessian(pair, u), g)
        phi0 = merit(u)
        slope = float(g @ step)
        t = 1.0
        while True:
            w = u + t * step
            if is_admissible(system, w):
                phi = merit(w)
                slack = 1e3 * EPS * (1.0 + abs(phi0))
                if phi <= phi0 + 1e-4 * t * slope + slack:
                    break
            t *= 0.5
            if t < 1e-14:
                raise NewtonDiverged(f"line search failed for v={v}")
        u = w
    g = pair.grad(u) - v
    if np.max(np.abs(g)) <= target:
        return u
    raise NewtonDiverged(f"no convergence in {max_iter} iterations (residual {np.max(np.abs(g)):.2e})")


def _polish(system, pair, u, v, g):
    # one undamped step at convergence to land on round-off
    w = u - np.linalg.solve(pair_hessian(pair, u), g)
    if is_admissible(system, w):
        gw = pair.grad(w) - v
        if np.max(np.abs(gw)) <= np.max(np.abs(g)):
            return w
    return u


class Potentials(NamedTuple):
    psi0: float
    psi: tuple
    u: np.ndarray


def potential_eval(system, pair, v, guess=None):
    """Entropy potential ``psi0`` and flux potentials ``psi_j`` at ``v``."""
    v = np.asarray(v, dtype=float)
    u = from_entropy_vars(system, pair, v, guess=guess)
    psi0 = float(v @ u - pair.eta(u))
    psi = tuple(float(v @ system.flux(u, j) - pair.q(u, j)) for j in range(system.d))
    return Potentials(psi0, psi, u)


# -- scalar systems --------------------------------------------------------

def _scalar_admissible(u):
    return np.all(np.isfinite(u), axis=-1)


def _uniform_sampler(lo, hi, n_comp):
    def sample(rng, n):
        return rng.uniform(lo, hi, size=(n, n_comp))
    return sample


def quadratic_scalar_pair(f, df):
    """``eta = u^2/2`` with ``q(u) = int_0^u w f'(w) dw`` by quadrature."""
    s, w = gauss_legendre(32)

    def q(u, j=0):
        x = np.asarray(u)[..., 0]
        return x * x * np.tensordot(df(x[..., None] * s), s * w, axes=([-1], [0]))

    return EntropyPair(
        id="quadratic",
        eta=lambda u: 0.5 * np.asarray(u)[..., 0] ** 2,
        grad=lambda u: np.asarray(u, dtype=float).copy(),
        hess=lambda u: np.ones(np.shape(u) + (1,)),
        q=q,
    )


def kruzhkov_pair(f, c=0.5):
    c = float(c)

    def q(u, j=0):
        x = np.asarray(u)[..., 0]
        return np.sign(x - c) * (f(x) - f(c))

    return EntropyPair(
        id="kruzhkov",
        eta=lambda u: np.abs(np.asarray(u)[..., 0] - c),
        grad=lambda u: np.sign(np.asarray(u) - c),
        q=q,
        convexity="lipschitz-only",
        params={"c": c},
        kink=lambda u: np.asarray(u)[..., 0] == c,
    )


def convex_scalar(f, df, d2f, df_inv=None, id="convex_scalar", params=None,
                  extra_pairs=None, lo=-2.0, hi=2.0):
    """A scalar law ``u_t + f(u)_x = 0`` with strictly convex ``f``."""
    fac = {
        "quadratic": lambda: quadratic_scalar_pair(f, df),
        "kruzhkov": lambda c=0.5: kruzhkov_pair(f, c),
    }
    fac.update(extra_pairs or {})
    return SystemSpec(
        id=id, N=1, d=1,
        flux=lambda u, j=0: f(np.asarray(u)),
        jacobian=lambda u, j=0: d2_to_matrix(df(np.asarray(u)[..., 0])),
        admissible=_scalar_admissible,
        sampler=_uniform_sampler(lo, hi, 1),
        pair_factories=fac,
        default_pairs=(("quadratic", {}), ("kruzhkov", {"c": 0.5})),
        params=dict(params or {}),
        reference=np.zeros(1),
        description="scalar convex conservation law",
        dflux=df, d2flux=d2f, dflux_inv=df_inv,
    )


def d2_to_matrix(a):
    return np.asarray(a)[..., None, None]


def burgers():
    def exp_pair():
        return EntropyPair(
            id="exp",
            eta=lambda u: np.exp(np.asarray(u)[..., 0]),
            grad=lambda u: np.exp(np.asarray(u)),
            hess=lambda u: np.exp(np.asarray(u))[..., None],
            q=lambda u, j=0: np.exp(np.asarray(u)[..., 0]) * (np.asarray(u)[..., 0] - 1.0),
        )

    def quadratic():
        return EntropyPair(
            id="quadratic",
            eta=lambda u: 0.5 * np.asarray(u)[..., 0] ** 2,
            grad=lambda u: np.asarray(u, dtype=float).copy(),
            hess=lambda u: np.ones(np.shape(u) + (1,)),
            q=lambda u, j=0: np.asarray(u)[..., 0] ** 3 / 3.0,
        )

    spec = convex_scalar(
        f=lambda u: 0.5 * u * u,
        df=lambda u: u,
        d2f=lambda u: np.ones_like(u),
        df_inv=lambda xi: xi,
        id="burgers",
        extra_pairs={"quadratic": quadratic, "exp": exp_pair},
    )
    return replace(spec,
                   default_pairs=(("quadratic", {}), ("exp", {}), ("kruzhkov", {"c": 0.5})),
                   description="inviscid Burgers, f(u) = u^2/2")


_SCALAR_FLUXES = {
    "exp": (np.exp, np.exp, np.exp, np.log),
    "cosh": (np.cosh, np.sinh, np.cosh, np.arcsinh),
}


def convex_scalar_named(flux="exp"):
    try:
        f, df, d2f, inv = _SCALAR_FLUXES[flux]
    except KeyError:
        raise KeyError(f"unknown scalar flux {flux!r}; known: {sorted(_SCALAR_FLUXES)}") from None
    return convex_scalar(f, df, d2f, inv, id="convex_scalar", params={"flux": flux})


# -- symmetric demo: f(u) = u |u|^2 -------------------------------------------

def symmetric_demo():
    """Two-component system with symmetric Jacobians and potential |u|^4/4."""

    def flux(u, j=0):
        u = np.asarray(u)
        return u * np.sum(u * u, axis=-1, keepdims=True)

    def jac(u, j=0):
        u = np.asarray(u)
        r2 = np.sum(u * u, axis=-1)[..., None, None]
        return r2 * np.eye(2) + 2.0 * u[..., :, None] * u[..., None, :]

    def zeta(u):
        return 0.25 * np.sum(np.asarray(u) ** 2, axis=-1) ** 2

    def quadratic():
        return EntropyPair(
            id="quadratic",
            eta=lambda u: 0.5 * np.sum(np.asarray(u) ** 2, axis=-1),
            grad=lambda u: np.asarray(u, dtype=float).copy(),
            hess=lambda u: np.broadcast_to(np.eye(2), np.shape(u) + (2,)).copy(),
            q=lambda u, j=0: 0.75 * np.sum(np.asarray(u) ** 2, axis=-1) ** 2,
        )

    def lam_pair(lam=0.2):
        lam = float(lam)

        def q(u, j=0):
            r2 = np.sum(np.asarray(u) ** 2, axis=-1)
            return 0.75 * r2 ** 2 - 0.5 * lam * r2 ** 3

        return EntropyPair(
            id="lambda",
            eta=lambda u: 0.5 * np.sum(np.asarray(u) ** 2, axis=-1) - lam * zeta(u),
            grad=lambda u: np.asarray(u) - lam * flux(u),
            hess=lambda u: np.eye(2) - lam * jac(u),
            q=q,
            params={"lam": lam},
        )

    def sample(rng, n):
        r = np.sqrt(rng.uniform(0.0, 1.0, n))
        th = rng.uniform(0.0, 2 * np.pi, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    return SystemSpec(
        id="symmetric_demo", N=2, d=1, flux=flux, jacobian=jac,
        admissible=lambda u: np.all(np.isfinite(u), axis=-1),
        sampler=sample,
        pair_factories={"quadratic": quadratic, "lambda": lam_pair},
        default_pairs=(("quadratic", {}), ("lambda", {"lam": 0.2}), ("lambda", {"lam": -0.5})),
        reference=np.zeros(2),
        description="symmetric system f(u) = u|u|^2",
    )


# -- Rozhdestvenskii: u_t + diag(u2, u3, u1) u_x = 0 ---------------------------

def rozhdestvenskii():
    def jac(u, j=0):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (3,))
        out[..., 0, 0] = u[..., 1]
        out[..., 1, 1] = u[..., 2]
        out[..., 2, 2] = u[..., 0]
        return out

    def candidate():
        return EntropyPair(
            id="quadratic_candidate",
            eta=lambda u: 0.5 * np.sum(np.asarray(u) ** 2, axis=-1),
            grad=lambda u: np.asarray(u, dtype=float).copy(),
            hess=lambda u: np.broadcast_to(np.eye(3), np.shape(u) + (3,)).copy(),
            q=lambda u, j=0: np.zeros(np.shape(u)[:-1]),
            compatible=False,
        )

    return SystemSpec(
        id="rozhdestvenskii", N=3, d=1, flux=None, jacobian=jac,
        admissible=lambda u: np.all(np.isfinite(u), axis=-1),
        sampler=_uniform_sampler(0.5, 2.5, 3),
        pair_factories={"quadratic_candidate": candidate},
        default_pairs=(("quadratic_candidate", {}),),
        reference=np.ones(3),
        description="completely non-conservative 3x3 system (quasi-linear only)",
    )


# -- isentropic gamma-law Euler ----------------------------------------------

def isentropic_euler(gamma=1.4, kappa=1.0, d=1):
    gamma, kappa, d = float(gamma), float(kappa), int(d)
    if d not in (1, 2):
        raise ValueError("isentropic Euler is registered for d in {1, 2}")
    N = d + 1

    def parts(u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        m = u[..., 1:]
        vel = m / rho[..., None]
        return rho, m, vel, kappa * rho ** gamma

    def flux(u, j=0):
        rho, m, vel, p = parts(u)
        out = np.empty(np.shape(u))
        out[..., 0] = m[..., j]
        out[..., 1:] = m[..., j, None] * vel
        out[..., 1 + j] += p
        return out

    def jac(u, j=0):
        rho, m, vel, p = parts(u)
        c2 = kappa * gamma * rho ** (gamma - 1)
        out = np.zeros(np.shape(u) + (N,))
        out[..., 0, 1 + j] = 1.0
        out[..., 1:, 0] = -vel[..., j, None] * vel
        out[..., 1 + j, 0] += c2
        for i in range(d):
            out[..., 1 + i, 1 + j] += vel[..., i]
            out[..., 1 + i, 1 + i] += vel[..., j]
        return out

    def energy():
        def eta(u):
            rho, m, vel, p = parts(u)
            return 0.5 * np.sum(m * vel, axis=-1) + p / (gamma - 1)

        def grad(u):
            rho, m, vel, p = parts(u)
            out = np.empty(np.shape(u))
            out[..., 0] = -0.5 * np.sum(vel * vel, axis=-1) + kappa * gamma * rho ** (gamma - 1) / (gamma - 1)
            out[..., 1:] = vel
            return out

        def hess(u):
            rho, m, vel, p = parts(u)
            out = np.zeros(np.shape(u) + (N,))
            out[..., 0, 0] = np.sum(vel * vel, axis=-1) / rho + kappa * gamma * rho ** (gamma - 2)
            out[..., 0, 1:] = -vel / rho[..., None]
            out[..., 1:, 0] = -vel / rho[..., None]
            out[..., 1:, 1:] = np.eye(d) / rho[..., None, None]
            return out

        def q(u, j=0):
            rho, m, vel, p = parts(u)
            return vel[..., j] * (eta(u) + p)

        return EntropyPair(id="energy", eta=eta, grad=grad, hess=hess, q=q)

    def admissible(u):
        return np.asarray(u)[..., 0] >= RHO_MIN

    def sample(rng, n):
        rho = rng.uniform(0.5, 2.0, n)
        vel = rng.uniform(-1.0, 1.0, (n, d))
        return np.concatenate([rho[:, None], rho[:, None] * vel], axis=-1)

    return SystemSpec(
        id="isentropic_euler", N=N, d=d, flux=flux, jacobian=jac,
        admissible=admissible, sampler=sample,
        pair_factories={"energy": energy},
        default_pairs=(("energy", {}),),
        params={"gamma": gamma, "kappa": kappa, "d": d},
        reference=np.concatenate([[1.0], np.zeros(d)]),
        description="isentropic Euler, p = kappa rho^gamma",
    )


# -- full gamma-law Euler ----------------------------------------------------

def euler_parts(u, gamma, d):
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    m = u[..., 1:1 + d]
    E = u[..., 1 + d]
    vel = m / rho[..., None]
    rhoe = E - 0.5 * np.sum(m * vel, axis=-1)
    p = (gamma - 1.0) * rhoe
    return rho, m, E, vel, rhoe, p


def primitive_to_conserved(prim, gamma):
    """(rho, v_1..v_d, p) -> (rho, rho v, E)."""
    prim = np.asarray(prim, dtype=float)
    rho = prim[..., 0]
    vel = prim[..., 1:-1]
    p = prim[..., -1]
    E = p / (gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
    return np.concatenate([rho[..., None], rho[..., None] * vel, E[..., None]], axis=-1)


def conserved_to_primitive(u, gamma):
    d = np.shape(u)[-1] - 2
    rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
    return np.concatenate([rho[..., None], vel, p[..., None]], axis=-1)


_H_FAMILIES = ("physical", "tadmor", "homogeneous")


def _h_functions(kind, gamma, alpha):
    if kind == "physical":
        return (lambda S: S, lambda S: np.ones_like(S), lambda S: np.zeros_like(S))
    if kind == "tadmor":
        k = gamma + 1.0
        c = (gamma + 1.0) / (gamma - 1.0)
        return (lambda S: c * np.exp(S / k), lambda S: c / k * np.exp(S / k),
                lambda S: c / k ** 2 * np.exp(S / k))
    if kind == "homogeneous":
        k = alpha + gamma
        return (lambda S: np.exp(S / k), lambda S: np.exp(S / k) / k,
                lambda S: np.exp(S / k) / k ** 2)
    raise KeyError(f"unknown entropy family {kind!r}; known: {_H_FAMILIES}")


def euler_entropy_pair(gamma, d, kind="physical", alpha=0.0):
    """``eta = -rho h(S)`` with ``S = ln(p rho^-gamma)`` and flux ``v_j eta``."""
    h, dh, d2h = _h_functions(kind, gamma, float(alpha))
    N = d + 2

    def pieces(u):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        S = np.log(p) - gamma * np.log(rho)
        de = np.empty(np.shape(u))
        de[..., 0] = 0.5 * np.sum(vel * vel, axis=-1)
        de[..., 1:1 + d] = -vel
        de[..., 1 + d] = 1.0
        dS = de / rhoe[..., None]
        dS[..., 0] -= gamma / rho
        return rho, vel, rhoe, S, de, dS

    def eta(u):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        return -rho * h(np.log(p) - gamma * np.log(rho))

    def grad(u):
        rho, vel, rhoe, S, de, dS = pieces(u)
        out = -rho[..., None] * dh(S)[..., None] * dS
        out[..., 0] -= h(S)
        return out

    def hess(u):
        rho, vel, rhoe, S, de, dS = pieces(u)
        d2e = np.zeros(np.shape(u) + (N,))
        d2e[..., 0, 0] = -np.sum(vel * vel, axis=-1) / rho
        d2e[..., 0, 1:1 + d] = vel / rho[..., None]
        d2e[..., 1:1 + d, 0] = vel / rho[..., None]
        d2e[..., 1:1 + d, 1:1 + d] = -np.eye(d) / rho[..., None, None]
        d2S = d2e / rhoe[..., None, None] - de[..., :, None] * de[..., None, :] / rhoe[..., None, None] ** 2
        d2S[..., 0, 0] += gamma / rho ** 2
        e0 = np.zeros(N)
        e0[0] = 1.0
        h1 = dh(S)[..., None, None]
        out = -h1 * (e0[:, None] * dS[..., None, :] + dS[..., :, None] * e0[None, :])
        out -= (rho * d2h(S))[..., None, None] * dS[..., :, None] * dS[..., None, :]
        out -= rho[..., None, None] * h1 * d2S
        return out

    def q(u, j=0):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        return vel[..., j] * eta(u)

    params = {"alpha": float(alpha)} if kind == "homogeneous" else {}
    convexity = "strict"
    if kind == "homogeneous" and float(alpha) == 0.0:
        # h' - gamma h'' vanishes: eta = -p^(1/gamma) has a singular Hessian
        convexity = "degenerate"
    return EntropyPair(id=kind, eta=eta, grad=grad, hess=hess, q=q,
                       convexity=convexity, params=params)


def euler_tadmor_entropy_vars(u, gamma):
    """Closed-form entropy variables of ``-(gamma+1)/(gamma-1) (p rho)^(1/(gamma+1))``."""
    d = np.shape(u)[-1] - 2
    rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
    scale = (p * rho) ** (-gamma / (gamma + 1.0))
    w = np.concatenate([E[..., None], -m, rho[..., None]], axis=-1)
    return -scale[..., None] * w


def euler(gamma=1.4, d=1):
    gamma, d = float(gamma), int(d)
    if d not in (1, 2, 3):
        raise ValueError("Euler is registered for d in {1, 2, 3}")
    N = d + 2

    def flux(u, j=0):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        out = np.empty(np.shape(u))
        out[..., 0] = m[..., j]
        out[..., 1:1 + d] = m[..., j, None] * vel
        out[..., 1 + j] += p
        out[..., 1 + d] = vel[..., j] * (E + p)
        return out

    def jac(u, j=0):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        g1 = gamma - 1.0
        dp = np.empty(np.shape(u))
        dp[..., 0] = 0.5 * g1 * np.sum(vel * vel, axis=-1)
        dp[..., 1:1 + d] = -g1 * vel
        dp[..., 1 + d] = g1
        out = np.zeros(np.shape(u) + (N,))
        out[..., 0, 1 + j] = 1.0
        out[..., 1:1 + d, 0] = -vel[..., j, None] * vel
        for i in range(d):
            out[..., 1 + i, 1 + j] += vel[..., i]
            out[..., 1 + i, 1 + i] += vel[..., j]
        out[..., 1 + j, :] += dp
        H = (E + p) / rho
        out[..., 1 + d, :] = vel[..., j, None] * dp
        out[..., 1 + d, 0] -= vel[..., j] * H
        out[..., 1 + d, 1 + j] += H
        out[..., 1 + d, 1 + d] = gamma * vel[..., j]
        return out

    def admissible(u):
        rho, m, E, vel, rhoe, p = euler_parts(u, gamma, d)
        return (rho >= RHO_MIN) & (rhoe / rho >= E_MIN)

    def sample(rng, n):
        rho = rng.uniform(0.5, 2.0, n)
        vel = rng.uniform(-1.0, 1.0, (n, d))
        p = rng.uniform(0.5, 2.0, n)
        return primitive_to_conserved(np.concatenate([rho[:, None], vel, p[:, None]], -1), gamma)

    pairs = {
        "physical": lambda: euler_entropy_pair(gamma, d, "physical"),
        "tadmor": lambda: euler_entropy_pair(gamma, d, "tadmor"),
        "homogeneous": lambda alpha=1.0: euler_entropy_pair(gamma, d, "homogeneous", alpha),
    }
    ref = primitive_to_conserved(np.concatenate([[1.0], np.zeros(d), [1.0]]), gamma)
    return SystemSpec(
        id="euler", N=N, d=d, flux=flux, jacobian=jac,
        admissible=admissible, sampler=sample,
        pair_factories=pairs,
        default_pairs=(("physical", {}), ("tadmor", {}), ("homogeneous", {"alpha": 1.0})),
        params={"gamma": gamma, "d": d},
        reference=ref,
        description="compressible Euler, gamma-law gas",
    )


# -- ultra-relativistic Euler (homogeneity checks only) ------------------------

def ultrarelativistic(d=1):
    """State ``(p, m_1..m_d)``; conserved quantities ``(4 m W, 3p + p|v|^2)``."""
    d = int(d)
    if d not in (1, 2, 3):
        raise ValueError("ultra-relativistic Euler is registered for d in {1, 2, 3}")
    N = d + 1

    def parts(u):
        u = np.asarray(u, dtype=float)
        p = u[..., 0]
        m = u[..., 1:]
        vel = m / p[..., None]
        W = np.sqrt(1.0 + np.sum(vel * vel, axis=-1))
        return p, m, vel, W

    def temporal(u):
        p, m, vel, W = parts(u)
        E = 3.0 * p + p * np.sum(vel * vel, axis=-1)
        return np.concatenate([4.0 * m * W[..., None], E[..., None]], axis=-1)

    def flux(u, j=0):
        p, m, vel, W = parts(u)
        mom = 4.0 * m * vel[..., j, None]
        mom[..., j] += p
        return np.concatenate([mom, (4.0 * m[..., j] * W)[..., None]], axis=-1)

    def sample(rng, n):
        p = rng.uniform(0.5, 2.0, n)
        vel = rng.uniform(-1.0, 1.0, (n, d))
        return np.concatenate([p[:, None], p[:, None] * vel], axis=-1)

    return SystemSpec(
        id="ultrarelativistic", N=N, d=d, flux=flux, temporal=temporal,
        admissible=lambda u: np.asarray(u)[..., 0] > 0.0,
        sampler=sample,
        params={"d": d},
        reference=np.concatenate([[1.0], np.zeros(d)]),
        description="ultra-relativistic Euler (no registered entropy)",
    )


REGISTRY = {
    "burgers": burgers,
    "convex_scalar": convex_scalar_named,
    "symmetric_demo": symmetric_demo,
    "rozhdestvenskii": rozhdestvenskii,
    "isentropic_euler": isentropic_euler,
    "euler": euler,
    "ultrarelativistic": ultrarelativistic,
}


def get_system(system_id, **params):
    try:
        factory = REGISTRY[system_id]
    except KeyError:
        raise KeyError(f"unknown system {system_id!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)


def get_pair(system, pair_id, shift=None, **params):
    pair = system.pair(pair_id, **params)
    if shift is not None:
        pair = shift_pair(system, pair, shift)
    return pair
