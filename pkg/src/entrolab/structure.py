"""Numerical verification of entropy structure.

Each check evaluates a residual over a batch of sample states and returns a
:class:`CheckReport`; the verdict is ``pass`` exactly when the largest
residual does not exceed the threshold.
"""
from dataclasses import asdict, dataclass, field
import warnings

import numpy as np
from scipy.optimize import minimize

from .errors import NotStrictlyConvex, ZeroState
from .numerics import FD_STEP, fd_gradient, fd_jacobian, gauss_legendre
from .systems import (from_entropy_vars, is_admissible, jacobian_eval, pair_hessian)

ENTROPY_PAIR_TOL = 1e-6
SYMMETRIZER_TOL_FD = 1e-6
SYMMETRIZER_TOL_ANALYTIC = 1e-10
GODUNOV_TOL = 1e-5
HOMOGENEITY_TOL = 1e-8
NULLSPACE_RTOL = 1e-10
# C built from finite-differenced Jacobians carries O(1e-9) noise
CURL_RTOL = 1e-6
MIN_SEARCH_STATES = 20
N_WITNESSES = 3


@dataclass
class CheckReport:
    check_id: str
    states_tested: int
    max_residual: float
    threshold: float
    verdict: str
    witnesses: list = field(default_factory=list)
    skipped: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return asdict(self)


def make_report(check_id, states, residuals, threshold, skipped=0, details=None):
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    states = np.asarray(states, dtype=float).reshape(len(residuals), -1)
    worst = float(np.max(residuals)) if residuals.size else 0.0
    order = np.argsort(residuals)[::-1][:N_WITNESSES]
    witnesses = [(states[i].tolist(), float(residuals[i])) for i in order]
    return CheckReport(
        check_id=check_id,
        states_tested=int(residuals.size),
        max_residual=worst,
        threshold=float(threshold),
        verdict="pass" if worst <= threshold else "fail",
        witnesses=witnesses,
        skipped=int(skipped),
        details=dict(details or {}),
    )


def merge_reports(a, b):
    """Combine two reports of the same check over disjoint state sets."""
    if a.check_id != b.check_id or a.threshold != b.threshold:
        raise ValueError("can only merge reports of the same check")
    wit = sorted(a.witnesses + b.witnesses, key=lambda w: -w[1])[:N_WITNESSES]
    worst = max(a.max_residual, b.max_residual)
    return CheckReport(a.check_id, a.states_tested + b.states_tested, worst, a.threshold,
                       "pass" if worst <= a.threshold else "fail", wit,
                       a.skipped + b.skipped, {**a.details, **b.details})


def _admissible_only(system, states):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    ok = is_admissible(system, states)
    skipped = int(np.sum(~ok))
    if skipped:
        warnings.warn(f"{system.id}: skipped {skipped} inadmissible states")
    return states[ok], skipped


def _pair_tag(pair):
    return pair.label() if hasattr(pair, "label") else pair.id


# -- entropy compatibility -------------------------------------------------

def check_entropy_pair(system, pair, states, threshold=ENTROPY_PAIR_TOL):
    """Residual of ``grad(eta)^T A_j = grad(q_j)^T`` with ``grad q_j`` by FD.

    Lipschitz-only pairs are checked at value level instead: ``q(u) - q(c)``
    against the line integral of ``eta'(w) f'(w)`` from the kink ``c``.
    """
    states, skipped = _admissible_only(system, states)
    cid = f"entropy_pair:{system.id}:{_pair_tag(pair)}"
    if pair.convexity == "lipschitz-only":
        return _value_level_pair(system, pair, states, threshold, cid, skipped)
    g = pair.grad(states)
    res = np.zeros(len(states))
    for j in range(system.d):
        A = jacobian_eval(system, states, j)
        lhs = np.einsum("...i,...ij->...j", g, A)
        dq = fd_gradient(lambda w: pair.q(w, j), states)
        res = np.maximum(res, np.max(np.abs(lhs - dq), axis=-1))
    return make_report(cid, states, res, threshold, skipped, {"mode": "gradient"})


def _value_level_pair(system, pair, states, threshold, cid, skipped):
    c = np.full(system.N, pair.params.get("c", 0.0))
    s, w = gauss_legendre(16)
    res = np.empty(len(states))
    for i, u in enumerate(states):
        path = c + s[:, None] * (u - c)
        A = jacobian_eval(system, path, 0)
        integrand = np.einsum("mi,mij,j->m", pair.grad(path), A, u - c)
        res[i] = abs(pair.q(u, 0) - pair.q(c, 0) - w @ integrand)
    return make_report(cid, states, res, threshold, skipped, {"mode": "value"})


# -- symmetrization ---------------------------------------------------------

def check_symmetrizer(system, pair, states, threshold=None):
    """Residual ``max_j |D2eta A_j - A_j^T D2eta|``."""
    if pair.convexity != "strict":
        raise NotStrictlyConvex(f"{pair.id} is {pair.convexity}; no symmetrizer check")
    states, skipped = _admissible_only(system, states)
    analytic = pair.hess is not None and system.jacobian is not None
    if threshold is None:
        threshold = SYMMETRIZER_TOL_ANALYTIC if analytic else SYMMETRIZER_TOL_FD
    H = pair_hessian(pair, states)
    res = np.zeros(len(states))
    for j in range(system.d):
        A = jacobian_eval(system, states, j)
        M = H @ A - np.swapaxes(A, -1, -2) @ H
        res = np.maximum(res, np.max(np.abs(M), axis=(-1, -2)))
    return make_report(f"symmetrizer:{system.id}:{_pair_tag(pair)}", states, res, threshold,
                       skipped, {"hessian": "analytic" if analytic else "finite-difference"})


def _sym_basis(N):
    basis = []
    for a in range(N):
        for b in range(a, N):
            E = np.zeros((N, N))
            E[a, b] = E[b, a] = 1.0
            basis.append(E)
    return basis


def symmetrizer_nullspace(jacobians):
    """Orthonormal basis of symmetric ``H`` with ``H A = A^T H`` for all ``A``.

    Returns a list of N x N matrices (Frobenius-orthonormal).
    """
    N = jacobians[0].shape[-1]
    basis = _sym_basis(N)
    cols = []
    for E in basis:
        cols.append(np.concatenate([(E @ A - A.T @ E).ravel() for A in jacobians]))
    M = np.stack(cols, axis=1)
    _, sv, vt = np.linalg.svd(M)
    smax = sv[0] if sv.size and sv[0] > 0 else 0.0
    rank = int(np.sum(sv > NULLSPACE_RTOL * smax)) if smax > 0 else 0
    null = vt[rank:]
    mats = [sum(c * E for c, E in zip(vec, basis)) for vec in null]
    # re-orthonormalise in the Frobenius product
    out = []
    for H in mats:
        for B in out:
            H = H - np.sum(H * B) * B
        nrm = np.linalg.norm(H)
        if nrm > 1e-12:
            out.append(H / nrm)
    return out


def _best_min_eig(basis):
    """Maximise the smallest eigenvalue over unit combinations of ``basis``."""
    k = len(basis)
    if k == 0:
        return -np.inf, None
    B = np.stack(basis)

    def neg(c):
        nrm = np.linalg.norm(c)
        if nrm == 0:
            return np.inf
        return -np.linalg.eigvalsh(np.tensordot(c / nrm, B, axes=1))[0]

    N = B.shape[-1]
    starts = [np.array([np.sum(Bi * np.eye(N)) for Bi in basis])]
    starts += list(np.eye(k)) + list(-np.eye(k))
    best_val, best_c = np.inf, None
    for c0 in starts:
        if np.linalg.norm(c0) == 0:
            continue
        val = neg(c0)
        if k > 1 and val > -1e-12:
            r = minimize(neg, c0, method="Nelder-Mead",
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * k})
            if r.fun < val:
                val, c0 = r.fun, r.x
        if val < best_val:
            best_val, best_c = val, c0 / np.linalg.norm(c0)
        if best_val < -1e-6:
            break
    return -best_val, best_c


def _jacobian_derivative(system, u, j):
    """``dA[k, a, b] = d A_{ka} / d u_b`` by central differences."""
    N = system.N

    def flat(w):
        return jacobian_eval(system, w, j).reshape(np.shape(w)[:-1] + (N * N,))
    return fd_jacobian(flat, u).reshape(N, N, N)


def _curl_constraints(system, u):
    """Rows ``C`` with ``C g = 0`` iff ``sum_k g_k dA_{k.}`` is symmetric."""
    N = system.N
    rows = []
    scale = 0.0
    for j in range(system.d):
        dA = _jacobian_derivative(system, u, j)
        scale = max(scale, float(np.max(np.abs(dA))))
        for a in range(N):
            for b in range(a + 1, N):
                rows.append(dA[:, a, b] - dA[:, b, a])
    if not rows:
        return np.zeros((0, N)), scale
    return np.array(rows), scale


@dataclass
class SearchReport:
    system_id: str
    states_tested: int
    verdict: str
    qualifier: str
    nullspace_dims: list
    pattern: str
    forced_zero: list
    integrable_dims: list
    min_curl_residual: list
    pd_margin: list
    rank_deficient: int = 0
    registered_in_nullspace: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def entropic(self):
        return self.verdict == "entropic"

    def to_dict(self):
        return asdict(self)


def symmetrizer_search(system, states, pairs=None, min_states=MIN_SEARCH_STATES):
    """Decide numerically whether any entropy symmetrizer can exist.

    At each state the symmetric solutions of ``H A_j = A_j^T H`` are found by
    SVD.  Integrability of a Hessian ``H = Dg`` additionally requires
    ``sum_k g_k dA_{k.}`` to be symmetric, a linear condition on ``g``; when
    only ``g = 0`` survives at every state, ``D2eta`` vanishes identically and
    the system is reported non-entropic.
    """
    states, skipped = _admissible_only(system, states)
    N = system.N
    if N > 8:
        raise ValueError("symmetrizer search is limited to N <= 8")
    notes = []
    if len(states) < min_states:
        notes.append(f"only {len(states)} states sampled; at least {min_states} recommended")
    dims, gdims, curl, pd = [], [], [], []
    zero_mask = np.ones((N, N), dtype=bool)
    rank_def = 0
    in_null = {}
    for u in states:
        As = [jacobian_eval(system, u, j) for j in range(system.d)]
        basis = symmetrizer_nullspace(As)
        dims.append(len(basis))
        if not basis:
            rank_def += 1
            pd.append(float("-inf"))
        else:
            here = np.all(np.stack([np.abs(B) <= 1e-8 for B in basis]), axis=0)
            zero_mask &= here
            pd.append(float(_best_min_eig(basis)[0]))
        C, scale = _curl_constraints(system, u)
        if C.shape[0] == 0:
            gdims.append(N)
            curl.append(0.0)
        else:
            sv = np.linalg.svd(C, compute_uv=False)
            tol = CURL_RTOL * max(1.0, scale)
            gdims.append(int(N - np.sum(sv > tol)))
            curl.append(float(sv[-1]) if len(sv) >= N else 0.0)
        for pair in pairs or ():
            if pair.convexity != "strict":
                continue
            H = pair_hessian(pair, u)
            proj = sum(np.sum(H * B) * B for B in basis) if basis else np.zeros_like(H)
            r = float(np.linalg.norm(H - proj) / np.linalg.norm(H))
            key = _pair_tag(pair)
            in_null[key] = max(in_null.get(key, 0.0), r)
    if rank_def:
        notes.append(f"no symmetric solution at {rank_def} states")
    offdiag = ~np.eye(N, dtype=bool)
    if N == 1 or not zero_mask.any():
        pattern = "full"
    elif np.array_equal(zero_mask, offdiag):
        pattern = "diagonal"
    else:
        pattern = "structured"
    no_pd = any(m <= 1e-10 for m in pd)
    no_curvature = all(g == 0 for g in gdims)
    entropic = not (no_pd or no_curvature or rank_def)
    if not entropic:
        if no_curvature:
            notes.append("integrability forces grad(eta) = 0 at every sampled state")
        if no_pd:
            notes.append("no positive-definite symmetrizer at some sampled state")
    return SearchReport(
        system_id=system.id,
        states_tested=len(states),
        verdict="entropic" if entropic else "non-entropic",
        qualifier="numerical" if entropic else "numerically non-entropic",
        nullspace_dims=dims,
        pattern=pattern,
        forced_zero=zero_mask.astype(int).tolist(),
        integrable_dims=gdims,
        min_curl_residual=curl,
        pd_margin=pd,
        rank_deficient=rank_def,
        registered_in_nullspace=in_null,
        notes=notes,
    )


# -- Godunov/Mock potentials -----------------------------------------------

def check_godunov_potentials(system, pair, states, threshold=GODUNOV_TOL):
    """FD gradients of ``psi0``, ``psi_j`` against ``u(v)`` and ``f_j(u(v))``."""
    states, skipped = _admissible_only(system, states)
    res = np.empty(len(states))
    for i, u in enumerate(states):
        v = pair.grad(u)
        u_v = from_entropy_vars(system, pair, v, guess=u)
        h = np.maximum(1.0, np.abs(v)) * FD_STEP
        g0 = np.empty(system.N)
        gj = np.empty((system.d, system.N))
        for k in range(system.N):
            vals = []
            for sgn in (1.0, -1.0):
                vk = v.copy()
                vk[k] += sgn * h[k]
                w = from_entropy_vars(system, pair, vk, guess=u_v)
                psi0 = vk @ w - pair.eta(w)
                psij = [vk @ system.flux(w, j) - pair.q(w, j) for j in range(system.d)]
                vals.append((psi0, np.array(psij)))
            g0[k] = (vals[0][0] - vals[1][0]) / (2 * h[k])
            gj[:, k] = (vals[0][1] - vals[1][1]) / (2 * h[k])
        r0 = np.max(np.abs(g0 - u_v))
        rj = max(np.max(np.abs(gj[j] - system.flux(u_v, j))) for j in range(system.d))
        res[i] = max(r0, rj)
    return make_report(f"godunov:{system.id}:{_pair_tag(pair)}", states, res, threshold, skipped)


# -- convexity ------------------------------------------------------------

def default_lambda_grid(n=32, lo=1e-3, hi=10.0):
    mags = np.logspace(np.log10(lo), np.log10(hi), n)
    return np.concatenate([-mags[::-1], mags])


def check_convexity(system, pair, states, lam_grid=None, margin=1e-12):
    """Smallest Hessian eigenvalue over ``states``; passes when it exceeds ``margin``.

    With ``lam_grid`` (systems registering a ``lambda`` family only) the
    report also carries the sub-range of the grid for which
    ``I - lam A(u)`` stays positive definite at every state.
    """
    states, skipped = _admissible_only(system, states)
    H = pair_hessian(pair, states)
    mins = np.linalg.eigvalsh(H)[..., 0]
    details = {"min_eigenvalue": float(np.min(mins))}
    if lam_grid is not None:
        if "lambda" not in system.pair_factories:
            raise ValueError(f"{system.id} has no lambda family")
        A = jacobian_eval(system, states, 0)
        ok = []
        for lam in lam_grid:
            e = np.linalg.eigvalsh(np.eye(system.N) - lam * A)[..., 0]
            ok.append(bool(np.min(e) > margin))
        ok = np.array(ok)
        grid = np.asarray(lam_grid, dtype=float)
        pos = grid[(grid > 0) & ok]
        neg = grid[(grid < 0) & ok]
        details["lambda_grid_size"] = int(grid.size)
        details["lambda_positive_max"] = float(pos.max()) if pos.size else None
        details["lambda_negative_min"] = float(neg.min()) if neg.size else None
        details["lambda_bound"] = float(1.0 / np.max(np.linalg.eigvalsh(A)))
    return make_report(f"convexity:{system.id}:{_pair_tag(pair)}", states, -mins, -margin,
                       skipped, details)


# -- homogeneity ----------------------------------------------------------

def _fit_degree(fn, states, scalings):
    """Least-squares degree of ``fn`` from log norm ratios."""
    ratios = []
    pairs = []
    for u in states:
        base = np.asarray(fn(u))
        nb = np.linalg.norm(base)
        if nb == 0:
            raise ZeroState(f"function vanishes at {u}; degree undefined")
        for lam in scalings:
            val = np.asarray(fn(lam * u))
            ratios.append(np.log(np.linalg.norm(val) / nb) / np.log(lam))
            pairs.append((u, lam, base, val))
    beta = float(np.mean(ratios))
    res = [np.max(np.abs(val - lam ** beta * base)) / np.max(np.abs(base))
           for u, lam, base, val in pairs]
    return beta, float(np.max(res))


def check_homogeneity(system, states, scalings=(0.5, 2.0, 10.0), pair=None,
                      expected=None, threshold=HOMOGENEITY_TOL):
    """Fit homogeneity degrees of fluxes (and of an entropy-variable map).

    ``expected`` may map any of ``"flux"``, ``"temporal"``, ``"eta"``,
    ``"entropy_vars"`` to a reference degree; deviations enter the residual.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if np.any(np.all(states == 0.0, axis=-1)):
        raise ZeroState("zero state has no homogeneity degree")
    expected = dict(expected or {})
    fitted = {}
    residual = 0.0
    resid_parts = {}
    if system.flux is not None:
        betas = []
        for j in range(system.d):
            b, r = _fit_degree(lambda w: system.flux(w, j), states, scalings)
            betas.append(b)
            residual = max(residual, r)
        fitted["flux"] = float(np.mean(betas))
        resid_parts["flux"] = residual
        if system.jacobian is not None:
            eul = 0.0
            for j in range(system.d):
                A = system.jacobian(states, j)
                f = system.flux(states, j)
                lhs = np.einsum("...ij,...j->...i", A, states)
                eul = max(eul, float(np.max(np.abs(lhs - fitted["flux"] * f)
                                            / np.max(np.abs(f), axis=-1, keepdims=True))))
            resid_parts["euler_identity"] = eul
            residual = max(residual, eul)
    if system.temporal is not None:
        b, r = _fit_degree(system.temporal, states, scalings)
        fitted["temporal"] = b
        resid_parts["temporal"] = r
        residual = max(residual, r)
    if pair is not None:
        b_eta, r_eta = _fit_degree(pair.eta, states, scalings)
        b_grad, r_grad = _fit_degree(pair.grad, states, scalings)
        fitted["eta"] = b_eta
        fitted["grad_eta"] = b_grad
        fitted["entropy_vars"] = 1.0 / b_grad
        residual = max(residual, r_eta, r_grad)
        resid_parts["eta"] = r_eta
        resid_parts["grad_eta"] = r_grad
        if pair.convexity == "strict":
            inv = 0.0
            kappa = fitted["entropy_vars"]
            for u in states:
                v = pair.grad(u)
                for mu in scalings:
                    w = from_entropy_vars(system, pair, mu * v, guess=mu ** kappa * u)
                    inv = max(inv, float(np.max(np.abs(w - mu ** kappa * u)) / np.max(np.abs(u))))
            resid_parts["inverse_map"] = inv
            residual = max(residual, inv)
    for key, ref in expected.items():
        dev = abs(fitted[key] - ref)
        resid_parts[f"expected_{key}"] = dev
        residual = max(residual, dev)
    rep = make_report(f"homogeneity:{system.id}" + (f":{_pair_tag(pair)}" if pair else ""),
                      states[:1], [residual], threshold,
                      details={"fitted": fitted, "residuals": resid_parts,
                               "scalings": list(map(float, scalings)),
                               "expected": expected})
    rep.states_tested = len(states)
    return rep


def euler_entropy_vars_degree(gamma, alpha):
    """Degree ``(alpha + gamma) / (1 - gamma)`` of ``u(v)`` for ``-(p rho^alpha)^(1/(alpha+gamma))``."""
    return (alpha + gamma) / (1.0 - gamma)
