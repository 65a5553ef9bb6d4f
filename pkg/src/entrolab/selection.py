"""Entropy-rate ranking of candidate weak solutions."""
from dataclasses import asdict, dataclass, field

import numpy as np

from .action import residual_density
from .dlm import shock_production, straight_path
from .errors import CandidatesDisagreeAtT, NonCompactWaveSupport, NotWeakSolution
from .fields import Discontinuity, Fan, sample_field
from .numerics import gauss_legendre, integrate
from .systems import jacobian_eval

TIE_BAND = 1e-9
AGREEMENT_TOL = 1e-10
AGREEMENT_POINTS = 65


@dataclass(frozen=True)
class Candidate:
    label: str
    field: object


@dataclass
class RankingReport:
    mode: str
    rates: dict
    ordering: list
    ties: list
    selected: list
    window: tuple
    time: float
    tie_band: float = TIE_BAND
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _bumps_active(fld, t):
    return [b for b in fld.bumps if b.box()[0] < t < b.box()[1]]


def _fan_rate(system, pair, fld, w, a, b, t):
    """Fan residual in self-similar form, ``int grad(eta)^T (A - xi) U'(xi) dxi``."""
    dt = t - fld.t0
    lo, hi = w.lo, w.hi
    if dt > 0:
        lo = max(lo, (a - fld.x0) / dt)
        hi = min(hi, (b - fld.x0) / dt)
    elif not a < fld.x0 < b:
        return 0.0
    if hi <= lo:
        return 0.0
    xi, wt = gauss_legendre(24, lo, hi)
    U = w.profile(xi)
    dU = w.dprofile(xi)
    flow = np.einsum("mik,mk->mi", jacobian_eval(system, U, 0), dU) - xi[:, None] * dU
    return float(wt @ np.einsum("mi,mi->m", pair.grad(U), flow))


def local_entropy_rate(system, pair, fld, t, a, b, path=None):
    """Instantaneous entropy rate of ``fld`` on ``(a, b)`` at time ``t``.

    Sum of the entropy productions of discontinuities inside ``(a, b)``
    plus the residual of smooth parts; for a self-similar field without
    active bumps the fans are integrated in the similarity variable, which
    also covers ``t`` equal to the apex time.
    """
    path = path or straight_path()
    rate = 0.0
    if fld.self_similar:
        for k, w in enumerate(fld.waves):
            if not isinstance(w, Discontinuity):
                continue
            X = fld.x0 + w.speed * (t - fld.t0)
            if not a < X < b:
                continue
            left = np.asarray(fld.states[k], float)
            right = np.asarray(fld.states[k + 1], float)
            for bmp in fld.bumps:
                du = bmp.evaluate(t, X)[0]
                left, right = left + du, right + du
            rate += shock_production(system, pair, w.speed, left, right, path=path).value
    if fld.self_similar and not _bumps_active(fld, t):
        rate += sum(_fan_rate(system, pair, fld, w, a, b, t)
                    for w in fld.waves if isinstance(w, Fan))
    else:
        breaks = []
        if fld.self_similar:
            for w in fld.waves:
                edges = [w.speed] if isinstance(w, Discontinuity) else [w.lo, w.hi]
                breaks += [fld.x0 + xi * (t - fld.t0) for xi in edges]
        for bmp in fld.bumps:
            breaks += [bmp.box()[2], bmp.center[1], bmp.box()[3]]
        val, _ = integrate(lambda x: residual_density(system, pair, fld, np.full_like(x, t), x),
                           a, b, breaks)
        rate += float(val)
    return float(rate)


def _check_agreement(candidates, t, a, b):
    xs = a + (np.arange(AGREEMENT_POINTS) + 0.5) / AGREEMENT_POINTS * (b - a)
    ref = sample_field(candidates[0].field, np.full_like(xs, t), xs, side=-1)
    for c in candidates[1:]:
        u = sample_field(c.field, np.full_like(xs, t), xs, side=-1)
        gap = float(np.max(np.abs(u - ref)))
        if gap > AGREEMENT_TOL:
            raise CandidatesDisagreeAtT(
                f"{c.label!r} differs from {candidates[0].label!r} by {gap:.3e} at t={t}")


def _check_weak(system, candidates, tol=1e-8):
    for c in candidates:
        for w in c.field.waves:
            if isinstance(w, Discontinuity) and w.rh_residual > tol:
                raise NotWeakSolution(
                    f"{c.label!r}: jump {w.label!r} has Rankine-Hugoniot residual {w.rh_residual:.3e}")


def _rank(mode, rates, labels, window, t, band, notes):
    order = sorted(range(len(labels)), key=lambda i: (rates[i], i))
    ordering = [labels[i] for i in order]
    ties, group = [], [order[0]]
    for i in order[1:]:
        if rates[i] - rates[group[0]] <= band:
            group.append(i)
        else:
            if len(group) > 1:
                ties.append([labels[j] for j in group])
            group = [i]
    if len(group) > 1:
        ties.append([labels[j] for j in group])
    best = rates[order[0]]
    selected = [labels[i] for i in order if rates[i] - best <= band]
    return RankingReport(mode, {labels[i]: float(rates[i]) for i in range(len(labels))},
                         ordering, ties, selected, window, float(t), band, notes)


def rank_local_maxent(system, pair, candidates, t, a, b, path=None, band=TIE_BAND,
                      check_weak=True):
    """Rank candidates by their local entropy rate on ``(a, b)``, ascending.

    Candidates must coincide on ``(a, b)`` at time ``t``; ties within
    ``band`` are reported and all tied labels are selected.
    """
    if not candidates:
        raise ValueError("no candidates to rank")
    labels = [c.label for c in candidates]
    if len(set(labels)) != len(labels):
        raise ValueError("candidate labels must be unique")
    if check_weak:
        _check_weak(system, candidates)
    _check_agreement(candidates, t, a, b)
    rates = [local_entropy_rate(system, pair, c.field, t, a, b, path) for c in candidates]
    notes = [f"history agreement sampled at {AGREEMENT_POINTS} points, tolerance {AGREEMENT_TOL:g}"]
    return _rank("local", rates, labels, (float(a), float(b)), t, band, notes)


def wave_hull(fld, t):
    """Smallest interval holding every wave and active bump of ``fld`` at ``t``."""
    if not fld.self_similar:
        raise NonCompactWaveSupport(f"{fld.label}: smooth field has no compact wave support")
    pts = []
    for w in fld.waves:
        edges = [w.speed] if isinstance(w, Discontinuity) else [w.lo, w.hi]
        pts += [fld.x0 + xi * (t - fld.t0) for xi in edges]
    for bmp in _bumps_active(fld, t):
        pts += [bmp.box()[2], bmp.box()[3]]
    return (min(pts), max(pts)) if pts else (fld.x0, fld.x0)


def rank_global(system, pair, candidates, t, path=None, margin=1.0, band=TIE_BAND,
                check_weak=True):
    """Rank over the hull of all waves, where boundary fluxes must cancel."""
    hulls = [wave_hull(c.field, t) for c in candidates]
    a = min(h[0] for h in hulls) - margin
    b = max(h[1] for h in hulls) + margin
    ref = candidates[0].field
    for c in candidates[1:]:
        for x in (a, b):
            gap = float(np.max(np.abs(sample_field(c.field, t, x, side=-1)
                                      - sample_field(ref, t, x, side=-1))))
            if gap > AGREEMENT_TOL:
                raise NonCompactWaveSupport(
                    f"{c.label!r} differs from {candidates[0].label!r} at x={x} by {gap:.3e}")
    rep = rank_local_maxent(system, pair, candidates, t, a, b, path, band, check_weak)
    rep.mode = "global"
    return rep
