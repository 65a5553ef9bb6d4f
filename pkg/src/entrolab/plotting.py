"""Figures written next to CLI reports (matplotlib, Agg backend)."""
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fields import Discontinuity, sample_field  # noqa: E402

DPI = 120
# fixed metadata keeps PNG bytes reproducible across runs
_META = {"Software": None}


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=DPI, metadata=_META)
    plt.close(fig)
    return path


def check_residuals(reports, out_dir, name="check_residuals.png"):
    """Bar chart of log10 residuals against their thresholds."""
    rows = [r for r in reports if r.threshold > 0]
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(rows) + 1.5))
    y = np.arange(len(rows))
    res = [np.log10(max(r.max_residual, 1e-18)) for r in rows]
    thr = [np.log10(r.threshold) for r in rows]
    colors = ["tab:green" if r.passed else "tab:red" for r in rows]
    ax.barh(y, np.array(res) + 18, left=-18, color=colors)
    ax.scatter(thr, y, marker="|", s=200, color="k", label="threshold")
    ax.set_yticks(y, [r.check_id for r in rows], fontsize=7)
    ax.set_xlabel("log10 max residual")
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def field_profile(fld, t, a, b, out_dir, name="riemann_profile.png", n=801):
    """Components of ``u(t, .)`` on ``[a, b]``."""
    x = np.linspace(a, b, n)
    u = sample_field(fld, np.full_like(x, t), x, side=-1)
    fig, axes = plt.subplots(u.shape[-1], 1, figsize=(6, 1.8 * u.shape[-1]), sharex=True)
    for k, ax in enumerate(np.atleast_1d(axes)):
        ax.plot(x, u[:, k], lw=1.2)
        ax.set_ylabel(f"u[{k}]")
    np.atleast_1d(axes)[-1].set_xlabel("x")
    fig.suptitle(f"{fld.label} at t={t:g}", fontsize=9)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def wave_diagram(fld, window, out_dir, name, extra_bumps=()):
    """Wave lines of a self-similar field in the x-t plane with the window."""
    fig, ax = plt.subplots(figsize=(5, 4))
    t = np.linspace(max(fld.t0, window.t1) if np.isfinite(fld.t0) else window.t1, window.t2, 2)
    if fld.self_similar:
        for w in fld.waves:
            if isinstance(w, Discontinuity):
                ax.plot(fld.x0 + w.speed * (t - fld.t0), t, "k-", lw=1.5)
            else:
                for xi in np.linspace(w.lo, w.hi, 6):
                    ax.plot(fld.x0 + xi * (t - fld.t0), t, color="tab:blue", lw=0.7)
    for bmp in tuple(fld.bumps) + tuple(extra_bumps):
        t_lo, t_hi, x_lo, x_hi = bmp.box()
        ax.add_patch(plt.Rectangle((x_lo, t_lo), x_hi - x_lo, t_hi - t_lo, fill=False,
                                   ls="--", color="tab:orange"))
    ax.add_patch(plt.Rectangle((window.a, window.t1), window.b - window.a,
                               window.t2 - window.t1, fill=False, color="gray"))
    ax.set_xlim(window.a - 0.1 * (window.b - window.a), window.b + 0.1 * (window.b - window.a))
    ax.set_ylim(window.t1, window.t2)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(fld.label, fontsize=9)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def variation_plot(report, out_dir, name="variation.png"):
    """``|Delta(eps)|`` against ``eps`` on log axes."""
    fig, ax = plt.subplots(figsize=(5, 4))
    eps = np.array(report.eps)
    d = np.maximum(np.abs(report.deltas), 1e-20)
    ax.loglog(eps, d, "o-")
    ax.axhline(report.details.get("zero_tol", 1e-8), color="gray", ls=":")
    ax.set_xlabel("eps")
    ax.set_ylabel("|Delta|")
    order = report.fitted_order
    ax.set_title(f"fitted order {order:.3f}" if order is not None else "identically small",
                 fontsize=9)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def ranking_plot(report, out_dir, name="compare_rates.png"):
    fig, ax = plt.subplots(figsize=(5, 3))
    labels = report.ordering
    vals = [report.rates[k] for k in labels]
    colors = ["tab:green" if k in report.selected else "tab:gray" for k in labels]
    ax.bar(labels, vals, color=colors)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("entropy rate")
    fig.tight_layout()
    return _save(fig, out_dir, name)


def paths_plot(paths, um, up, out_dir, name="paths.png"):
    """First two components of each path between ``u-`` and ``u+``."""
    s = np.linspace(0.0, 1.0, 201)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for p in paths:
        pts = p(s, np.asarray(um, float), np.asarray(up, float))
        if pts.shape[-1] == 1:
            ax.plot(s, pts[:, 0], label=p.id)
        else:
            ax.plot(pts[:, 0], pts[:, 1], label=p.id)
    ax.legend(fontsize=6)
    fig.tight_layout()
    return _save(fig, out_dir, name)
