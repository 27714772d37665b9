"""Delimited output and figure rendering for the CLI report paths.

CSV: UTF-8, header row, '.' decimal, full-precision decimal strings.
JSON: rationals as "p/q" strings, floats as decimal strings plus an explicit
precision field.  Figures are SVG (matplotlib, Agg) with no embedded
timestamps so identical configs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "nikmop"  # deterministic element ids

import matplotlib.pyplot as plt
import mpmath as mp
from gmpy2 import mpq

from .numerics import PrecCtx, rat_str

__all__ = [
    "fmt_num",
    "jsonable",
    "write_csv",
    "write_json",
    "density_figure",
    "loglog_error_figure",
    "kernel_overlay_figure",
    "zero_histogram_figure",
]


def fmt_num(x, dps: int = 40) -> str:
    if isinstance(x, mpq):
        return rat_str(x)
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, mp.mpc) or (hasattr(x, "imag") and getattr(x, "imag", 0) != 0):
        z = mp.mpc(x)
        return f"{mp.nstr(mp.re(z), dps)}{'+' if mp.im(z) >= 0 else '-'}{mp.nstr(abs(mp.im(z)), dps)}j"
    return mp.nstr(mp.mpf(x), dps, strip_zeros=True)


def jsonable(x, dps: int = 40):
    if isinstance(x, dict):
        return {k: jsonable(v, dps) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v, dps) for v in x]
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    return fmt_num(x, dps)


def write_csv(path, header, rows, dps: int = 40):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_num(v, dps) for v in row])


def write_json(path, obj, ctx: PrecCtx | None = None, dps: int = 40):
    payload = jsonable(obj, dps)
    if isinstance(payload, dict) and ctx is not None:
        payload.setdefault("precision_bits", ctx.bits)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def density_figure(sol, path):
    """lambda_1' over the band and lambda_2' over a negative log grid."""
    with sol.ctx.workprec():
        xs = [float(sol.p_plus) * (k + 0.5) / 240 for k in range(240)]
        l1 = [float(sol.lambda1_prime(x)) for x in xs]
        ts = [-(10 ** (-2 + 4 * k / 200)) for k in range(200)]
        l2 = [float(sol.lambda2_prime(t)) for t in ts]
        sig = [1 / (2 * abs(t) ** 0.5) for t in ts]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(xs, l1, lw=1.2)
    ax1.set_xlabel("x")
    ax1.set_ylabel(r"$\lambda_1'(x)$")
    ax1.set_title("band density")
    ax2.plot([abs(t) for t in ts], l2, lw=1.2, label=r"$\lambda_2'$")
    ax2.plot([abs(t) for t in ts], sig, lw=0.8, ls="--", label=r"$\sigma'$")
    ax2.set_xscale("log")
    ax2.set_yscale("log")
    ax2.set_xlabel("|x| (x < 0)")
    ax2.legend(frameon=False)
    ax2.set_title("constrained density")
    fig.tight_layout()
    _save(fig, path)


def loglog_error_figure(reports, path):
    """Error vs n on log-log axes, one line per convergence target."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for rep in reports:
        pts = {}
        for n, _, e in rep.samples:
            pts.setdefault(n, []).append(float(e))
        ns = sorted(pts)
        ax.plot(ns, [max(pts[n]) for n in ns], "o-", lw=1.0, ms=3.5, label=rep.target)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def kernel_overlay_figure(rows, path, n=None, x_star=None):
    """Scaled kernel against |sinc| from (u-v, scaled, sinc) rows."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    dv = [float(r[0]) for r in rows]
    ax.plot(dv, [float(r[1]) for r in rows], "o", ms=3.5, label="scaled kernel")
    ax.plot(dv, [float(r[2]) for r in rows], "-", lw=1.0, label=r"$|\mathrm{sinc}|$")
    ax.set_xlabel("u - v")
    title = "bulk scaling"
    if n is not None:
        title += f" (n = {n}, x* = {x_star})"
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def zero_histogram_figure(zeros, sol, path, n=None):
    """Zero histogram of Q_n against the limit density lambda_1'/2."""
    with sol.ctx.workprec():
        xs = [float(sol.p_plus) * (k + 0.5) / 240 for k in range(240)]
        lim = [float(sol.lambda1_prime(x)) / 2 for x in xs]
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.hist([float(z) for z in zeros], bins=24, density=True, alpha=0.55,
            label="zeros")
    ax.plot(xs, lim, lw=1.2, label=r"$\lambda_1'/2$")
    ax.set_xlabel("x")
    if n is not None:
        ax.set_title(f"zero distribution, n = {n}")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
