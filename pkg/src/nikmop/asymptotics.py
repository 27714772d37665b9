"""Limit laws: global parametrix, outer and band asymptotics of the
polynomials, kernel density limit and bulk (sine-kernel) universality, with
convergence-rate measurement over doubling n.

The parametrix branch bookkeeping rides on the curve module's continuation:
the square root of D(zeta) = zeta(zeta^2+zeta-1) is tracked along the same
walk that labels the branches, one tracker per sheet, so every entry of the
model matrix carries the branch prescribed by the construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .curve import BranchWalker, _route, branch_points, eval_H
from .equilibrium import EquilibriumSolution, GFunctions
from .mop import TypeIISolution, kernel_evaluator
from .numerics import PrecCtx, eval_poly_exact_coeffs

__all__ = [
    "GlobalParametrix",
    "build_parametrix",
    "ConvergenceReport",
    "outer_asymptotics",
    "band_asymptotics",
    "band_prediction",
    "density_limit",
    "sine_kernel_limit",
    "nth_root_check",
    "band_branch_values",
]

def _dpoly(t):
    return t * (t * t + t - 1)


def _aux_specs():
    """Square-root trackers for D(zeta_j(z)), seeded at the large-|z| anchor:
    sheet 1 near zeta=1 (positive root), sheet 2 on (0, q+) (in -i R_+),
    sheet 3 on (q-, 0) (negative root)."""
    return [
        (0, lambda tri: mp.sqrt(_dpoly(tri[0])), _dpoly),
        (1, lambda tri: -mp.mpc(0, 1) * mp.sqrt(-_dpoly(tri[1])), _dpoly),
        (2, lambda tri: -mp.sqrt(_dpoly(tri[2])), _dpoly),
    ]


class GlobalParametrix:
    """The outer model matrix N(z) and its ingredients."""

    def __init__(self, ctx: PrecCtx):
        self.ctx = ctx
        self.bp = branch_points(ctx)

    # -- branch machinery ---------------------------------------------------

    def _walk_to(self, z):
        with self.ctx.workprec(extra=16):
            w = BranchWalker(self.ctx, aux=_aux_specs())
            w.seed_at_anchor(mp.mpc(z))
            w.goto_via(_route(mp.mpc(z), self.ctx))
            return w.triple, w.aux_vals

    def branch_data(self, z):
        """(zeta_1..3, D^(1/2)(zeta_1..3)) at z, labels by continuation."""
        return self._walk_to(z)

    # -- scalar ingredients ---------------------------------------------------

    @staticmethod
    def F(i: int, zeta, dhalf):
        """F_i(zeta) given the tracked branch value of D(zeta)^(1/2)."""
        k23 = mp.mpc(0, 1) * mp.mpf(2) ** (mp.mpf(-3) / 2)
        if i == 1:
            return zeta ** 2 / dhalf
        if i == 2:
            return k23 * zeta * (zeta - 1) / dhalf
        return k23 * (zeta * zeta - 1) / dhalf

    @staticmethod
    def r(j: int, zeta):
        """r_j with the main branches; continuous on the sheet regions."""
        if j == 1:
            return mp.sqrt(2 * zeta) / mp.sqrt(1 + zeta)
        if j == 2:
            return mp.sqrt(2 * zeta) / (4 * mp.sqrt(1 + zeta))
        if mp.im(zeta) == 0:
            x = mp.re(zeta)
            return mp.mpc(0, 1) / (mp.sqrt(2 * abs(x)) * mp.sqrt(1 - x))
        s = -1 if mp.im(zeta) > 0 else 1
        return s / (mp.sqrt(2 * zeta) * mp.sqrt(1 - zeta))

    def f(self, j: int, z):
        """f_j(z) = r_j(zeta_j(z))."""
        tri, _ = self._walk_to(z)
        return self.r(j, tri[j - 1])

    # -- matrices -------------------------------------------------------------

    def Nhat(self, z):
        with self.ctx.workprec(extra=16):
            tri, G = self._walk_to(z)
            M = mp.matrix(3, 3)
            for i in range(3):
                for jj in range(3):
                    M[i, jj] = self.F(i + 1, tri[jj], G[jj])
            return M

    def N(self, z):
        with self.ctx.workprec(extra=16):
            tri, G = self._walk_to(z)
            fs = [self.r(1, tri[0]), self.r(2, tri[1]), self.r(3, tri[2])]
            M = mp.matrix(3, 3)
            for i in range(3):
                for jj in range(3):
                    M[i, jj] = self.F(i + 1, tri[jj], G[jj]) / fs[jj]
            return M

    def __call__(self, z):
        return self.N(z)

    def boundary_N(self, x, side: int, richardson: bool = True):
        """N(x +- i eps) with eps = 2^(-bits/3), optionally Richardson
        extrapolated in eps."""
        ctx = self.ctx
        with ctx.workprec(extra=16):
            eps = mp.mpf(2) ** (-(ctx.bits // 3))
            z1 = mp.mpc(x, side * eps)
            N1 = self.N(z1)
            if not richardson:
                return N1
            N2 = self.N(mp.mpc(x, side * eps / 2))
            return 2 * N2 - N1

    def jump_residual_band(self, x):
        """|| N_+ - N_- J ||_max on (0, p+), J = [[0,4,0],[-1/4,0,0],[0,0,1]]."""
        with self.ctx.workprec(extra=16):
            J = mp.matrix([[0, 4, 0], [mp.mpf(-1) / 4, 0, 0], [0, 0, 1]])
            Np = self.boundary_N(x, +1)
            Nm = self.boundary_N(x, -1)
            R = Nm * J
            return max(abs(Np[i, j] - R[i, j]) for i in range(3) for j in range(3))

    def jump_residual_tail(self, x):
        """|| N_+ - N_- J ||_max on (-inf, p-), with x_+^(1/2) = i sqrt|x|."""
        with self.ctx.workprec(extra=16):
            xp = mp.mpc(0, 1) * mp.sqrt(abs(mp.mpf(x)))
            J = mp.matrix([[1, 0, 0], [0, 0, -1 / (2 * xp)], [0, 2 * xp, 0]])
            Np = self.boundary_N(x, +1)
            Nm = self.boundary_N(x, -1)
            R = Nm * J
            return max(abs(Np[i, j] - R[i, j]) for i in range(3) for j in range(3))

    def det_Nhat(self, z):
        with self.ctx.workprec(extra=16):
            return mp.det(self.Nhat(z))


def build_parametrix(ctx: PrecCtx = PrecCtx(256)) -> GlobalParametrix:
    return GlobalParametrix(ctx)


# ---------------------------------------------------------------------------
# Convergence bookkeeping

@dataclass
class ConvergenceReport:
    target: str                      # outer | band_two_term | density | sine_kernel
    samples: list = field(default_factory=list)   # (n, location, error)
    fitted_rate: object = None

    def add(self, n, location, error):
        if not error > 0:
            error = abs(error)
        self.samples.append((n, location, error))

    def fit_rate(self):
        """Log-log slope of error vs n (expect about -1)."""
        pts = {}
        for n, _, e in self.samples:
            pts.setdefault(n, []).append(e)
        ns = sorted(pts)
        if len(ns) < 2:
            return None
        xs = [mp.log(mp.mpf(n)) for n in ns]
        ys = [mp.log(max(pts[n])) for n in ns]
        xm = mp.fsum(xs) / len(xs)
        ym = mp.fsum(ys) / len(ys)
        num = mp.fsum((x - xm) * (y - ym) for x, y in zip(xs, ys))
        den = mp.fsum((x - xm) ** 2 for x in xs)
        self.fitted_rate = num / den
        return self.fitted_rate

    def to_rows(self):
        return [(self.target, n, str(loc), mp.nstr(e, 12)) for (n, loc, e) in self.samples]


# ---------------------------------------------------------------------------
# Outer asymptotics of Q_n

def outer_asymptotics(n: int, z, qsol: TypeIISolution, sol: EquilibriumSolution,
                      ctx: PrecCtx | None = None):
    """(prediction, actual, relative error) of Q_n(z) against
    exp(n g_1(z)) H(zeta_1(z)) away from [0, p+]."""
    ctx = PrecCtx.require_same(ctx, sol.ctx) if ctx else sol.ctx
    gf = GFunctions(sol)
    with ctx.workprec(extra=16):
        zz = mp.mpc(z)
        w = BranchWalker(ctx).seed_at_anchor(zz)
        w.goto_via(_route(zz, ctx))
        zeta1 = w.triple[0]
        g1 = gf.g(1, zz) if mp.im(zz) != 0 or mp.re(zz) > sol.p_plus \
            else gf.g(1, zz, side=+1)
        pred = mp.exp(n * g1) * eval_H(zeta1, ctx)
        actual = eval_poly_exact_coeffs(qsol.Q.coeffs, zz, ctx)
        relerr = abs(actual / pred - 1)
    with ctx.workprec():
        return +pred, +actual, +relerr


def nth_root_check(n: int, z, qsol: TypeIISolution, sol: EquilibriumSolution):
    """| (1/n) log|Q_n(z)| + P^{lambda_1}(z) |."""
    ctx = sol.ctx
    with ctx.workprec(extra=16):
        zz = mp.mpc(z)
        actual = eval_poly_exact_coeffs(qsol.Q.coeffs, zz, ctx)
        pot = sol.potential1(zz) if mp.im(zz) != 0 else sol.potential1(mp.re(zz))
        return +abs(mp.log(abs(actual)) / n + pot)


# ---------------------------------------------------------------------------
# Band (two-term) asymptotics

def band_branch_values(xs, sol: EquilibriumSolution, ctx: PrecCtx | None = None):
    """zeta_1 boundary values from above at the points xs of (0, p+),
    marching one continuation walker along the band."""
    ctx = PrecCtx.require_same(ctx, sol.ctx) if ctx else sol.ctx
    with ctx.workprec(extra=16):
        delta = mp.mpf(2) ** (-(ctx.bits // 3))
        out = []
        w = BranchWalker(ctx)
        z0 = mp.mpc(xs[0], delta)
        w.seed_at_anchor(z0)
        w.goto_via(_route(z0, ctx))
        out.append(w.triple[0])
        for x in xs[1:]:
            w.goto(mp.mpc(x, delta))
            out.append(w.triple[0])
        return out


def band_prediction(n: int, x, sol: EquilibriumSolution, zeta1_plus=None,
                    keep_upsilon_factor: bool = False):
    """Two-term band prediction at x in (0, p+):

        e^{n g_{1+}} H(zeta_{1+}) + e^{n g_{1-}} H(zeta_{1-}),

    real by conjugate symmetry.  With `keep_upsilon_factor` the second term
    carries the finite-n factor (1 - upsilon^{-4n}) from the unwound
    transformation chain (matters only near the hard edge)."""
    ctx = sol.ctx
    gf = GFunctions(sol)
    with ctx.workprec(extra=16):
        xx = mp.mpf(x)
        if zeta1_plus is None:
            zeta1_plus = band_branch_values([xx], sol, ctx)[0]
        g1p = gf.g(1, xx, side=+1)
        term_p = mp.exp(n * g1p) * eval_H(zeta1_plus, ctx)
        term_m = mp.conj(term_p)
        if keep_upsilon_factor:
            ups = mp.exp(mp.pi * mp.sqrt(xx))
            term_m = term_m * (1 - ups ** (-4 * n))
        return term_p + term_m, term_p


def band_asymptotics(n: int, x, qsol: TypeIISolution, sol: EquilibriumSolution,
                     zeta1_plus=None):
    """(prediction, actual, error scaled by the local amplitude)."""
    ctx = sol.ctx
    with ctx.workprec(extra=16):
        xx = mp.mpf(x)
        pred, term_p = band_prediction(n, xx, sol, zeta1_plus,
                                       keep_upsilon_factor=True)
        actual = eval_poly_exact_coeffs(qsol.Q.coeffs, xx, ctx)
        scale = 2 * abs(term_p)
        err = abs(actual - pred) / scale
    with ctx.workprec():
        return +mp.re(pred), +actual, +err


def band_sign_changes(n: int, a, b, sol: EquilibriumSolution, npts: int = 400):
    """Sign changes of the two-term prediction on [a, b] counted on a grid."""
    ctx = sol.ctx
    with ctx.workprec():
        xs = [a + (b - a) * mp.mpf(k) / (npts - 1) for k in range(npts)]
        zs = band_branch_values(xs, sol, ctx)
        gf = GFunctions(sol)
        vals = []
        for x, z1 in zip(xs, zs):
            g1p = gf.g(1, x, side=+1)
            vals.append(mp.re(mp.exp(n * g1p) * eval_H(z1, ctx)))
        count = 0
        for v0, v1 in zip(vals[:-1], vals[1:]):
            if v0 * v1 < 0:
                count += 1
        return count


# ---------------------------------------------------------------------------
# Kernel limits

def density_limit(n: int, x, sol: EquilibriumSolution, ctx: PrecCtx | None = None):
    """(K_n(x,x)/n, lambda_1'(x), relative error)."""
    ctx = PrecCtx.require_same(ctx, sol.ctx) if ctx else sol.ctx
    ev = kernel_evaluator(n, ctx)
    with ctx.workprec():
        kn = ev.diag(mp.mpf(x)) / n
        lp = sol.lambda1_prime(x)
        return +kn, +lp, +abs(kn / lp - 1)


def sine_kernel_limit(n: int, x_star, u, v, sol: EquilibriumSolution,
                      ctx: PrecCtx | None = None):
    """Bulk scaling limit against |sinc(u - v)|.

    The two-weight kernel is non-symmetric and is defined only up to the
    equivalence K -> f(x) K / f(y); the raw ratio K/(n rho) carries a
    nontrivial exponential gauge factor.  The gauge-invariant representative
    is the geometric mean sqrt(K(x,y) K(y,x)) (the object the correlation
    determinants see), which is what converges to the sine kernel in
    modulus.  Returns (scaled value, |sinc(u-v)|, abs error).
    """
    ctx = PrecCtx.require_same(ctx, sol.ctx) if ctx else sol.ctx
    ev = kernel_evaluator(n, ctx)
    with ctx.workprec():
        rho = sol.lambda1_prime(x_star)
        scale = n * rho
        xu = mp.mpf(x_star) + mp.mpf(u) / scale
        xv = mp.mpf(x_star) + mp.mpf(v) / scale
        if not (0 < xu < sol.p_plus and 0 < xv < sol.p_plus):
            raise ValueError("scaled arguments left (0, p+)")
        if xu == xv:
            val = ev.diag(xu) / scale
        else:
            val = mp.sqrt(abs(ev.at(xu, xv) * ev.at(xv, xu))) / scale
        d = mp.mpf(u) - mp.mpf(v)
        sinc = mp.mpf(1) if d == 0 else abs(mp.sin(mp.pi * d) / (mp.pi * d))
        return +val, +sinc, +abs(val - sinc)


def sine_kernel_raw_ratio(n: int, x_star, u, v, sol: EquilibriumSolution,
                          ctx: PrecCtx | None = None):
    """The literal ratio K_n(x_n, y_n)/(n rho); converges to the sine kernel
    times the gauge factor exp((u-v) P'/rho) only."""
    ctx = PrecCtx.require_same(ctx, sol.ctx) if ctx else sol.ctx
    ev = kernel_evaluator(n, ctx)
    with ctx.workprec():
        rho = sol.lambda1_prime(x_star)
        scale = n * rho
        xu = mp.mpf(x_star) + mp.mpf(u) / scale
        xv = mp.mpf(x_star) + mp.mpf(v) / scale
        return +(ev.at(xu, xv) / scale)
