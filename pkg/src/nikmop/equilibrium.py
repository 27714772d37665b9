"""Constrained vector equilibrium problem for the sinh/cosh Nikishin pair.

Minimizes the energy functional with interaction matrix [[2,-1],[-1,2]],
external field pi*sqrt(x) on the first component and the upper constraint
d(sigma) = dx/(2 sqrt|x|) on the second.  Supports are fixed a priori at
[0, p+] and (-infty, p-] (the constraint is active on [p-, 0]), which makes
the stationarity conditions linear in the densities: the solver is a
constrained linear least squares in the node values plus the constant omega.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import mpmath as mp

from .curve import branch_points
from .numerics import PrecCtx, lu_solve_mpfr
from .potential import NegSqrtMesh, SqrtMesh, TailMesh, graded_breaks

__all__ = [
    "ConvergenceError",
    "ConstraintError",
    "SideFlagRequired",
    "EquilibriumSolution",
    "GFunctions",
    "solve_equilibrium",
    "eval_g",
    "eval_psi",
    "eval_psi_hat",
    "verify_summaryG",
    "objective_J",
]


class ConvergenceError(RuntimeError):
    def __init__(self, msg, profile=None):
        super().__init__(msg)
        self.profile = profile or {}


class ConstraintError(ValueError):
    pass


class SideFlagRequired(ValueError):
    pass


def _mpf_to_mpfr(x):
    sign, man, exp, _ = mp.mpf(x)._mpf_
    v = gmpy2.mpfr(gmpy2.mpz(man))
    if exp:
        v = gmpy2.mul_2exp(v, exp) if exp > 0 else v / gmpy2.mpz(2) ** (-exp)
    return -v if sign else v


def _mpfr_to_mpf(x):
    m, e = x.as_mantissa_exp()
    return mp.ldexp(mp.mpf(int(m)), int(e))


@dataclass
class EquilibriumSolution:
    """Solved densities, omega, and the quadrature machinery to evaluate
    potentials and g-functions anywhere."""

    ctx: PrecCtx
    mesh1: SqrtMesh          # lambda_1 on [0, p+], parameter y = sqrt(x)
    rho1: list               # mass density in y
    mesh2: TailMesh          # lambda_2 tail on (-inf, p-], parameter r
    rho2: list               # mass density in r
    sigma_mesh: NegSqrtMesh  # constraint part of lambda_2 on [p-, 0]
    omega: object
    p_plus: object
    p_minus: object
    residual_report: dict = field(default_factory=dict)

    # -- masses -----------------------------------------------------------

    def mass1(self):
        return self.mesh1.integrate(self.rho1)

    def mass2(self):
        with self.ctx.workprec():
            b = mp.sqrt(-self.p_minus)
            return b + self.mesh2.integrate(self.rho2)

    # -- densities ---------------------------------------------------------

    def lambda1_prime(self, x):
        with self.ctx.workprec():
            x = mp.mpf(x)
            if not 0 < x < self.p_plus:
                return mp.mpf(0)
            y = mp.sqrt(x)
            return self.mesh1.interp(self.rho1, y) / (2 * y)

    def lambda2_prime(self, t):
        with self.ctx.workprec():
            t = mp.mpf(t)
            if t > 0:
                return mp.mpf(0)
            if t >= self.p_minus:
                return 1 / (2 * mp.sqrt(abs(t)))
            r = self.mesh2.param_of_t(t)
            dtdr = 2 * (1 - r * r) * (1 + r * r) / r ** 3
            return self.mesh2.interp(self.rho2, r) / dtdr

    def nu_prime(self, t):
        """Density of sigma - lambda_2 on (-inf, p-]."""
        with self.ctx.workprec():
            t = mp.mpf(t)
            if t > self.p_minus:
                return mp.mpf(0)
            return 1 / (2 * mp.sqrt(abs(t))) - self.lambda2_prime(t)

    def lambda1_cdf(self, x):
        """lambda_1([0, x])."""
        with self.ctx.workprec():
            x = mp.mpf(x)
            if x <= 0:
                return mp.mpf(0)
            return self.mesh1.integrate_upto(self.rho1, mp.sqrt(min(x, self.p_plus)))

    # -- spec-facing grids --------------------------------------------------

    def grid1(self):
        """(x nodes, d lambda_1 weights, lambda_1'(x) values) on [0, p+]."""
        with self.ctx.workprec():
            xs = [u * u for u in self.mesh1.nodes_u]
            wts = [w for w in self.mesh1.w_du]
            dens = [r / (2 * u) for r, u in zip(self.rho1, self.mesh1.nodes_u)]
            # weights carry the measure: sum w_j * rho_j = integral
            return xs, wts, dens

    def grid2(self):
        """(t nodes, dr weights, nu'(t) values) on (-inf, p-]."""
        with self.ctx.workprec():
            ts = list(self.mesh2.nodes_t)
            wts = list(self.mesh2.w_du)
            dens = [self.nu_prime(t) for t in ts]
            return ts, wts, dens

    # -- potentials ---------------------------------------------------------

    def potential1(self, x):
        """P^{lambda_1}(x) = -int log|x-t| d lambda_1."""
        with self.ctx.workprec():
            W = self.mesh1.log_row(x)
            return -mp.fsum(w * r for w, r in zip(W, self.rho1))

    def potential2(self, x):
        with self.ctx.workprec():
            Ws = self.sigma_mesh.log_row(x)
            W2 = self.mesh2.log_row(x)
            return -(mp.fsum(Ws) + mp.fsum(w * r for w, r in zip(W2, self.rho2)))


def _band_mesh(ctx, p_plus, q, base, lev_edge, lev_zero):
    with ctx.workprec():
        Y = mp.sqrt(p_plus)
        br = graded_breaks(0, Y, base, lev_edge, mp.mpf(1) / 4, toward_b=True, toward_a=False)
        br = sorted(set(br) | set(
            graded_breaks(0, br[1], 1, lev_zero, mp.mpf(1) / 4, toward_b=False, toward_a=True)
        ))
        return SqrtMesh(ctx, br, q)


def _tail_mesh(ctx, p_minus, q, base, lev_edge, lev_inf):
    with ctx.workprec():
        br = graded_breaks(0, 1, base, lev_edge, mp.mpf(1) / 4, toward_b=True, toward_a=False)
        br = sorted(set(br) | set(
            graded_breaks(0, br[1], 1, lev_inf, mp.mpf(1) / 4, toward_b=False, toward_a=True)
        ))
        return TailMesh(ctx, br, q, p_minus)


def _sigma_mesh(ctx, p_minus, q):
    with ctx.workprec():
        b = mp.sqrt(-p_minus)
        br = graded_breaks(0, b, 3, 2, mp.mpf(1) / 4, toward_b=True, toward_a=True)
        return NegSqrtMesh(ctx, br, q)


def solve_equilibrium(m1: int = 308, m2: int = 182, ctx: PrecCtx = PrecCtx(256),
                      residual_gate=None) -> EquilibriumSolution:
    """Solve the two-density equilibrium problem.

    m1, m2 control the number of collocation nodes on [0, p+] and on the
    compactified tail (-inf, p-].  Least squares in the density values with
    the two mass constraints enforced by Lagrange multipliers, followed by
    nonnegativity clipping and one re-solve if any value goes negative.

    The mass density of lambda_1 in the y = sqrt(x) parameter diverges
    logarithmically at the hard edge 0 (the supports of lambda_1 and of the
    saturated constraint meet there), so the mesh is graded deep into 0.
    """
    if m1 < 32 or m2 < 32:
        raise ValueError("grid sizes must be >= 32")
    bp = branch_points(ctx)
    if m1 >= 280:
        q, lev_zero, lev_edge = 14, 10, 6
    else:
        q = max(6, min(14, m1 // 20))
        lev_zero = min(10, max(4, m1 // 30))
        lev_edge = min(6, max(4, m1 // 40))
    if residual_gate is None:
        residual_gate = mp.mpf("2e-8") if m1 >= 280 else mp.mpf("1e-4")
    with ctx.workprec(extra=32):
        mesh1 = _band_mesh(ctx, bp.p_plus, q,
                           base=max(3, m1 // q - lev_zero - lev_edge),
                           lev_edge=lev_edge, lev_zero=lev_zero)
        mesh2 = _tail_mesh(ctx, bp.p_minus, q,
                           base=max(3, m2 // q - 9), lev_edge=6, lev_inf=3)
        smesh = _sigma_mesh(ctx, bp.p_minus, q)
        n1, n2 = mesh1.n, mesh2.n

        rows, rhs = [], []
        # (a) band stationarity at the band nodes
        for i, x in enumerate(mesh1.nodes_t):
            W1 = mesh1.log_row(x)
            W2 = mesh2.log_row(x)
            s = mp.sqrt(mesh1.w_du[i])
            row = [-2 * w * s for w in W1] + [w * s for w in W2] + [-s]
            rows.append(row)
            rhs.append(s * (-mp.pi * mp.sqrt(x) - mp.fsum(smesh.log_row(x))))
        # (b) tail stationarity at the tail nodes
        for i, t in enumerate(mesh2.nodes_t):
            W1 = mesh1.log_row(t)
            W2 = mesh2.log_row(t)
            s = mp.sqrt(mesh2.w_du[i])
            row = [w * s for w in W1] + [-2 * w * s for w in W2] + [mp.mpf(0)]
            rows.append(row)
            rhs.append(s * (2 * mp.fsum(smesh.log_row(t))))
        # mass constraints
        b_sigma = mp.sqrt(-bp.p_minus)
        c1 = mesh1.mass_row() + [mp.mpf(0)] * n2 + [mp.mpf(0)]
        c2 = [mp.mpf(0)] * n1 + mesh2.mass_row() + [mp.mpf(0)]
        d1, d2 = mp.mpf(2), 1 - b_sigma

        x_vals = _solve_kkt(rows, rhs, [c1, c2], [d1, d2], ctx)

        # nonnegativity: lambda_1' >= 0 and 0 <= lambda_2' <= sigma'
        fixed = {}
        for j in range(n1):
            if x_vals[j] < 0:
                fixed[j] = mp.mpf(0)
        for j in range(n2):
            v = x_vals[n1 + j]
            if v < 0:
                fixed[n1 + j] = mp.mpf(0)
        if fixed:
            x_vals = _solve_kkt(rows, rhs, [c1, c2], [d1, d2], ctx, fixed=fixed)

        rho1 = x_vals[:n1]
        rho2 = x_vals[n1:n1 + n2]
        omega = x_vals[n1 + n2]

        sol = EquilibriumSolution(
            ctx=ctx, mesh1=mesh1, rho1=rho1, mesh2=mesh2, rho2=rho2,
            sigma_mesh=smesh, omega=+omega, p_plus=bp.p_plus, p_minus=bp.p_minus,
        )
        sol.residual_report = _residuals(sol)
        if sol.residual_report["band_sup_mid"] > residual_gate:
            raise ConvergenceError(
                "equilibrium residual above tolerance", sol.residual_report
            )
    return sol


def _solve_kkt(rows, rhs, cons, cond, ctx, fixed=None):
    """Constrained least squares via the KKT system, in gmpy2.mpfr."""
    fixed = fixed or {}
    N = len(rows[0])
    keep = [j for j in range(N) if j not in fixed]
    prec = ctx.bits + 64
    with gmpy2.context(precision=prec):
        A = [[_mpf_to_mpfr(r[j]) for j in keep] for r in rows]
        b = []
        for i, r in enumerate(rows):
            corr = mp.fsum(r[j] * fixed[j] for j in fixed) if fixed else mp.mpf(0)
            b.append(_mpf_to_mpfr(rhs[i] - corr))
        C = [[_mpf_to_mpfr(c[j]) for j in keep] for c in cons]
        d = []
        for c, dv in zip(cons, cond):
            corr = mp.fsum(c[j] * fixed[j] for j in fixed) if fixed else mp.mpf(0)
            d.append(_mpf_to_mpfr(dv - corr))
        n = len(keep)
        m = len(cons)
        # normal matrix
        K = [[gmpy2.mpfr(0)] * (n + m) for _ in range(n + m)]
        r0 = [gmpy2.mpfr(0)] * (n + m)
        for i in range(n):
            Ai = [row[i] for row in A]
            for j in range(i, n):
                acc = gmpy2.mpfr(0)
                for k in range(len(A)):
                    acc += Ai[k] * A[k][j]
                K[i][j] = acc
                K[j][i] = acc
            acc = gmpy2.mpfr(0)
            for k in range(len(A)):
                acc += Ai[k] * b[k]
            r0[i] = acc
        for i in range(m):
            for j in range(n):
                K[n + i][j] = C[i][j]
                K[j][n + i] = C[i][j]
            r0[n + i] = d[i]
        sol = lu_solve_mpfr(K, r0, prec)
    out_keep = [_mpfr_to_mpf(v) for v in sol[:n]]
    out = []
    it = iter(out_keep)
    for j in range(N):
        out.append(fixed[j] if j in fixed else next(it))
    return out


def _residuals(sol: EquilibriumSolution):
    """Residual profile of both stationarity equations, at the collocation
    nodes and at fresh midpoints."""
    ctx = sol.ctx
    with ctx.workprec():
        def eq_band(x):
            return (2 * sol.potential1(x) - sol.potential2(x)
                    + mp.pi * mp.sqrt(x) - sol.omega)

        def eq_tail(t):
            return 2 * sol.potential2(t) - sol.potential1(t)

        band_nodes = [abs(eq_band(x)) for x in sol.mesh1.nodes_t]
        tail_nodes = [abs(eq_tail(t)) for t in sol.mesh2.nodes_t]
        band_mid, tail_mid = [], []
        fracs = (mp.mpf(1) / 4, mp.mpf(1) / 2, mp.mpf(3) / 4)
        for p in sol.mesh1.panels:
            for f in fracs:
                band_mid.append(abs(eq_band(sol.mesh1.tmap(p.a + (p.b - p.a) * f))))
        for p in sol.mesh2.panels:
            for f in fracs:
                tail_mid.append(abs(eq_tail(sol.mesh2.tmap(p.a + (p.b - p.a) * f))))
        report = {
            "band_sup_nodes": max(band_nodes),
            "tail_sup_nodes": max(tail_nodes),
            "band_sup_mid": max(band_mid),
            "tail_sup_mid": max(tail_mid),
            "mass1_err": abs(sol.mass1() - 2),
            "mass2_err": abs(sol.mass2() - 1),
            "gamma2_flag": "threshold of the second condition identified with 0",
        }
        return report


# ---------------------------------------------------------------------------
# g-functions

class GFunctions:
    """Evaluators for g_1, g_2 and the potentials on a solved problem."""

    def __init__(self, sol: EquilibriumSolution):
        self.sol = sol
        self.ctx = sol.ctx

    def _im_cutoff(self):
        return mp.mpf(2) ** (-(self.ctx.bits // 3))

    def g(self, j: int, z, side: int | None = None):
        """g_j(z) = int log(z - t) d lambda_j, principal branch off
        (-inf, p+] (j=1) resp. (-inf, 0] (j=2).  On the cut pass side=+1/-1
        for the boundary value."""
        sol = self.sol
        ctx = self.ctx
        if j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        with ctx.workprec():
            zz = mp.mpc(z)
            x, yim = mp.re(zz), mp.im(zz)
            cut_hi = sol.p_plus if j == 1 else mp.mpf(0)
            on_cut = abs(yim) <= self._im_cutoff() and x <= cut_hi
            if on_cut:
                if side is None and yim == 0:
                    raise SideFlagRequired(
                        "boundary value on the cut requires side=+1 or side=-1"
                    )
                sgn = side if side is not None else (1 if yim > 0 else -1)
                re = -self._pot(j, x)
                im = mp.pi * self._mass_above(j, x) * sgn
                return mp.mpc(re, im)
            if yim == 0:
                # real z to the right of the cut: all of the measure lies
                # below z, the principal logs are real
                return mp.mpc(-self._pot(j, x), 0)
            return self._complex(j, zz)

    def _pot(self, j, z):
        sol = self.sol
        if j == 1:
            W = sol.mesh1.log_row(z)
            return -mp.fsum(w * r for w, r in zip(W, sol.rho1))
        Ws = sol.sigma_mesh.log_row(z)
        W2 = sol.mesh2.log_row(z)
        return -(mp.fsum(Ws) + mp.fsum(w * r for w, r in zip(W2, sol.rho2)))

    def _mass_above(self, j, x):
        sol = self.sol
        if j == 1:
            return sol.mesh1.mass_t_above(sol.rho1, x)
        ones = [mp.mpf(1)] * sol.sigma_mesh.n
        return (sol.sigma_mesh.mass_t_above(ones, x)
                + sol.mesh2.mass_t_above(sol.rho2, x))

    def _complex(self, j, z):
        """g_j at Im z != 0: branch-safe complex log rows at any distance
        from the carrier."""
        sol = self.sol
        if j == 1:
            W = sol.mesh1.log_row_complex(z)
            return mp.fsum(w * r for w, r in zip(W, sol.rho1))
        Ws = sol.sigma_mesh.log_row_complex(z)
        W2 = sol.mesh2.log_row_complex(z)
        return mp.fsum(Ws) + mp.fsum(w * r for w, r in zip(W2, sol.rho2))

    def potential(self, j: int, x):
        return self.sol.potential1(x) if j == 1 else self.sol.potential2(x)


def eval_g(j: int, z, sol: EquilibriumSolution, side: int | None = None):
    return GFunctions(sol).g(j, z, side)


def lambda1_prime_continued(z, sol: EquilibriumSolution):
    """Analytic continuation of lambda_1' off (0, p+) through the per-panel
    interpolant of the mass density in y = sqrt(x)."""
    with sol.ctx.workprec():
        y = mp.sqrt(mp.mpc(z))
        return sol.mesh1.interp(sol.rho1, y) / (2 * y)


def eval_psi(z, sol: EquilibriumSolution, side: int | None = None,
             determination: str = "auto"):
    """psi(z) = -2 pi i * integral of lambda_1 from z to p+.

    Boundary values on (0, p+] take a side flag (psi_+ = -2 pi i
    lambda_1((x, p+])).  Near the band (|Im z| small) the density is
    continued analytically and integrated along a vertical segment
    ("integral" determination); elsewhere psi is the continuation branch
    pi sqrt(z) - 2 g_1 + g_2 - omega ("identity" determination, a mod-2-pi-i
    representative: exact for exp(psi)).  `determination` forces one route.
    """
    ctx = sol.ctx
    with ctx.workprec():
        zz = mp.mpc(z)
        x, yim = mp.re(zz), mp.im(zz)
        gf = GFunctions(sol)
        if abs(yim) <= mp.mpf(2) ** (-(ctx.bits // 3)) and x <= sol.p_plus:
            if side is None and yim == 0:
                raise SideFlagRequired("psi on the cut requires side=+1 or side=-1")
            sgn = side if side is not None else (1 if yim > 0 else -1)
            mass = sol.mesh1.mass_t_above(sol.rho1, x) if x > 0 else mp.mpf(2)
            return mp.mpc(0, -2 * mp.pi * mass * sgn)
        if determination not in ("auto", "integral", "identity"):
            raise ValueError("determination must be auto, integral or identity")
        near_band = (abs(yim) <= mp.mpf("0.45")
                     and mp.mpf("0.02") * sol.p_plus < x < mp.mpf("0.98") * sol.p_plus)
        if determination == "integral" or (determination == "auto" and near_band):
            if not near_band:
                raise ValueError("integral determination holds near (0, p+) only")
            # psi' = side * 2 pi i lambda_1' on the respective band component
            # (psi_+- = -+(g_{1+} - g_{1-}) have opposite orientations)
            sgn = 1 if yim > 0 else -1
            psi0 = mp.mpc(0, -2 * mp.pi * sol.mesh1.mass_t_above(sol.rho1, x) * sgn)
            from .numerics import gauss_legendre

            taus, ws = gauss_legendre(24, ctx)
            seg = zz - x
            acc = mp.mpc(0)
            for t, w in zip(taus, ws):
                s = (1 + t) / 2
                acc += w / 2 * lambda1_prime_continued(x + s * seg, sol)
            return psi0 + sgn * 2 * mp.pi * mp.mpc(0, 1) * seg * acc
        g1 = gf.g(1, zz)
        g2 = gf.g(2, zz)
        return mp.pi * mp.sqrt(zz) - 2 * g1 + g2 - sol.omega


def eval_psi_hat(z, sol: EquilibriumSolution, side: int | None = None):
    """psi-hat = -2 pi i * (sigma - lambda_2)((x, p-]) boundary values on
    (-inf, p-)."""
    ctx = sol.ctx
    with ctx.workprec():
        zz = mp.mpc(z)
        x, yim = mp.re(zz), mp.im(zz)
        if abs(yim) > mp.mpf(2) ** (-(ctx.bits // 3)) or x > sol.p_minus:
            raise ValueError("psi-hat is evaluated on (-inf, p-] boundary values")
        if side is None and yim == 0:
            raise SideFlagRequired("psi-hat on the cut requires side=+1 or side=-1")
        sgn = side if side is not None else (1 if yim > 0 else -1)
        b = mp.sqrt(-sol.p_minus)
        nu_mass = (mp.sqrt(abs(x)) - b) - sol.mesh2.mass_t_above(sol.rho2, x)
        return mp.mpc(0, -2 * mp.pi * nu_mass * sgn)


# ---------------------------------------------------------------------------
# Verification of the g-function identities

def verify_summaryG(sol: EquilibriumSolution, n_upsilon: int = 1):
    """Numeric check of the five verifiable g-function properties.

    Returns a report dict of named residuals/margins; all residuals should
    be small, all margins strictly positive.
    """
    ctx = sol.ctx
    gf = GFunctions(sol)
    with ctx.workprec():
        pp, pm = sol.p_plus, sol.p_minus
        rep = {}

        def upsilon_log(x):
            return mp.pi * mp.sqrt(mp.mpc(x))

        # (i): g1+ + g1- - g2 + omega = log(upsilon) on [0,p+], < on x > p+
        res = []
        for x in [pp / 11, 1, 5, 10, pp * mp.mpf("0.99")]:
            g1p = gf.g(1, x, side=+1)
            g1m = gf.g(1, x, side=-1)
            g2 = gf.g(2, x)
            res.append(abs(g1p + g1m - g2 + sol.omega - upsilon_log(x)))
        rep["i_equality_residual"] = max(res)
        marg = []
        for x in [pp + 1, pp + 5, 3 * pp]:
            g1 = gf.g(1, x)
            g2 = gf.g(2, x)
            marg.append(mp.re(upsilon_log(x) - (2 * g1 - g2 + sol.omega)))
        rep["i_inequality_margin"] = min(marg)

        # (ii): g2+ + g2- - g1 = 0 (mod 2 pi i) for x < p-, > 0 on (p-,0]
        res = []
        for x in [2 * pm, 5 * pm, 50 * pm]:
            g2p = gf.g(2, x, side=+1)
            g2m = gf.g(2, x, side=-1)
            g1 = gf.g(1, x, side=+1)
            val = g2p + g2m - g1
            res.append(abs(mp.exp(val) - 1))
        rep["ii_equality_residual"] = max(res)
        marg = []
        for x in [pm / 2, pm / 4, pm * mp.mpf("0.9")]:
            g2p = gf.g(2, x, side=+1)
            g2m = gf.g(2, x, side=-1)
            g1 = gf.g(1, x, side=+1)
            marg.append(mp.re(g2p + g2m - g1))
        rep["ii_inequality_margin"] = min(marg)

        # (iii): g2+ - g2- = 2 log(upsilon_+) = 2 pi i sqrt(|x|) on [p-, 0]
        res = []
        for x in [pm / 2, pm * mp.mpf("0.3"), pm * mp.mpf("0.8")]:
            g2p = gf.g(2, x, side=+1)
            g2m = gf.g(2, x, side=-1)
            res.append(abs(mp.exp(g2p - g2m) - mp.exp(2j * mp.pi * mp.sqrt(abs(x)))))
        rep["iii_residual"] = max(res)

        # (v): d/dy Re(2 g2 - g1 - 2 pi sqrt(z)) at x + i0 = 2 pi (lambda_2' - sigma')
        res = []
        for x in [pm * 3, pm * 20]:
            h = mp.mpf(2) ** (-(ctx.bits // 8))

            def f(yy):
                zz = mp.mpc(x, yy)
                return mp.re(2 * gf.g(2, zz) - gf.g(1, zz) - 2 * mp.pi * mp.sqrt(zz))

            f0 = mp.re(2 * gf.g(2, x, side=+1) - gf.g(1, x, side=+1))
            der = (-3 * f0 + 4 * f(h / 2) - f(h)) / h
            rhs = 2 * mp.pi * (sol.lambda2_prime(x) - 1 / (2 * mp.sqrt(abs(x))))
            res.append(abs(der - rhs) / max(1, abs(rhs)))
        rep["v_normal_derivative_relerr"] = max(res)
        rep["v_sign_ok"] = all(
            2 * mp.pi * (sol.lambda2_prime(x) - 1 / (2 * mp.sqrt(abs(x)))) < 0
            for x in [pm * 2, pm * 10]
        )

        # (vi): |exp(2 g2 - g1) upsilon^{-2}| > 1 in the thin strip over (p-, 0)
        marg = []
        for x in [pm * mp.mpf("0.7"), pm * mp.mpf("0.3")]:
            for yy in [mp.mpf("1e-3"), mp.mpf("1e-2")]:
                z = mp.mpc(x, yy)
                val = mp.re(2 * gf.g(2, z) - gf.g(1, z) - 2 * mp.pi * mp.sqrt(z))
                marg.append(val)
        rep["vi_strip_margin"] = min(marg)
        return rep


# ---------------------------------------------------------------------------
# The energy functional

def objective_J(rho1, rho2, sol: EquilibriumSolution, mass_tol=mp.mpf("1e-6"),
                kernel_shift=0):
    """Discretized J_phi of a candidate pair given by node values on the
    solution's own grids.  Candidates must respect the masses (2, 1) and the
    constraint 0 <= lambda_2' <= sigma'.

    `kernel_shift` adds a constant c to the log kernel log(1/|x-y|) (scaling
    every distance by e^{-c}); by kernel additivity this shifts J by exactly
    c * (2 m1^2 + 2 m2^2 - 2 m1 m2) = 6c at the masses (2, 1).
    """
    ctx = sol.ctx
    with ctx.workprec():
        m1 = sol.mesh1.integrate(rho1)
        m2 = mp.sqrt(-sol.p_minus) + sol.mesh2.integrate(rho2)
        if abs(m1 - 2) > mass_tol or abs(m2 - 1) > mass_tol:
            raise ConstraintError(f"masses ({mp.nstr(m1,8)}, {mp.nstr(m2,8)}) != (2, 1)")
        if any(v < -mass_tol for v in rho1):
            raise ConstraintError("lambda_1 density negative")
        if any(v < -mass_tol for v in rho2):
            raise ConstraintError("constraint sigma - lambda_2 violated (lambda_2' < 0)")

        mats = _log_matrices(sol)

        def energy_pair(key, rhoA, rhoB):
            # I(A,B) = -int [int log|x-t| dB(t)] dA(x)
            M = mats[key]
            total = mp.mpf(0)
            for i, ra in enumerate(rhoA):
                row = M[i]
                total += ra * mp.fsum(row[j] * rb for j, rb in enumerate(rhoB))
            return -total

        ones = [mp.mpf(1)] * sol.sigma_mesh.n
        I11 = energy_pair("11", rho1, rho1)
        I22 = (energy_pair("22", rho2, rho2)
               + 2 * energy_pair("2s", rho2, ones)
               + energy_pair("ss", ones, ones))
        I12 = (energy_pair("12", rho1, rho2)
               + energy_pair("1s", rho1, ones))
        phi_term = mp.fsum(
            w * r * mp.pi * mp.sqrt(x)
            for x, w, r in zip(sol.mesh1.nodes_t, sol.mesh1.w_du, rho1)
        )
        val = 2 * I11 + 2 * I22 - 2 * I12 + 2 * phi_term
        if kernel_shift:
            c = mp.mpf(kernel_shift)
            val += c * (2 * m1 ** 2 + 2 * m2 ** 2 - 2 * m1 * m2)
        return val


def _log_matrices(sol: EquilibriumSolution):
    """Cached kernel matrices M_AB[i][j] = wA_i * (log-row of mesh B at the
    i-th node of mesh A)_j, so that int int log|x-t| dB dA = rhoA.M.rhoB."""
    cache = getattr(sol, "_logmats", None)
    if cache is not None:
        return cache
    meshes = {"1": (sol.mesh1,), "2": (sol.mesh2,), "s": (sol.sigma_mesh,)}
    mats = {}
    with sol.ctx.workprec():
        for ka, kb in ("11", "22", "ss", "2s", "12", "1s"):
            A = meshes[ka][0]
            B = meshes[kb][0]
            M = []
            for x, w in zip(A.nodes_t, A.w_du):
                M.append([w * v for v in B.log_row(x)])
            mats[ka + kb] = M
    sol._logmats = mats
    return mats
