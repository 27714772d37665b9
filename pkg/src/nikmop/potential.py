"""Panel quadrature engine for logarithmic potentials of 1-d densities.

A measure is carried by a Mesh: Gauss-Legendre panels in a parameter u with
a point map t(u).  All kernels are reduced exactly to sums of log|u - root|
factors through the map's polynomial structure, and each factor close to a
panel is integrated by product integration (exact Legendre log/Cauchy
moments), so evaluation error is the density interpolation error only.
"""

from __future__ import annotations

import mpmath as mp

from .numerics import PrecCtx, gauss_legendre

__all__ = ["Mesh", "SqrtMesh", "TailMesh", "NegSqrtMesh", "graded_breaks"]

_MARGIN = mp.mpf(2)  # product integration when |tau0| < 1 + margin


def graded_breaks(a, b, base_panels: int, levels: int, ratio, toward_b: bool = True,
                  toward_a: bool = False):
    """Breakpoints of [a, b]: `base_panels` even panels refined geometrically
    by `ratio` for `levels` levels toward the chosen endpoints."""
    a, b = mp.mpf(a), mp.mpf(b)
    ratio = mp.mpf(ratio)
    cuts = [a + (b - a) * k / base_panels for k in range(base_panels + 1)]
    if toward_b:
        w = (cuts[-1] - cuts[-2])
        extra = []
        for j in range(1, levels + 1):
            extra.append(b - w * ratio ** j)
        cuts = cuts[:-1] + extra + [b]
    if toward_a:
        w = (cuts[1] - cuts[0])
        extra = []
        for j in range(levels, 0, -1):
            extra.append(a + w * ratio ** j)
        cuts = [a] + extra + cuts[1:]
    return sorted(set(cuts))


def _legendre_at(tau, q):
    """P_0..P_{q-1} at tau."""
    vals = [mp.mpf(1)]
    if q > 1:
        vals.append(tau)
    for k in range(1, q - 1):
        vals.append(((2 * k + 1) * tau * vals[k] - k * vals[k - 1]) / (k + 1))
    return vals


def _cauchy_moments(tau0, q, real_pv: bool):
    """R_k = int P_k(tau)/(tau - tau0) dtau over [-1, 1], k = 0..q."""
    if real_pv:
        t0 = mp.mpf(tau0)
        if abs(1 - t0) < mp.mpf(2) ** (-mp.mp.prec + 16):
            t0 = 1 - mp.mpf(2) ** (-mp.mp.prec + 16)
        if abs(1 + t0) < mp.mpf(2) ** (-mp.mp.prec + 16):
            t0 = -1 + mp.mpf(2) ** (-mp.mp.prec + 16)
        r0 = mp.log(abs((1 - t0) / (1 + t0)))
    else:
        t0 = mp.mpc(tau0)
        r0 = mp.log(1 - t0) - mp.log(-1 - t0)
    R = [r0]
    if q >= 1:
        R.append(t0 * r0 + 2)
    for k in range(1, q):
        R.append(((2 * k + 1) * t0 * R[k] - k * R[k - 1]) / (k + 1))
    return t0, R


def _log_moments(tau0, q, real_abs: bool):
    """L_k = int P_k(tau) log|tau - tau0| dtau (real_abs) or the principal
    complex log moments, k = 0..q-1."""
    t0, R = _cauchy_moments(tau0, q, real_abs)
    if real_abs:
        l0 = (1 - t0) * mp.log(abs(1 - t0)) + (1 + t0) * mp.log(abs(1 + t0)) - 2
    else:
        l0 = (1 - t0) * mp.log(1 - t0) + (1 + t0) * mp.log(-1 - t0) - 2
    L = [l0]
    for k in range(1, q):
        L.append(-(R[k + 1] - R[k - 1]) / (2 * k + 1))
    return L


class _Panel:
    def __init__(self, ctx: PrecCtx, a, b, q: int, tmap):
        self.a, self.b = a, b
        self.h = (b - a) / 2
        self.c = (b + a) / 2
        taus, ws = gauss_legendre(q, ctx)
        self.taus = taus
        self.glw = ws
        self.q = q
        self.u = [self.c + self.h * t for t in taus]
        self.t = [tmap(u) for u in self.u]
        self.w_du = [self.h * w for w in ws]
        # Legendre values at the nodes, row k = P_k(tau_i) * (2k+1)/2 * glw_i
        self.legrows = []
        cols = [_legendre_at(t, q) for t in taus]
        for k in range(q):
            self.legrows.append([
                mp.mpf(2 * k + 1) / 2 * ws[i] * cols[i][k] for i in range(q)
            ])
        # exact barycentric weights 1/prod(tau_i - tau_j)
        self.bary = []
        for i in range(q):
            b = mp.mpf(1)
            for j in range(q):
                if j != i:
                    b /= (taus[i] - taus[j])
            self.bary.append(b)

    def log_weights(self, u0):
        """Node weights for int_panel f(u) log|u - u0| du, exact for
        polynomial f of degree < q."""
        tau0 = (u0 - self.c) / self.h
        real = mp.im(tau0) == 0
        if real:
            tau0 = mp.re(tau0)
        L = _log_moments(tau0, self.q, real)
        if not real:
            L = [mp.re(v) for v in L]
        logh = mp.log(self.h)
        out = []
        for i in range(self.q):
            s = mp.mpf(0)
            for k in range(self.q):
                s += self.legrows[k][i] * L[k]
            out.append(self.h * (self.glw[i] * logh + s))
        return out

    def log_weights_complex(self, u0):
        """Node weights for int_panel f(u) log(u - u0) du, principal branch,
        for u0 off the real axis; exact for polynomial f of degree < q."""
        tau0 = (u0 - self.c) / self.h
        L = _log_moments(tau0, self.q, real_abs=False)
        logh = mp.log(self.h)
        out = []
        for i in range(self.q):
            s = mp.mpc(0)
            for k in range(self.q):
                s += self.legrows[k][i] * L[k]
            out.append(self.h * (self.glw[i] * logh + s))
        return out

    def cauchy_weights(self, u0, real_pv: bool):
        """Node weights for int_panel f(u)/(u - u0) du (principal value when
        u0 is real inside), exact for polynomial f of degree < q."""
        tau0 = (u0 - self.c) / self.h
        if real_pv:
            tau0 = mp.re(tau0)
        _, R = _cauchy_moments(tau0, self.q, real_pv)
        out = []
        for i in range(self.q):
            s = mp.mpf(0) if real_pv else mp.mpc(0)
            for k in range(self.q):
                s += self.legrows[k][i] * R[k]
            out.append(s)
        return out

    def near(self, u0):
        tau0 = (u0 - self.c) / self.h
        return abs(tau0) < 1 + _MARGIN


class Mesh:
    """Panels in u carrying a mass density rho (values at the nodes):
    measure = rho(u) du, points t = tmap(u)."""

    def __init__(self, ctx: PrecCtx, breaks, q: int):
        self.ctx = ctx
        with ctx.workprec(extra=32):
            self.panels = [
                _Panel(ctx, mp.mpf(a), mp.mpf(b), q, self.tmap)
                for a, b in zip(breaks[:-1], breaks[1:])
            ]
        self.q = q
        self.offsets = []
        off = 0
        for p in self.panels:
            self.offsets.append(off)
            off += p.q
        self.n = off
        self.nodes_u = [u for p in self.panels for u in p.u]
        self.nodes_t = [t for p in self.panels for t in p.t]
        self.w_du = [w for p in self.panels for w in p.w_du]

    # subclasses define the point map and the exact log-factorization
    def tmap(self, u):
        raise NotImplementedError

    def log_factors(self, z):
        """(roots, mults, const): log|z - tmap(u)| = sum mult*log|u - root| + const."""
        raise NotImplementedError

    def t_increasing(self) -> bool:
        raise NotImplementedError

    def log_row(self, z):
        """Weights W with int log|z - t(u)| rho(u) du ~= sum W_i rho_i."""
        with self.ctx.workprec(extra=32):
            roots, mults, const = self.log_factors(mp.mpc(z))
            W = [mp.mpf(0)] * self.n
            for ip, p in enumerate(self.panels):
                off = self.offsets[ip]
                direct = [mp.mpf(0)] * p.q
                for root, m in zip(roots, mults):
                    if p.near(root):
                        lw = p.log_weights(root)
                        for i in range(p.q):
                            W[off + i] += m * lw[i]
                    else:
                        for i in range(p.q):
                            direct[i] += m * mp.log(abs(p.u[i] - root))
                for i in range(p.q):
                    W[off + i] += p.w_du[i] * (direct[i] + const)
            return W

    def arg_row(self, z):
        """Weights for int arg(z - t(u)) rho(u) du; plain quadrature, valid
        for z well off the carrier (|Im z| not tiny)."""
        with self.ctx.workprec(extra=32):
            zz = mp.mpc(z)
            return [w * mp.arg(zz - t) for w, t in zip(self.w_du, self.nodes_t)]

    def log_row_complex(self, z):
        """Complex weights W with int log(z - t(u)) rho(u) du ~= sum W_i rho_i,
        principal branch; valid for Im z != 0 at any distance from the
        carrier.

        Branch-safe: t(u) is real, so Im(z - t(u)) = Im z has constant sign
        along every panel and the principal log of each exact factor is
        continuous there; the per-panel branch constant of the factorization
        is fixed at the middle node.
        """
        with self.ctx.workprec(extra=32):
            zz = mp.mpc(z)
            if mp.im(zz) == 0:
                raise ValueError("log_row_complex requires Im z != 0")
            roots, mults, _ = self.log_factors(zz)
            W = [mp.mpc(0)] * self.n
            for ip, p in enumerate(self.panels):
                off = self.offsets[ip]
                direct = [mp.mpc(0)] * p.q
                for root, m in zip(roots, mults):
                    if p.near(root):
                        # real roots touch only panel edges here, so the
                        # real-abs moments carry their full contribution
                        lw = (p.log_weights_complex(root) if mp.im(root) != 0
                              else p.log_weights(mp.re(root)))
                        for i in range(p.q):
                            W[off + i] += m * lw[i]
                    else:
                        for i in range(p.q):
                            direct[i] += m * mp.log(p.u[i] - root)
                # branch constant of the exact factorization on this panel
                mid = p.q // 2
                c = (mp.log(zz - p.t[mid])
                     - mp.fsum([m * mp.log(p.u[mid] - root)
                                for root, m in zip(roots, mults)]))
                for i in range(p.q):
                    W[off + i] += p.w_du[i] * (direct[i] + c)
            return W

    def mass_row(self):
        return list(self.w_du)

    def moment_row(self, fn):
        """Weights for int fn(t(u)) rho(u) du (plain quadrature)."""
        return [w * fn(t) for w, t in zip(self.w_du, self.nodes_t)]

    def integrate(self, rho):
        with self.ctx.workprec():
            return mp.fsum(w * r for w, r in zip(self.w_du, rho))

    # --- pointwise density machinery -------------------------------------

    def panel_of_u(self, u):
        for ip, p in enumerate(self.panels):
            if p.a <= u <= p.b:
                return ip
        if u < self.panels[0].a:
            return 0
        return len(self.panels) - 1

    def interp(self, rho, u):
        """Barycentric interpolation of the density at parameter u.

        Complex u is allowed (the per-panel interpolant is a polynomial and
        continues off the axis); the panel is selected by Re u.
        """
        with self.ctx.workprec(extra=16):
            uu = mp.mpc(u) if (isinstance(u, (complex, mp.mpc)) and mp.im(mp.mpc(u)) != 0) else mp.mpf(mp.re(mp.mpc(u)))
            ip = self.panel_of_u(mp.re(mp.mpc(uu)))
            p = self.panels[ip]
            off = self.offsets[ip]
            tau = (uu - p.c) / p.h
            num = mp.mpc(0) if isinstance(uu, mp.mpc) else mp.mpf(0)
            den = num
            for i in range(p.q):
                d = tau - p.taus[i]
                if abs(d) < mp.mpf(2) ** (-2 * self.ctx.bits):
                    return rho[off + i]
                w = p.bary[i] / d
                num += w * rho[off + i]
                den += w
            return num / den

    def integrate_upto(self, rho, u_hi):
        """int_{u <= u_hi} rho du via per-panel Legendre antiderivatives."""
        with self.ctx.workprec(extra=16):
            u_hi = mp.mpf(u_hi)
            total = mp.mpf(0)
            for ip, p in enumerate(self.panels):
                off = self.offsets[ip]
                if u_hi >= p.b:
                    total += mp.fsum(p.w_du[i] * rho[off + i] for i in range(p.q))
                    continue
                if u_hi <= p.a:
                    break
                tau1 = (u_hi - p.c) / p.h
                # Legendre coefficients of the interpolant
                coeffs = []
                for k in range(p.q):
                    coeffs.append(mp.fsum(p.legrows[k][i] * rho[off + i] for i in range(p.q)))
                # int_{-1}^{tau1} P_k = (P_{k+1}(tau1) - P_{k-1}(tau1))/(2k+1), P_{-1}=P_0 conv.
                Pv = _legendre_at(tau1, p.q + 2)
                acc = coeffs[0] * (tau1 + 1)
                for k in range(1, p.q):
                    acc += coeffs[k] * (Pv[k + 1] - Pv[k - 1]) / (2 * k + 1)
                total += p.h * acc
                break
            return total

    def mass_t_above(self, rho, x):
        """Mass of {t > x}; used for boundary imaginary parts of log kernels."""
        with self.ctx.workprec(extra=16):
            x = mp.mpf(x)
            u0 = self.param_of_t(x)
            total_mass = self.integrate(rho)
            if u0 is None:
                t_lo, t_hi = self.t_range()
                if x <= t_lo:
                    return total_mass
                return mp.mpf(0)
            below = self.integrate_upto(rho, u0)
            if self.t_increasing():
                return total_mass - below
            return below

    def param_of_t(self, x):
        raise NotImplementedError

    def t_range(self):
        ts = [self.tmap(self.panels[0].a), self.tmap(self.panels[-1].b)]
        return min(ts), max(ts)


class SqrtMesh(Mesh):
    """Carrier [0, Y^2] on the positive axis, parametrized by u = sqrt(t).

    Useful for densities with inverse-square-root or square-root endpoint
    behavior at t = 0: the mass density in u is smooth there.
    """

    def tmap(self, u):
        return u * u

    def t_increasing(self):
        return True

    def log_factors(self, z):
        r = mp.sqrt(mp.mpc(z))
        return [r, -r], [1, 1], mp.mpf(0)

    def param_of_t(self, x):
        if x < 0:
            return None
        u = mp.sqrt(mp.mpf(x))
        if u > self.panels[-1].b:
            return None
        return u


class NegSqrtMesh(Mesh):
    """Carrier [-(U^2), 0] on the negative axis, u = sqrt(-t), t = -u^2."""

    def tmap(self, u):
        return -u * u

    def t_increasing(self):
        return False

    def log_factors(self, z):
        # z - t = z + u^2 = (u - i sqrt(z))(u + i sqrt(z))
        r = mp.mpc(0, 1) * mp.sqrt(mp.mpc(z))
        return [r, -r], [1, 1], mp.mpf(0)

    def param_of_t(self, x):
        if x > 0:
            return None
        u = mp.sqrt(-mp.mpf(x))
        if u > self.panels[-1].b:
            return None
        return u


class TailMesh(Mesh):
    """Carrier (-inf, p-], parametrized by r in (0, 1]:

        t(r) = p- - (1 - r^2)^2 / r^2

    r -> 1 is the finite endpoint p- (quadratically), r -> 0 is -infinity.
    Composition of the s-compactification of the tail with s = 1 - r^2; the
    extra square root makes the far-tail mass density in r smooth.
    """

    def __init__(self, ctx: PrecCtx, breaks, q: int, p_minus):
        self.p_minus = p_minus
        super().__init__(ctx, breaks, q)

    def tmap(self, r):
        return self.p_minus - (1 - r * r) ** 2 / (r * r)

    def t_increasing(self):
        return True

    def log_factors(self, z):
        # z - t(r) = [ (z - p-) r^2 + (1-r^2)^2 ] / r^2, a monic quartic over r^2
        c = mp.sqrt(self.p_minus - mp.mpc(z))
        s = mp.sqrt(c * c + 4)
        roots = [(-c + s) / 2, (-c - s) / 2, (c + s) / 2, (c - s) / 2]
        return roots + [mp.mpf(0)], [1, 1, 1, 1, -2], mp.mpf(0)

    def param_of_t(self, x):
        x = mp.mpf(x)
        if x > self.p_minus:
            return None
        c = mp.sqrt(self.p_minus - x)
        return (-c + mp.sqrt(c * c + 4)) / 2

    def t_range(self):
        return mp.mpf("-inf"), self.p_minus
