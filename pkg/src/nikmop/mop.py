"""Type-II and type-I multiple orthogonal polynomials for the rescaled
sinh/cosh pair, their Cauchy transforms, the 3x3 Riemann-Hilbert solution
matrix, and the finite-n Christoffel-Darboux kernel (three routes).

All linear algebra on moments is exact rational; floats appear only when
polynomials and weights are evaluated at points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
from gmpy2 import mpq

from .numerics import (
    MonicPolynomial,
    PrecCtx,
    eval_poly_exact_coeffs,
    invert_exact,
    roots_all,
    solve_linear_exact,
    SingularMatrixError,
)
from .potential import _Panel
from .weights import eval_w, moment_exact

__all__ = [
    "NormalityError",
    "TypeIISolution",
    "TypeISolution",
    "RHMatrixY",
    "compute_Q",
    "compute_typeI",
    "cauchy_transform",
    "assemble_Y",
    "KernelEvaluator",
    "kernel_finite_n",
    "kernel_trace",
]


class NormalityError(RuntimeError):
    """A moment system that normality guarantees regular came out singular."""


@lru_cache(maxsize=None)
def _mom(j: int, k: int, nw: int):
    return moment_exact(j, k, nw)


# ---------------------------------------------------------------------------
# Exact polynomial solves

@lru_cache(maxsize=None)
def _typeII_coeffs(n1: int, n2: int, nw: int):
    """Monic type-II polynomial of degree n1+n2 for weights w_{j,nw}."""
    N = n1 + n2
    rows, rhs = [], []
    for j, deg in ((1, n1), (2, n2)):
        for k in range(deg):
            rows.append([_mom(j, k + i, nw) for i in range(N)])
            rhs.append(-_mom(j, k + N, nw))
    if N == 0:
        return (mpq(1),)
    try:
        sol = solve_linear_exact(rows, rhs)
    except SingularMatrixError as e:
        raise NormalityError(f"index ({n1},{n2}) produced a singular system") from e
    return tuple(sol) + (mpq(1),)


@lru_cache(maxsize=None)
def _typeI_coeffs(n1: int, n2: int, nw: int):
    """Type-I pair (A1, A2), deg A_j <= n_j - 1, with int x^k (A1 w1 + A2 w2)
    equal to 0 for k <= n1+n2-2 and 1 at k = n1+n2-1."""
    N = n1 + n2
    rows, rhs = [], []
    for k in range(N):
        row = [_mom(1, k + i, nw) for i in range(n1)] + \
              [_mom(2, k + i, nw) for i in range(n2)]
        rows.append(row)
        rhs.append(mpq(1) if k == N - 1 else mpq(0))
    try:
        sol = solve_linear_exact(rows, rhs)
    except SingularMatrixError as e:
        raise NormalityError(f"type-I index ({n1},{n2}) singular") from e
    return tuple(sol[:n1]), tuple(sol[n1:])


def _h_value(n1: int, n2: int, nw: int, j: int):
    """h = int Q_(n1,n2)(x) x^{n_j} w_{j,nw}(x) dx, exact."""
    coeffs = _typeII_coeffs(n1, n2, nw)
    nj = n1 if j == 1 else n2
    return sum(c * _mom(j, nj + i, nw) for i, c in enumerate(coeffs))


@dataclass(frozen=True)
class TypeIISolution:
    n: int
    Q: MonicPolynomial
    zeros: tuple
    h: tuple            # (h_1, h_2) as floats
    h_exact: tuple      # exact rationals

    def to_json_dict(self):
        return {
            "n": self.n,
            "Q": self.Q.to_json(),
            "zeros": [mp.nstr(z, 30) for z in self.zeros],
            "h": [mp.nstr(v, 30) for v in self.h],
        }


@dataclass(frozen=True)
class TypeISolution:
    n: int
    A1: tuple
    A2: tuple

    def form(self, x, ctx: PrecCtx):
        """R(x) = A1(x) w_{1,n}(x) + A2(x) w_{2,n}(x)."""
        with ctx.workprec():
            a1 = eval_poly_exact_coeffs(self.A1, x, ctx) if self.A1 else mp.mpf(0)
            a2 = eval_poly_exact_coeffs(self.A2, x, ctx) if self.A2 else mp.mpf(0)
            return a1 * eval_w(1, self.n, x, ctx) + a2 * eval_w(2, self.n, x, ctx)


def compute_Q(n: int, ctx: PrecCtx = PrecCtx(256), index=None) -> TypeIISolution:
    """Exact type-II polynomial at the diagonal index (n, n) (or `index`),
    for the weights w_{j,n}; zeros refined at ctx precision."""
    if n < 1:
        raise ValueError("n must be >= 1")
    n1, n2 = index if index is not None else (n, n)
    coeffs = _typeII_coeffs(n1, n2, n)
    poly = MonicPolynomial(coeffs)
    roots = roots_all(list(coeffs), ctx)
    with ctx.workprec():
        zeros = tuple(mp.re(r) for r in roots)
        h_ex = (_h_value(n1, n2, n, 1), _h_value(n1, n2, n, 2))
        h = tuple(ctx.mpf(v) for v in h_ex)
    return TypeIISolution(n=n, Q=poly, zeros=zeros, h=h, h_exact=h_ex)


def compute_typeI(n: int, ctx: PrecCtx = PrecCtx(256), index=None) -> TypeISolution:
    """Exact type-I polynomials at the diagonal index (n, n) (or `index`)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    n1, n2 = index if index is not None else (n, n)
    A1, A2 = _typeI_coeffs(n1, n2, n)
    return TypeISolution(n=n, A1=A1, A2=A2)


def orthogonality_residuals(sol: TypeIISolution, index=None):
    """Exact rational residuals int x^k Q w_{j,n}, k < n_j; all must be 0."""
    n = sol.n
    n1, n2 = index if index is not None else (n, n)
    out = []
    for j, deg in ((1, n1), (2, n2)):
        for k in range(deg):
            out.append(sum(c * _mom(j, k + i, n) for i, c in enumerate(sol.Q.coeffs)))
    return out


# ---------------------------------------------------------------------------
# Cauchy transforms (second-kind functions)

def _transform_mesh(nw: int, ctx: PrecCtx, extra_logscale: float = 0.0):
    """Panels in u = sqrt(x) out to where exp(-pi n u) is below precision."""
    with ctx.workprec(extra=32):
        u_max = ((ctx.bits + 64) * mp.log(2) + 60 + extra_logscale) / (mp.pi * nw)
        # slightly irrational width so sqrt(x) of simple rational x never
        # lands exactly on a breakpoint (poles stay interior to panels);
        # narrow near u = 0 where the cosh/sinh poles at i(2k+1)/(2 nw) sit
        # closest to the axis and limit polynomial interpolation
        width = mp.log(mp.mpf("2.554")) / (2 * nw)
        brk = [mp.mpf(0)]
        while brk[-1] < u_max:
            w = max(width, brk[-1] / 3)
            brk.append(brk[-1] + w)
        return brk


_PANEL_CACHE: dict = {}


def _panels_for(nw: int, ctx: PrecCtx, degree: int):
    key = (nw, ctx.bits, degree // 8)
    if key not in _PANEL_CACHE:
        with ctx.workprec(extra=32):
            brk = _transform_mesh(nw, ctx, extra_logscale=8.0 * (degree // 8 + 1))
            q = 28
            _PANEL_CACHE[key] = [
                _Panel(ctx, a, b, q, lambda u: u * u)
                for a, b in zip(brk[:-1], brk[1:])
            ]
    return _PANEL_CACHE[key]


def cauchy_transform(sol_or_coeffs, j: int, nw: int, z, ctx: PrecCtx = PrecCtx(256),
                     side: int | None = None):
    """(1/2 pi i) int_0^inf Q(x) w_{j,nw}(x)/(x - z) dx.

    For x = Re z > 0 on the cut, pass side=+1/-1: principal value by product
    integration on the containing panel plus the half-residue (Plemelj).
    """
    coeffs = sol_or_coeffs.Q.coeffs if isinstance(sol_or_coeffs, TypeIISolution) else tuple(sol_or_coeffs)
    deg = len(coeffs) - 1
    with ctx.workprec(extra=64):
        zz = mp.mpc(z)
        panels = _panels_for(nw, ctx, deg)
        u_hi = panels[-1].b
        # beyond u_hi the weight is below working precision: no effective cut
        on_cut = mp.im(zz) == 0 and 0 < mp.re(zz) and mp.sqrt(mp.re(zz)) < u_hi + 2
        if on_cut and side is None:
            raise ValueError("boundary value on (0, inf) requires side=+1/-1")

        # integrand F(u)/(u^2 - z), F = Q(u^2) w(u^2) 2u (smooth at 0):
        # 1/(u^2 - z) = (1/(2 r)) [1/(u - r) - 1/(u + r)],  r = sqrt(z)
        r = mp.sqrt(zz)
        if on_cut:
            r = mp.sqrt(mp.re(zz))

        def F(u):
            qv = eval_poly_exact_coeffs(coeffs, u * u, ctx)
            if j == 1:
                return 2 * u * qv / mp.sinh(mp.pi * nw * u)
            return 2 * qv / mp.cosh(mp.pi * nw * u)

        total = mp.mpc(0)
        for p in panels:
            Fv = [F(u) for u in p.u]
            # far pole -r: always distant from [0, inf)
            tau_m = (-r - p.c) / p.h
            if abs(tau_m) < 3:
                wm = p.cauchy_weights(-r, real_pv=False)
                sm = mp.fsum(w * f for w, f in zip(wm, Fv))
            else:
                sm = mp.fsum(p.w_du[i] * Fv[i] / (p.u[i] + r) for i in range(p.q))
            tau_p = (r - p.c) / p.h
            if abs(tau_p) < 3:
                wp = p.cauchy_weights(r, real_pv=on_cut)
                sp = mp.fsum(w * f for w, f in zip(wp, Fv))
            else:
                sp = mp.fsum(p.w_du[i] * Fv[i] / (p.u[i] - r) for i in range(p.q))
            total += (sp - sm) / (2 * r)
        val = total / (2 * mp.pi * mp.mpc(0, 1))
        if on_cut:
            x = mp.re(zz)
            qv = eval_poly_exact_coeffs(coeffs, x, ctx)
            val += side * qv * eval_w(j, nw, x, ctx) / 2
    with ctx.workprec():
        return +val


# ---------------------------------------------------------------------------
# The Riemann-Hilbert solution matrix

@dataclass(frozen=True)
class RHMatrixY:
    n: int
    ctx: PrecCtx
    top: TypeIISolution
    left: TypeIISolution     # index (n-1, n)
    right: TypeIISolution    # index (n, n-1)
    d: tuple                 # (d_1, d_2), purely imaginary constants

    def __call__(self, z, side: int | None = None):
        ctx = self.ctx
        with ctx.workprec():
            rows = []
            for solP, dj, idx in (
                (self.top, mp.mpf(1), (self.n, self.n)),
                (self.left, self.d[0], (self.n - 1, self.n)),
                (self.right, self.d[1], (self.n, self.n - 1)),
            ):
                pv = eval_poly_exact_coeffs(solP.Q.coeffs, z, ctx)
                c1 = cauchy_transform(solP, 1, self.n, z, ctx, side)
                c2 = cauchy_transform(solP, 2, self.n, z, ctx, side)
                rows.append([dj * pv, dj * c1, dj * c2])
            return mp.matrix(rows)

    def det(self, z, side: int | None = None):
        with self.ctx.workprec():
            return mp.det(self.__call__(z, side))


def assemble_Y(n: int, ctx: PrecCtx = PrecCtx(256)) -> RHMatrixY:
    """Y(z) from the type-II solutions at (n,n), (n-1,n), (n,n-1) and the
    normalization constants 1/d_j = (-1/(2 pi i)) int x^{n-1} Q_{e_j-down} w_j."""
    if n < 1:
        raise ValueError("n must be >= 1")
    top = compute_Q(n, ctx)
    left = compute_Q(n, ctx, index=(n - 1, n))
    right = compute_Q(n, ctx, index=(n, n - 1))
    with ctx.workprec():
        i1 = sum(c * _mom(1, n - 1 + i, n) for i, c in enumerate(left.Q.coeffs))
        i2 = sum(c * _mom(2, n - 1 + i, n) for i, c in enumerate(right.Q.coeffs))
        # 1/d_j = -I_j/(2 pi i)  =>  d_j = 2 pi i / (-I_j)
        d1 = 2 * mp.pi * mp.mpc(0, 1) / (-ctx.mpf(i1))
        d2 = 2 * mp.pi * mp.mpc(0, 1) / (-ctx.mpf(i2))
    return RHMatrixY(n=n, ctx=ctx, top=top, left=left, right=right, d=(d1, d2))


# ---------------------------------------------------------------------------
# Christoffel-Darboux kernel, three routes

class KernelEvaluator:
    """K_n(x, y) for the 2n-point ensemble with weights w_{j,n}.

    The biorthogonal-sum route inverts the exact 2n x 2n cross-moment matrix
    once; evaluation then factors as w_1(y) S_1(x,y) + w_2(y) S_2(x,y) with
    S_j exact-rational bivariate polynomials (regular on the diagonal).
    """

    def __init__(self, n: int, ctx: PrecCtx = PrecCtx(256)):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.ctx = ctx
        N = 2 * n
        A = []
        for i in range(1, N + 1):
            A.append([_mom(1, (i - 1) + k, n) for k in range(n)]
                     + [_mom(2, (i - 1) + k, n) for k in range(n)])
        try:
            self.Ainv = invert_exact(A)
        except SingularMatrixError as e:
            raise NormalityError("cross-moment matrix singular") from e
        # S_m[k][i]: coefficient of x^i y^k in S_m
        self.S = [
            [[self.Ainv[m * n + k][i] for i in range(N)] for k in range(n)]
            for m in (0, 1)
        ]

    def _eval_S(self, m, x, y):
        ctx = self.ctx
        acc = None
        for k in range(self.n - 1, -1, -1):
            inner = eval_poly_exact_coeffs(self.S[m][k], x, ctx)
            acc = inner if acc is None else acc * y + inner
        return acc

    def at(self, x, y):
        """K_n(x, y); x, y > 0 (rationals stay exact until the weights)."""
        ctx = self.ctx
        with ctx.workprec(extra=64):
            if mp.re(mp.mpc(x)) <= 0 or mp.re(mp.mpc(y)) <= 0:
                raise ValueError("kernel arguments must be positive")
            xx, yy = mp.mpf(x), mp.mpf(y)
            s1 = self._eval_S(0, xx, yy)
            s2 = self._eval_S(1, xx, yy)
            val = (eval_w(1, self.n, yy, ctx) * s1
                   + eval_w(2, self.n, yy, ctx) * s2)
        with ctx.workprec():
            return mp.re(+val)

    def diag(self, x):
        return self.at(x, x)


_KERNEL_CACHE: dict = {}


def kernel_evaluator(n: int, ctx: PrecCtx = PrecCtx(256)) -> KernelEvaluator:
    key = (n, ctx.bits)
    if key not in _KERNEL_CACHE:
        _KERNEL_CACHE[key] = KernelEvaluator(n, ctx)
    return _KERNEL_CACHE[key]


def kernel_cd(n: int, x, y, ctx: PrecCtx = PrecCtx(256)):
    """CD-formula route: (x-y) K_n(x,y) = Q(x) R(y) - sum_j (h_j/h_j^-)
    Q_{-e_j}(x) R_{+e_j}(y)."""
    with ctx.workprec(extra=64):
        xx, yy = mp.mpf(x), mp.mpf(y)
        if xx == yy:
            raise ValueError("CD route needs x != y (use the biorthogonal route on the diagonal)")
        top = compute_Q(n, ctx)
        r_nn = compute_typeI(n, ctx)
        total = (eval_poly_exact_coeffs(top.Q.coeffs, xx, ctx) * r_nn.form(yy, ctx))
        for j, down, up in ((1, (n - 1, n), (n + 1, n)), (2, (n, n - 1), (n, n + 1))):
            h_num = _h_value(n, n, n, j)
            h_den = _h_value(*down, n, j)
            q_down = compute_Q(n, ctx, index=down)
            r_up = compute_typeI(n, ctx, index=up)
            total -= ctx.mpf(h_num / h_den) * \
                eval_poly_exact_coeffs(q_down.Q.coeffs, xx, ctx) * r_up.form(yy, ctx)
        val = total / (xx - yy)
    with ctx.workprec():
        return mp.re(+val)


def kernel_rh(Y: RHMatrixY, x, y, Yx=None, Yy_inv=None):
    """Riemann-Hilbert route: K_n(x,y) = (0, w1(y), w2(y)) Y_+(y)^{-1} Y_+(x) e_1
    / (2 pi i (x - y)).

    The product cancels from entry-cube scale down to the kernel, so the
    route wants the extra working precision of a doubled context for larger
    n (the evaluators accept precomputed boundary matrices for grid reuse).
    """
    ctx = Y.ctx
    with ctx.workprec(extra=32):
        xx, yy = mp.mpf(x), mp.mpf(y)
        if Yx is None:
            Yx = Y(xx, side=+1)
        if Yy_inv is None:
            Yy_inv = Y(yy, side=+1) ** -1
        w = mp.matrix([[0, eval_w(1, Y.n, yy, ctx), eval_w(2, Y.n, yy, ctx)]])
        col = (Yy_inv * Yx)[:, 0]
        val = (w * col)[0, 0] / (2 * mp.pi * mp.mpc(0, 1) * (xx - yy))
    with ctx.workprec():
        return mp.re(+val)


def kernel_finite_n(n: int, x, y, ctx: PrecCtx = PrecCtx(256), route: str = "biorth"):
    """K_n(x,y) for x, y in (0, inf); `route` one of biorth|cd|rh."""
    if route == "biorth":
        return kernel_evaluator(n, ctx).at(x, y)
    if route == "cd":
        return kernel_cd(n, x, y, ctx)
    if route == "rh":
        return kernel_rh(assemble_Y(n, ctx), x, y)
    raise ValueError("route must be biorth, cd or rh")


def kernel_trace(n: int, ctx: PrecCtx = PrecCtx(256)):
    """int_0^inf K_n(x,x) dx by quadrature (trace of the rank-2n projection)."""
    ev = kernel_evaluator(n, ctx)
    with ctx.workprec(extra=64):
        panels = _panels_for(n, ctx, 4 * n)
        total = mp.mpf(0)
        for p in panels:
            for u, w in zip(p.u, p.w_du):
                total += w * 2 * u * ev.diag(u * u)
    with ctx.workprec():
        return +total
