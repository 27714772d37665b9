"""Precision-managed arithmetic kernel.

Exact rationals (gmpy2.mpq), Bernoulli/Euler numbers, zeta/beta rational
factors, arbitrary-precision Gauss-Legendre rules, exact linear solving and
simultaneous (Aberth) polynomial root finding.  Everything float-valued is
mpmath under an explicit PrecCtx; everything moment-valued is an exact
rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import mpmath as mp
from gmpy2 import mpq

__all__ = [
    "PrecCtx",
    "PrecisionMismatch",
    "SingularMatrixError",
    "RootConvergenceError",
    "QQ",
    "rat_str",
    "parse_rat",
    "bernoulli",
    "euler_number",
    "zeta_even",
    "beta_odd",
    "gauss_legendre",
    "solve_linear_exact",
    "MonicPolynomial",
    "roots_all",
    "eval_poly_exact_coeffs",
    "lu_solve_mpfr",
]

QQ = mpq  # exact rational carrier


class PrecisionMismatch(ValueError):
    """Two values built under different precision contexts were combined."""


class SingularMatrixError(ValueError):
    def __init__(self, rank):
        super().__init__(f"matrix is singular (rank {rank})")
        self.rank = rank


class RootConvergenceError(RuntimeError):
    def __init__(self, worst_residual):
        super().__init__(f"root iteration did not converge, worst residual {worst_residual}")
        self.worst_residual = worst_residual


@dataclass(frozen=True)
class PrecCtx:
    """Binary working precision for all floating evaluations."""

    bits: int = 256

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("precision must be at least 64 bits")

    def workprec(self, extra: int = 0):
        return mp.workprec(self.bits + extra)

    @property
    def eps(self):
        with self.workprec():
            return +mp.mpf(2) ** (-self.bits)

    @property
    def dps(self) -> int:
        return int(self.bits * 0.30103) + 1

    def mpf(self, x):
        with self.workprec():
            if isinstance(x, mpq):
                return mp.mpf(x.numerator) / mp.mpf(x.denominator)
            return +mp.mpf(x)

    def mpc(self, re, im=0):
        with self.workprec():
            return mp.mpc(self.mpf(re), self.mpf(im))

    def to_float(self, q):
        """Exact rational (or number) -> mpf at this precision."""
        return self.mpf(q)

    def double(self) -> "PrecCtx":
        return PrecCtx(2 * self.bits)

    @staticmethod
    def require_same(*ctxs: "PrecCtx") -> "PrecCtx":
        first = ctxs[0]
        for c in ctxs[1:]:
            if c.bits != first.bits:
                raise PrecisionMismatch(
                    f"mixed precision contexts: {first.bits} and {c.bits} bits"
                )
        return first


def rat_str(q) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def parse_rat(s: str):
    if "/" in s:
        num, den = s.split("/")
        return mpq(int(num), int(den))
    return mpq(int(s))


# ---------------------------------------------------------------------------
# Bernoulli / Euler numbers and the rational parts of zeta(2m), beta(2m+1)

_BERN_EVEN = [mpq(1)]  # B_0, B_2, B_4, ...
_EULER_EVEN = [mpq(1)]  # E_0, E_2, E_4, ...


def bernoulli(m: int):
    """Bernoulli number B_m for even m >= 2, as an exact rational."""
    if m < 2 or m % 2:
        raise ValueError("bernoulli requires even m >= 2")
    k = m // 2
    while len(_BERN_EVEN) <= k:
        j = len(_BERN_EVEN)
        n = 2 * j
        # binomial recurrence, odd B's vanish except B_1 = -1/2
        s = mpq(n + 1, 1) * mpq(-1, 2)
        for i in range(j):
            s += gmpy2.bincoef(n + 1, 2 * i) * _BERN_EVEN[i]
        _BERN_EVEN.append(-s / (n + 1))
    return _BERN_EVEN[k]


def euler_number(m: int):
    """Euler number E_m for even m >= 0 (E_0 = 1), as an exact rational."""
    if m < 0 or m % 2:
        raise ValueError("euler_number requires even m >= 0")
    k = m // 2
    while len(_EULER_EVEN) <= k:
        j = len(_EULER_EVEN)
        s = mpq(0)
        for i in range(j):
            s += gmpy2.bincoef(2 * j, 2 * i) * _EULER_EVEN[i]
        _EULER_EVEN.append(-s)
    return _EULER_EVEN[k]


def zeta_even(s: int):
    """zeta(s)/pi^s as an exact rational, for even s >= 2."""
    if s < 2 or s % 2:
        raise ValueError("zeta_even requires even s >= 2")
    m = s // 2
    return mpq((-1) ** (m + 1)) * bernoulli(s) * mpq(2 ** (s - 1)) / mpq(math.factorial(s))


def beta_odd(s: int):
    """Dirichlet beta(s)/pi^s as an exact rational, for odd s >= 1."""
    if s < 1 or s % 2 == 0:
        raise ValueError("beta_odd requires odd s >= 1")
    m = (s - 1) // 2
    return mpq((-1) ** m) * euler_number(2 * m) / (mpq(4) ** (m + 1) * math.factorial(2 * m))


# ---------------------------------------------------------------------------
# Gauss-Legendre rules

_GL_CACHE: dict[tuple[int, int], tuple[list, list]] = {}


def gauss_legendre(npts: int, ctx: PrecCtx):
    """Nodes and weights of the npts-point Gauss-Legendre rule on [-1, 1]."""
    if npts < 1:
        raise ValueError("npts must be >= 1")
    key = (npts, ctx.bits)
    if key in _GL_CACHE:
        return _GL_CACHE[key]
    with ctx.workprec(extra=32):
        n = npts
        if n == 1:
            pairs = [(mp.mpf(0), mp.mpf(2))]
        else:
            def leg_and_deriv(x):
                p0, p1 = mp.mpf(1), x
                for j in range(2, n + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                return p1, n * (x * p1 - p0) / (x * x - 1)

            pairs = []
            for k in range(1, n // 2 + 1):
                x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (n + mp.mpf(1) / 2))
                for _ in range(100):
                    p, dp = leg_and_deriv(x)
                    dx = p / dp
                    x -= dx
                    if abs(dx) < mp.eps * 16 * max(1, abs(x)):
                        break
                _, dp = leg_and_deriv(x)
                w = 2 / ((1 - x * x) * dp * dp)
                pairs.append((-x, w))
                pairs.append((x, w))
            if n % 2:
                x = mp.mpf(0)
                _, dp = leg_and_deriv(x)
                pairs.append((x, 2 / (dp * dp)))
        pairs.sort(key=lambda p: p[0])
        xs = [+p[0] for p in pairs]
        ws = [+p[1] for p in pairs]
    _GL_CACHE[key] = (xs, ws)
    return xs, ws


# ---------------------------------------------------------------------------
# Exact rational linear algebra

def solve_linear_exact(rows, rhs):
    """Solve A x = b exactly over the rationals by pivoted elimination.

    `rows` is a list of lists, `rhs` a list; entries anything mpq() accepts.
    Raises SingularMatrixError with the rank found if A is singular.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    if len(rhs) != n:
        raise ValueError("rhs length must match")
    M = [[mpq(e) for e in row] + [mpq(rhs[i])] for i, row in enumerate(rows)]
    rank = 0
    for col in range(n):
        piv, pval = None, None
        for r in range(col, n):
            v = M[r][col]
            if v != 0 and (pval is None or abs(v) > abs(pval)):
                piv, pval = r, v
        if piv is None:
            raise SingularMatrixError(rank)
        M[col], M[piv] = M[piv], M[col]
        rank += 1
        prow = M[col]
        for r in range(col + 1, n):
            f = M[r][col] / pval
            if f == 0:
                continue
            row = M[r]
            for c in range(col, n + 1):
                row[c] -= f * prow[c]
    x = [mpq(0)] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n]
        for c in range(r + 1, n):
            s -= M[r][c] * x[c]
        x[r] = s / M[r][r]
    return x


def invert_exact(rows):
    """Exact inverse of a square rational matrix (Gauss-Jordan)."""
    n = len(rows)
    M = [[mpq(e) for e in row] + [mpq(1) if i == c else mpq(0) for c in range(n)]
         for i, row in enumerate(rows)]
    for col in range(n):
        piv, pval = None, None
        for r in range(col, n):
            v = M[r][col]
            if v != 0 and (pval is None or abs(v) > abs(pval)):
                piv, pval = r, v
        if piv is None:
            raise SingularMatrixError(col)
        M[col], M[piv] = M[piv], M[col]
        prow = M[col]
        for r in range(n):
            if r == col:
                continue
            f = M[r][col] / pval
            if f == 0:
                continue
            row = M[r]
            for c in range(col, 2 * n):
                row[c] -= f * prow[c]
    out = []
    for r in range(n):
        pv = M[r][r]
        out.append([M[r][n + c] / pv for c in range(n)])
    return out


# ---------------------------------------------------------------------------
# Monic polynomials with exact coefficients

@dataclass(frozen=True)
class MonicPolynomial:
    """Coefficients lowest degree first; leading coefficient exactly 1."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(mpq(c) for c in self.coeffs)
        if not cs or cs[-1] != 1:
            raise ValueError("leading coefficient must be exactly 1")
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        if isinstance(x, (int, mpq)):
            acc = mpq(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + (mp.mpf(c.numerator) / mp.mpf(c.denominator))
        return acc

    def eval_mp(self, x, ctx: PrecCtx):
        """Evaluate at an mpmath number with enough guard bits for the
        coefficient sizes (exact-coefficient Horner)."""
        return eval_poly_exact_coeffs(self.coeffs, x, ctx)

    def derivative_coeffs(self):
        return tuple(mpq(i) * c for i, c in enumerate(self.coeffs) if i >= 1)

    def to_json(self):
        return [rat_str(c) for c in self.coeffs]


def _coeff_bits(coeffs) -> int:
    b = 1
    for c in coeffs:
        q = mpq(c)
        b = max(b, abs(q.numerator).bit_length() + q.denominator.bit_length())
    return b


def eval_poly_exact_coeffs(coeffs, x, ctx: PrecCtx):
    """Horner with exact rational coefficients at escalated precision.

    Guards against cancellation between huge alternating coefficients: the
    working precision grows with the coefficient bit size and deg*log2|x|.
    """
    deg = len(coeffs) - 1
    with ctx.workprec():
        ax = abs(mp.mpc(x)) if isinstance(x, (complex, mp.mpc)) else abs(mp.mpf(x))
        lx = float(mp.log(max(ax, mp.mpf(2)), 2))
    extra = _coeff_bits(coeffs) + int(deg * lx) + 64
    with ctx.workprec(extra=extra):
        if isinstance(x, (complex, mp.mpc)):
            xx = mp.mpc(x)
            acc = mp.mpc(0)
        else:
            xx = mp.mpf(x)
            acc = mp.mpf(0)
        for c in reversed([mpq(c) for c in coeffs]):
            acc = acc * xx + mp.mpf(c.numerator) / mp.mpf(c.denominator)
    with ctx.workprec():
        return +acc


# ---------------------------------------------------------------------------
# Aberth-Ehrlich simultaneous root finding

def roots_all(coeffs, ctx: PrecCtx, max_iter: int = 400):
    """All roots of a polynomial (coefficients lowest degree first).

    Aberth-Ehrlich simultaneous iteration at working precision, deterministic
    perturbed-circle start scaled by the Cauchy root bound, Newton polish at
    doubled precision.  Each returned root r satisfies
    |p(r)| <= 2^(-ctx.bits/2) * coefficient scale.
    """
    if len(coeffs) < 2:
        raise ValueError("polynomial must have degree >= 1")
    with ctx.workprec(extra=64):
        cs = [mp.mpc(c) if not isinstance(c, mpq) else mp.mpc(mp.mpf(c.numerator) / mp.mpf(c.denominator))
              for c in coeffs]
        if cs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        lead = cs[-1]
        cs = [c / lead for c in cs]
        deg = len(cs) - 1
        dcs = [i * cs[i] for i in range(1, deg + 1)]

        def horner(z):
            p = mp.mpc(cs[-1])
            for c in reversed(cs[:-1]):
                p = p * z + c
            dp = mp.mpc(dcs[-1])
            for c in reversed(dcs[:-1]):
                dp = dp * z + c
            return p, dp

        def scale_at(z):
            s = mp.mpf(0)
            az = abs(z)
            pw = mp.mpf(1)
            for c in cs:
                s += abs(c) * pw
                pw *= az
            return s

        bound = 1 + max(abs(c) for c in cs[:-1]) if deg >= 1 else mp.mpf(1)
        r0 = mp.mpf("0.7") * bound
        zs = [
            r0 * mp.exp(mp.mpc(0, 1) * (2 * mp.pi * k / deg + mp.mpf("0.3791")))
            * (1 + mp.mpf(k) / (97 * deg))
            for k in range(deg)
        ]
        tol = mp.mpf(2) ** (-(ctx.bits // 2))
        worst = mp.inf
        for _ in range(max_iter):
            done = True
            worst = mp.mpf(0)
            for k in range(deg):
                z = zs[k]
                p, dp = horner(z)
                sc = scale_at(z)
                res = abs(p) / sc if sc > 0 else abs(p)
                worst = max(worst, res)
                if res <= tol / 4:
                    continue
                done = False
                if dp == 0:
                    zs[k] = z + tol * (1 + abs(z))
                    continue
                w = p / dp
                s = mp.mpc(0)
                for j in range(deg):
                    if j != k:
                        dz = z - zs[j]
                        if dz != 0:
                            s += 1 / dz
                denom = 1 - w * s
                zs[k] = z - (w / denom if denom != 0 else w)
            if done:
                break
        if worst > tol:
            raise RootConvergenceError(worst)

    # Newton polish at doubled precision (simple roots sharpen to ~2x bits)
    with ctx.workprec(extra=ctx.bits + 64):
        cs2 = [mp.mpc(c) if not isinstance(c, mpq) else mp.mpc(mp.mpf(c.numerator) / mp.mpf(c.denominator))
               for c in coeffs]
        lead = cs2[-1]
        cs2 = [c / lead for c in cs2]
        dcs2 = [i * cs2[i] for i in range(1, len(cs2))]
        out = []
        for z in zs:
            z = mp.mpc(z)
            for _ in range(4):
                p = mp.mpc(cs2[-1])
                for c in reversed(cs2[:-1]):
                    p = p * z + c
                dp = mp.mpc(dcs2[-1])
                for c in reversed(dcs2[:-1]):
                    dp = dp * z + c
                if dp == 0 or p == 0:
                    break
                step = p / dp
                z -= step
                if abs(step) < mp.mpf(2) ** (-2 * ctx.bits) * (1 + abs(z)):
                    break
            out.append(z)
    with ctx.workprec():
        out = [+z for z in out]
    out.sort(key=lambda z: (mp.re(z), mp.im(z)))
    return out


# ---------------------------------------------------------------------------
# Fast fixed-precision dense solve on gmpy2.mpfr (used by the equilibrium
# least-squares assembly, where pure-mpmath loops are too slow)

def lu_solve_mpfr(A, b, prec_bits: int):
    """Solve the dense system A x = b with gmpy2.mpfr at prec_bits.

    A: list of lists, b: list; entries convertible to gmpy2.mpfr (mpf ok via
    str).  Partial pivoting.  Returns a list of gmpy2.mpfr.
    """
    n = len(A)
    ctxg = gmpy2.context(precision=prec_bits)
    with ctxg:
        M = [[gmpy2.mpfr(e) for e in row] for row in A]
        x = [gmpy2.mpfr(e) for e in b]
        piv = list(range(n))
        for col in range(n):
            best, bval = col, abs(M[col][col])
            for r in range(col + 1, n):
                v = abs(M[r][col])
                if v > bval:
                    best, bval = r, v
            if bval == 0:
                raise SingularMatrixError(col)
            if best != col:
                M[col], M[best] = M[best], M[col]
                x[col], x[best] = x[best], x[col]
                piv[col], piv[best] = piv[best], piv[col]
            pv = M[col][col]
            for r in range(col + 1, n):
                f = M[r][col] / pv
                if f == 0:
                    continue
                row, prow = M[r], M[col]
                row[col] = gmpy2.mpfr(0)
                for c in range(col + 1, n):
                    row[c] -= f * prow[c]
                x[r] -= f * x[col]
        out = [gmpy2.mpfr(0)] * n
        for r in range(n - 1, -1, -1):
            s = x[r]
            row = M[r]
            for c in range(r + 1, n):
                s -= row[c] * out[c]
            out[r] = s / row[r]
        return out
