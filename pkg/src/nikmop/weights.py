"""The sinh/cosh Nikishin pair, its n-rescaled weights and exact moments.

w_{1,n}(z) = 1/sinh(pi n sqrt(z)),  w_{2,n}(z) = 1/(sqrt(z) cosh(pi n sqrt(z)))

Moments of both weights over [0, oo) are exact rationals: pi-powers cancel
between the Gamma-series of 1/sinh, 1/cosh and the zeta/beta rational
factors.  A graded-panel quadrature oracle validates every table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import mpmath as mp
from gmpy2 import mpq

from .numerics import PrecCtx, QQ, beta_odd, gauss_legendre, rat_str, zeta_even

__all__ = [
    "BranchCutError",
    "PoleProximityError",
    "RescaledWeights",
    "MomentTable",
    "DiscreteMeasure",
    "eval_w",
    "eval_upsilon",
    "check_relationsW",
    "moments",
    "moment_quadrature",
    "tanh_partial_fractions_check",
    "sigma2",
    "sigma2_n",
]


class BranchCutError(ValueError):
    """Evaluation requested on the closed negative real axis."""


class PoleProximityError(ValueError):
    """Evaluation point too close to a pole/atom."""


def _require_off_cut(z):
    z = mp.mpc(z)
    if mp.im(z) == 0 and mp.re(z) <= 0:
        raise BranchCutError(f"z = {z} lies on the branch cut (-inf, 0]")
    return z


@dataclass(frozen=True)
class RescaledWeights:
    """Weight pair at rescaling index n."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("rescaling index must be >= 1")

    def w1(self, z, ctx: PrecCtx):
        return eval_w(1, self.n, z, ctx)

    def w2(self, z, ctx: PrecCtx):
        return eval_w(2, self.n, z, ctx)


def eval_w(j: int, n: int, z, ctx: PrecCtx):
    """w_{j,n}(z) off the negative real axis, principal sqrt."""
    if j not in (1, 2):
        raise ValueError("weight index must be 1 or 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    with ctx.workprec(extra=16):
        zz = _require_off_cut(z)
        rz = mp.sqrt(zz)
        if j == 1:
            val = 1 / mp.sinh(mp.pi * n * rz)
        else:
            val = 1 / (rz * mp.cosh(mp.pi * n * rz))
    with ctx.workprec():
        return +val


def eval_upsilon(z, ctx: PrecCtx):
    """upsilon(z) = exp(pi sqrt(z)); |upsilon| > 1 off the negative axis."""
    with ctx.workprec(extra=16):
        zz = _require_off_cut(z)
        val = mp.exp(mp.pi * mp.sqrt(zz))
    with ctx.workprec():
        return +val


def check_relationsW(n: int, z, ctx: PrecCtx):
    """Residuals of the two weight/upsilon identities at z.

    Checks  w1 +- sqrt(z) w2 = 4 u^{+-n}/(u^{2n} - u^{-2n})  and
    1/w1 +- 1/(sqrt(z) w2) = +- u^{+-n}.  Returns the two max residuals
    relative to the term scale.
    """
    with ctx.workprec(extra=16):
        zz = _require_off_cut(z)
        rz = mp.sqrt(zz)
        u = mp.exp(mp.pi * mp.sqrt(zz))
        w1 = 1 / mp.sinh(mp.pi * n * rz)
        w2 = 1 / (rz * mp.cosh(mp.pi * n * rz))
        un, umn = u ** n, u ** (-n)
        den = u ** (2 * n) - u ** (-2 * n)
        r_first = mp.mpf(0)
        for sgn, up in ((1, un), (-1, umn)):
            lhs = w1 + sgn * rz * w2
            rhs = 4 * up / den
            scale = max(abs(lhs), abs(rhs), abs(w1))
            r_first = max(r_first, abs(lhs - rhs) / scale)
        r_second = mp.mpf(0)
        for sgn, up in ((1, un), (-1, umn)):
            lhs = 1 / w1 + sgn / (rz * w2)
            rhs = sgn * up
            scale = max(abs(lhs), abs(rhs), abs(un))
            r_second = max(r_second, abs(lhs - rhs) / scale)
    with ctx.workprec():
        return +r_first, +r_second


# ---------------------------------------------------------------------------
# Exact moments

@dataclass(frozen=True)
class MomentTable:
    """Exact moments: values[k] = integral of x^k w_{j,n}(x) over [0, oo)."""

    j: int
    n: int
    values: tuple

    def __post_init__(self):
        if self.j not in (1, 2):
            raise ValueError("weight index must be 1 or 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        vals = tuple(mpq(v) for v in self.values)
        if any(v <= 0 for v in vals):
            raise ValueError("moments must be strictly positive")
        object.__setattr__(self, "values", vals)

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def entry(self, k: int):
        return self.values[k]

    def to_json(self) -> str:
        return json.dumps(
            {"j": self.j, "n": self.n, "moments": [rat_str(v) for v in self.values]}
        )

    @staticmethod
    def from_json(s: str) -> "MomentTable":
        from .numerics import parse_rat

        d = json.loads(s)
        return MomentTable(d["j"], d["n"], tuple(parse_rat(v) for v in d["moments"]))


def moment_exact(j: int, k: int, n: int):
    """Closed-form moment of x^k against w_{j,n} on [0, oo).

    With x = (u/(pi n))^2 the integrals reduce to Gamma-factors times
    zeta(2k+2) resp. beta(2k+1); the pi-powers cancel exactly.
    """
    if j == 1:
        return (
            4 * mpq(math.factorial(2 * k + 1))
            * (1 - mpq(1, 4 ** (k + 1)))
            * zeta_even(2 * k + 2)
            / mpq(n) ** (2 * k + 2)
        )
    return 4 * mpq(math.factorial(2 * k)) * beta_odd(2 * k + 1) / mpq(n) ** (2 * k + 1)


def moments(j: int, n: int, k_max: int, validate: bool = False,
            ctx: PrecCtx | None = None) -> MomentTable:
    """Exact moment table for w_{j,n}, k = 0..k_max.

    With `validate`, the first and last entries are checked against the
    quadrature oracle (the closed forms are an implementation derivation).
    """
    if j not in (1, 2):
        raise ValueError("weight index must be 1 or 2")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    table = MomentTable(j, n, tuple(moment_exact(j, k, n) for k in range(k_max + 1)))
    if validate:
        ctx = ctx or PrecCtx(256)
        with ctx.workprec():
            for k in (0, k_max):
                ref = moment_quadrature(j, k, n, ctx)
                if abs(ctx.mpf(table.entry(k)) / ref - 1) > mp.mpf(2) ** (-(ctx.bits // 2)):
                    raise ArithmeticError(
                        f"moment table (j={j}, n={n}) disagrees with the quadrature oracle at k={k}"
                    )
    return table


def moment_quadrature(j: int, k: int, n: int, ctx: PrecCtx):
    """Quadrature oracle for the moment (graded panels, u = sqrt(x)).

    The substitution removes the x^{-1/2} singularity of w_2; the tail is cut
    where exp(-pi n u) is below target precision.
    """
    with ctx.workprec(extra=64):
        prec = mp.mp.prec
        u_max = (prec * mp.log(2) + 40 + (2 * k + 2) * 10) / (mp.pi * n)
        # panel breakpoints: geometric doubling
        brk = [mp.mpf(0), mp.mpf(1) / (2 * n)]
        while brk[-1] < u_max:
            brk.append(min(2 * brk[-1], u_max + mp.mpf(1) / 1024))
        xs, ws = gauss_legendre(48, ctx)
        total = mp.mpf(0)
        for a, b in zip(brk[:-1], brk[1:]):
            h = (b - a) / 2
            c = (b + a) / 2
            for x, w in zip(xs, ws):
                u = c + h * x
                if j == 1:
                    f = 2 * u ** (2 * k + 1) / mp.sinh(mp.pi * n * u)
                else:
                    f = 2 * u ** (2 * k) / mp.cosh(mp.pi * n * u)
                total += h * w * f
    with ctx.workprec():
        return +total


# ---------------------------------------------------------------------------
# Discrete measures sigma_2 and sigma_{2,n}

@dataclass(frozen=True)
class DiscreteMeasure:
    """Atomic measure (mass_rational / pi^pi_divisor) * sum_k delta_{loc(k)}."""

    mass_rational: object
    pi_divisor: int
    scale_den: object = field(default=QQ(1))  # atom k at -( (2k+1)/scale_den )^2

    def atom_location(self, k: int):
        if k < 0:
            raise ValueError("atom index must be >= 0")
        return -((2 * k + 1) / mpq(self.scale_den)) ** 2

    def mass_float(self, ctx: PrecCtx):
        with ctx.workprec():
            m = mpq(self.mass_rational)
            return mp.mpf(m.numerator) / mp.mpf(m.denominator) / mp.pi ** self.pi_divisor


def sigma2() -> DiscreteMeasure:
    """sigma_2 = (4/pi) sum_k delta at -(2k+1)^2."""
    return DiscreteMeasure(QQ(4), 1, QQ(1))


def sigma2_n(n: int) -> DiscreteMeasure:
    """sigma_{2,n} = (4/pi) sum_k delta at -((2k+1)/(2n))^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return DiscreteMeasure(QQ(4), 1, QQ(2 * n))


def tanh_partial_fractions_check(z, K: int, ctx: PrecCtx):
    """|tanh(pi sqrt(z)/2)/sqrt(z) - (4/pi) sum_{k<K} 1/(z+(2k+1)^2)|.

    The truncation error decays like 1/K.  z = 0 compares the limits of both
    sides (pi/2 against the truncated series).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    with ctx.workprec(extra=16):
        zz = mp.mpc(z)
        for k in range(K):
            if abs(zz + (2 * k + 1) ** 2) < mp.mpf("1e-6"):
                raise PoleProximityError(f"z within 1e-6 of the atom -(2k+1)^2, k={k}")
        if zz == 0:
            lhs = mp.pi / 2
        else:
            rz = mp.sqrt(zz)
            lhs = mp.tanh(mp.pi * rz / 2) / rz
        s = mp.mpf(0)
        for k in range(K):
            s += 1 / (zz + (2 * k + 1) ** 2)
        rhs = 4 / mp.pi * s
        res = abs(lhs - rhs)
    with ctx.workprec():
        return +res
