"""The genus-0 spectral curve z = (1+zeta)/(zeta^2 (1-zeta)).

Branch solving by the simultaneous root finder, branch labeling by adaptive
analytic continuation from a large-|z| anchor where the three inverse
branches are pinned by their series, and the outer-asymptotics amplitude H.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import mpmath as mp

from .numerics import PrecCtx, roots_all

__all__ = [
    "BranchPointProximityError",
    "ContinuationAmbiguityError",
    "CutProximityError",
    "BranchTriple",
    "BranchPoints",
    "branch_points",
    "forward_map",
    "branches_at",
    "BranchWalker",
    "zeta_series",
    "eval_H",
]

ANCHOR_RADIUS = mp.mpf(10) ** 6


class BranchPointProximityError(ValueError):
    """z too close to a branch point {0, p-, p+} for labeled branches."""


class ContinuationAmbiguityError(RuntimeError):
    """Two independent continuation paths produced different labels."""


class CutProximityError(ValueError):
    """Argument too close to a branch cut."""


class PoleError(ValueError):
    """Forward map evaluated at one of its poles."""


@dataclass(frozen=True)
class BranchTriple:
    """Labeled branch values (zeta1, zeta2, zeta3) over one base point z."""

    z: object
    zeta: tuple
    certified: bool


@dataclass(frozen=True)
class BranchPoints:
    p_plus: object
    p_minus: object
    q_plus: object
    q_minus: object


def branch_points(ctx: PrecCtx) -> BranchPoints:
    """p+- = +-phi^(+-5) with phi the golden ratio, and q+- = zeta2(p+-)."""
    with ctx.workprec():
        s5 = mp.sqrt(mp.mpf(5))
        p_plus = (2 / (s5 - 1)) ** 5
        p_minus = -((s5 - 1) / 2) ** 5
        q_plus = (-1 + s5) / 2
        q_minus = (-1 - s5) / 2
        return BranchPoints(+p_plus, +p_minus, +q_plus, +q_minus)


def forward_map(zeta):
    """z = (1+zeta)/(zeta^2 (1-zeta)); poles at zeta in {0, 1}."""
    zeta = mp.mpc(zeta) if not isinstance(zeta, (mp.mpf, mp.mpc)) else zeta
    if zeta == 0 or zeta == 1:
        raise PoleError(f"forward map has a pole at zeta = {zeta}")
    val = (1 + zeta) / (zeta ** 2 * (1 - zeta))
    if mp.im(val) == 0:
        return mp.re(val)
    return val


def zeta_series(z, ctx: PrecCtx):
    """Large-|z| series of the three labeled branches (through z^(-5/2))."""
    with ctx.workprec():
        zz = mp.mpc(z)
        rz = mp.sqrt(zz)
        s1 = 1 - 2 / zz - 6 / zz ** 2
        s2 = 1 / rz + 1 / zz + mp.mpf(3) / 2 / rz ** 3 + 3 / zz ** 2 + mp.mpf(55) / 8 / rz ** 5
        s3 = -1 / rz + 1 / zz - mp.mpf(3) / 2 / rz ** 3 + 3 / zz ** 2 - mp.mpf(55) / 8 / rz ** 5
        return (+s1, +s2, +s3)


def _cubic_roots(z, ctx: PrecCtx):
    # z*zeta^3 - z*zeta^2 + zeta + 1 = 0, coefficients lowest-first
    return roots_all([1, 1, -z, z], ctx)


def _match(prev, cand):
    """Permute cand to minimize the worst distance to prev."""
    best = None
    for perm in itertools.permutations(range(3)):
        d = max(abs(prev[i] - cand[perm[i]]) for i in range(3))
        if best is None or d < best[0]:
            best = (d, perm)
    return [cand[best[1][i]] for i in range(3)], best[0]


def _gap(triple):
    return min(
        abs(triple[0] - triple[1]),
        abs(triple[0] - triple[2]),
        abs(triple[1] - triple[2]),
    )


def _anchor_for(z):
    arg = float(mp.arg(z)) if abs(z) > 0 else 0.0
    lo = 0.05
    if abs(arg) < lo:
        arg = lo if mp.im(z) >= 0 else -lo
    if abs(arg) > float(mp.pi) - lo:
        arg = (float(mp.pi) - lo) * (1 if arg >= 0 else -1)
    return ANCHOR_RADIUS * mp.exp(mp.mpc(0, 1) * mp.mpf(arg))


class BranchWalker:
    """Continuation state: labeled triple at a point, movable in small steps.

    Also carries auxiliary square-root trackers (used by the parametrix for
    the branch of D(zeta)^(1/2) on each sheet): each tracker is a function
    zeta -> value whose square root is continued along the walk.
    """

    def __init__(self, ctx: PrecCtx, aux=None):
        self.ctx = ctx
        self.z = None
        self.triple = None
        self.aux_funcs = aux or []  # list of (sheet_index, func)
        self.aux_vals = []

    def seed(self, z, triple, aux_vals=None):
        self.z = z
        self.triple = list(triple)
        if self.aux_funcs:
            self.aux_vals = list(aux_vals)
        return self

    def seed_at_anchor(self, z_target):
        with self.ctx.workprec(extra=16):
            za = _anchor_for(z_target)
            roots = _cubic_roots(za, self.ctx)
            ser = zeta_series(za, self.ctx)
            tri, d = _match(list(ser), roots)
            if d > _gap(tri) / 8:
                raise ContinuationAmbiguityError("series labeling failed at anchor")
            self.z = za
            self.triple = tri
            self.aux_vals = [f_init(tri) for (_, f_init, _) in self.aux_funcs]
        return self

    def _try_step(self, z_new):
        roots = _cubic_roots(z_new, self.ctx)
        tri, d = _match(self.triple, roots)
        if d > _gap(self.triple) / 4:
            return None
        new_aux = []
        for (j, _, func), prev in zip(self.aux_funcs, self.aux_vals):
            val = func(tri[j])
            s = mp.sqrt(val)
            cand = s if abs(s - prev) <= abs(-s - prev) else -s
            if abs(cand - prev) > abs(prev) / 2:
                return None
            new_aux.append(cand)
        return tri, new_aux

    def goto(self, z_target, geom: bool = False, init_step=None, max_splits: int = 200):
        """Walk to z_target along a chord (or log-geometric arc if `geom`),
        subdividing adaptively until branch matching is unambiguous."""
        with self.ctx.workprec(extra=16):
            z0 = self.z
            if z0 == z_target:
                return self
            if geom:
                la, lb = mp.log(z0), mp.log(z_target)
                point = lambda t: mp.exp(la + (lb - la) * t)
            else:
                point = lambda t: z0 + (z_target - z0) * t
            t = mp.mpf(0)
            step = mp.mpf(init_step) if init_step else mp.mpf(1) / 4
            splits = 0
            while t < 1:
                tn = min(t + step, mp.mpf(1))
                z_new = point(tn)
                res = self._try_step(z_new)
                if res is None:
                    step /= 2
                    splits += 1
                    if splits > max_splits:
                        raise ContinuationAmbiguityError(
                            f"continuation stalled near {mp.nstr(z_new, 8)}"
                        )
                    continue
                self.triple, self.aux_vals = res
                self.z = z_new
                t = tn
                step = step * 2
        return self

    def goto_via(self, waypoints, init_step=None):
        for w, g in waypoints:
            self.goto(w, geom=g, init_step=init_step)
        return self


def _route(z, ctx: PrecCtx, scale=1):
    """Waypoints (point, geom_flag) from the anchor to z.

    Drops radially (log-geometric interpolation, which never crosses the real
    axis away from the endpoint), and for targets close to the real axis near
    the cuts descends along a vertical segment over Re z so the path never
    grazes a branch point.
    """
    with ctx.workprec():
        bp = branch_points(ctx)
        im, re = mp.im(z), mp.re(z)
        near_axis = abs(im) < 1 and mp.mpf(-2) < re < bp.p_plus + 2
        if not near_axis:
            return [(mp.mpc(z), True)]
        # the log-geometric leg keeps |.| >= |elev|, so it cannot graze the
        # origin; the final vertical descent has constant Re z
        h = max(abs(im) * 4, mp.mpf(2)) * scale
        sgn = 1 if im >= 0 else -1
        elev = mp.mpc(re, sgn * h) if re != 0 else mp.mpc(mp.mpf("1e-30"), sgn * h)
        return [(elev, True), (mp.mpc(z), False)]


def branches_at(z, ctx: PrecCtx, certify: bool = True) -> BranchTriple:
    """Labeled branch triple at z with cubic-residual certification.

    Labels are fixed by continuation from the |z| = 10^6 anchor; when
    `certify`, a second independent subdivision of the same homotopy class
    must agree to gap/8.
    """
    with ctx.workprec(extra=16):
        zz = mp.mpc(z)
        bp = branch_points(ctx)
        near = 10 * mp.mpf(2) ** (-(ctx.bits // 2))
        for b in (mp.mpf(0), bp.p_minus, bp.p_plus):
            if abs(zz - b) < near:
                raise BranchPointProximityError(f"z within {mp.nstr(near, 3)} of {mp.nstr(b, 8)}")
        if abs(zz) > 2 * ANCHOR_RADIUS:
            tri = list(zeta_series(zz, ctx))
            roots = _cubic_roots(zz, ctx)
            tri, d = _match(tri, roots)
            return BranchTriple(+zz, tuple(+t for t in tri), True)

        walker = BranchWalker(ctx).seed_at_anchor(zz)
        walker.goto_via(_route(zz, ctx))
        tri1 = walker.triple
        certified = False
        if certify:
            # second path in the same homotopy class (no cut crossings):
            # different elevation and subdivision
            walker2 = BranchWalker(ctx).seed_at_anchor(zz)
            walker2.goto_via(_route(zz, ctx, scale=mp.mpf("1.5")), init_step=mp.mpf(1) / 7)
            tri2 = walker2.triple
            dd = max(abs(tri1[i] - tri2[i]) for i in range(3))
            if dd > _gap(tri1) / 8:
                raise ContinuationAmbiguityError(
                    f"paths disagree at z = {mp.nstr(zz, 8)} (delta {mp.nstr(dd, 3)})"
                )
            certified = True
        return BranchTriple(+zz, tuple(+t for t in tri1), certified)


# ---------------------------------------------------------------------------
# The outer amplitude H

def eval_H(zeta, ctx: PrecCtx):
    """H(zeta) = (zeta/sqrt 2) ((1+zeta)/(zeta^2+zeta-1))^(1/2).

    Holomorphic branch in C minus (-inf, q+], normalized H(1) = 1.  The
    principal square root realizes this branch: the preimage of the negative
    axis under (1+zeta)/(zeta^2+zeta-1) consists of the two real arcs
    (-inf, q-) and (-1, q+), both inside the cut.
    """
    with ctx.workprec(extra=16):
        zt = mp.mpc(zeta)
        q_plus = (-1 + mp.sqrt(mp.mpf(5))) / 2
        if mp.im(zt) == 0 and mp.re(zt) <= q_plus:
            raise CutProximityError("H is evaluated on its cut (-inf, q+]")
        if abs(mp.im(zt)) < mp.mpf("1e-10") and mp.re(zt) <= q_plus:
            raise CutProximityError("zeta within 1e-10 of the cut (-inf, q+]")
        w = (1 + zt) / (zt * zt + zt - 1)
        val = zt / mp.sqrt(mp.mpf(2)) * mp.sqrt(w)
    with ctx.workprec():
        if mp.im(val) == 0:
            return mp.re(+val)
        return +val


def branch_table_rows(zs, ctx: PrecCtx, certify: bool = True):
    """Rows (z_re, z_im, zeta1_re, zeta1_im, ..., certified) for a CSV table
    of labeled branch values over a list of base points."""
    rows = []
    with ctx.workprec():
        for z in zs:
            bt = branches_at(mp.mpc(z), ctx, certify=certify)
            row = [mp.re(bt.z), mp.im(bt.z)]
            for t in bt.zeta:
                row.extend([mp.re(t), mp.im(t)])
            row.append(int(bt.certified))
            rows.append(row)
    return rows


BRANCH_TABLE_HEADER = [
    "z_re", "z_im", "zeta1_re", "zeta1_im", "zeta2_re", "zeta2_im",
    "zeta3_re", "zeta3_im", "certified",
]


def eval_H_continued(zeta, ctx: PrecCtx, steps: int = 64):
    """Oracle for eval_H: continue the square root from H(1) = 1 along the
    straight segment, bending into the half plane of zeta when the segment
    would cross the cut."""
    with ctx.workprec(extra=16):
        zt = mp.mpc(zeta)
        path = [mp.mpc(1, 0)]
        if mp.im(zt) != 0:
            path.append(mp.mpc(1, mp.im(zt)))
        path.append(zt)
        cur = mp.sqrt(mp.mpf(2))  # sqrt of (1+1)/(1+1-1) at zeta = 1
        pos = path[0]
        for target in path[1:]:
            for k in range(1, steps + 1):
                p = pos + (target - pos) * mp.mpf(k) / steps
                w = (1 + p) / (p * p + p - 1)
                s = mp.sqrt(w)
                cur = s if abs(s - cur) <= abs(-s - cur) else -s
            pos = target
        val = zt / mp.sqrt(mp.mpf(2)) * cur
    with ctx.workprec():
        return +val
