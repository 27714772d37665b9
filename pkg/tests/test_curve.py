import random

import mpmath as mp
import pytest

from nikmop.curve import (
    BranchPointProximityError,
    BranchWalker,
    CutProximityError,
    PoleError,
    _route,
    branch_points,
    branches_at,
    eval_H,
    eval_H_continued,
    forward_map,
    zeta_series,
)


class TestBranchPoints:
    def test_values(self, ctx):
        bp = branch_points(ctx)
        with ctx.workprec():
            assert abs(bp.p_plus - mp.mpf("11.09016994374947424")) < mp.mpf("1e-15")
            assert abs(bp.p_minus + mp.mpf("0.09016994374947424")) < mp.mpf("1e-15")
            # exact reciprocal-modulus relation
            assert abs(bp.p_plus * abs(bp.p_minus) - 1) < ctx.eps * 64
            assert abs(bp.q_plus - (-1 + mp.sqrt(mp.mpf(5))) / 2) < ctx.eps * 16

    def test_images_of_q(self, ctx):
        bp = branch_points(ctx)
        with ctx.workprec():
            assert abs(forward_map(bp.q_plus) - bp.p_plus) < mp.mpf("1e-30")
            assert abs(forward_map(bp.q_minus) - bp.p_minus) < mp.mpf("1e-30")

    def test_critical_points(self, ctx):
        # dz/dzeta = 0 at q+-: finite-difference oracle on the forward map
        bp = branch_points(ctx)
        with ctx.workprec():
            h = mp.mpf(2) ** (-(ctx.bits // 3))
            for q in (bp.q_plus, bp.q_minus):
                der = (forward_map(q + h) - forward_map(q - h)) / (2 * h)
                assert abs(der) < mp.mpf(10) ** 6 * h  # ~ h * z''/2


class TestForwardMap:
    def test_zero_of_numerator(self, ctx):
        with ctx.workprec():
            assert forward_map(mp.mpf(-1)) == 0

    def test_poles(self, ctx):
        with pytest.raises(PoleError):
            forward_map(0)
        with pytest.raises(PoleError):
            forward_map(1)


class TestBranchesAt:
    def test_series_at_anchor_scale(self, ctx):
        with ctx.workprec():
            z = mp.mpf(10) ** 6
            bt = branches_at(z, ctx, certify=False)
            ser = zeta_series(z, ctx)
            for a, b in zip(bt.zeta, ser):
                assert abs(a - b) < mp.mpf(100) / z ** 3
            assert abs(bt.zeta[0] - (1 - 2 / z)) < mp.mpf("1e-11")

    def test_cubic_and_vieta(self, ctx):
        rng = random.Random(17)
        with ctx.workprec():
            tol = mp.mpf(2) ** (-(ctx.bits // 2))
            for _ in range(60):
                z = mp.mpc(rng.uniform(-40, 40), rng.uniform(-40, 40))
                if abs(z) < mp.mpf("0.2"):
                    continue
                bt = branches_at(z, ctx, certify=False)
                t1, t2, t3 = bt.zeta
                for t in bt.zeta:
                    assert abs(z * t ** 3 - z * t ** 2 + t + 1) < tol * max(1, abs(z) * abs(t) ** 3)
                assert abs(t1 + t2 + t3 - 1) < tol * 10
                assert abs(t1 * t2 + t1 * t3 + t2 * t3 - 1 / z) < tol * 10
                assert abs(t1 * t2 * t3 + 1 / z) < tol * 10

    def test_roundtrip(self, ctx):
        rng = random.Random(23)
        with ctx.workprec():
            tol = mp.mpf(2) ** (-(ctx.bits // 2))
            for _ in range(10):
                z = mp.mpc(rng.uniform(-15, 15), rng.uniform(-15, 15))
                if abs(z) < 1 or abs(mp.im(z)) < mp.mpf("0.05"):
                    continue
                bt = branches_at(z, ctx, certify=False)
                for t in bt.zeta:
                    assert abs(forward_map(t) - z) < tol * 1000 * max(1, abs(z)) ** 2

    def test_collisions(self, ctx):
        bp = branch_points(ctx)
        with ctx.workprec():
            d = mp.mpf("1e-8")
            t = branches_at(bp.p_plus + d, ctx, certify=False).zeta
            assert abs(t[0] - t[1]) < mp.mpf("1e-3")
            assert abs(t[0] - bp.q_plus) < mp.mpf("1e-3")
            t = branches_at(bp.p_minus - d, ctx, certify=False).zeta
            assert abs(t[1] - t[2]) < mp.mpf("1e-3")
            assert abs(t[1] - bp.q_minus) < mp.mpf("1e-3")
            # near 0: one root near -1, two diverging like +- i z^(-1/2)
            z0 = mp.mpc("1e-8", "1e-9")
            t = branches_at(z0, ctx, certify=False).zeta
            assert abs(t[2] + 1) < mp.mpf("1e-3")
            assert abs(t[0]) > mp.mpf(10) ** 3 and abs(t[1]) > mp.mpf(10) ** 3
            assert abs(t[0] + t[1] - 2) < mp.mpf(1)  # the pair is ~ 1 +- i/sqrt(z)

    def test_band_boundary_labels(self, ctx):
        # on (0, p+): zeta_1+ and zeta_2+ are complex conjugates,
        # zeta_3 is real in (-1, 0)
        with ctx.workprec():
            eps = mp.mpf(2) ** (-(ctx.bits // 3))
            bt = branches_at(mp.mpc(5, eps), ctx)
            t1, t2, t3 = bt.zeta
            assert abs(t1 - mp.conj(t2)) < mp.mpf("1e-20")
            assert abs(mp.im(t3)) < mp.mpf("1e-20") and -1 < mp.re(t3) < 0
            assert mp.im(t1) > 0  # zeta_{1+} in the upper half plane

    def test_branch_point_proximity_error(self, ctx):
        bp = branch_points(ctx)
        with ctx.workprec():
            with pytest.raises(BranchPointProximityError):
                branches_at(bp.p_plus + mp.mpf(2) ** (-ctx.bits), ctx)

    def test_certification(self, ctx):
        with ctx.workprec():
            bt = branches_at(mp.mpc(3, 1), ctx, certify=True)
            assert bt.certified
            bt = branches_at(mp.mpc(-4, -2), ctx, certify=False)
            assert not bt.certified

    def test_path_independence_polylines(self, ctx):
        # continuation along random cut-avoiding polylines in one half plane
        rng = random.Random(41)
        with ctx.workprec():
            for _ in range(6):
                sgn = rng.choice([-1, 1])
                target = mp.mpc(rng.uniform(-10, 14), sgn * rng.uniform(0.5, 8))
                w1 = BranchWalker(ctx).seed_at_anchor(target)
                w1.goto_via(_route(target, ctx))
                w2 = BranchWalker(ctx).seed_at_anchor(target)
                for _ in range(3):
                    mid = mp.mpc(rng.uniform(-10, 14), sgn * rng.uniform(0.5, 8))
                    w2.goto(mid)
                w2.goto(target)
                for a, b in zip(w1.triple, w2.triple):
                    assert abs(a - b) < mp.mpf("1e-30")


class TestBranchTable:
    def test_csv_rows(self, ctx, tmp_path):
        from nikmop.curve import BRANCH_TABLE_HEADER, branch_table_rows
        from nikmop.report import write_csv

        with ctx.workprec():
            rows = branch_table_rows([mp.mpc(3, 1), mp.mpc(-2, -4)], ctx)
        assert len(rows) == 2 and len(rows[0]) == len(BRANCH_TABLE_HEADER)
        assert rows[0][-1] == 1  # certified
        path = tmp_path / "branches.csv"
        write_csv(path, BRANCH_TABLE_HEADER, rows)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("z_re,z_im,zeta1_re")
        assert len(lines) == 3


class TestEvalH:
    def test_normalization(self, ctx):
        with ctx.workprec():
            assert abs(eval_H(1, ctx) - 1) < ctx.eps * 16

    def test_value_at_2(self, ctx):
        with ctx.workprec():
            assert abs(eval_H(2, ctx) - mp.sqrt(mp.mpf(6) / 5)) < ctx.eps * 64

    def test_cut_errors(self, ctx):
        with pytest.raises(CutProximityError):
            eval_H(mp.mpf(0), ctx)
        with pytest.raises(CutProximityError):
            eval_H(mp.mpc("0.3", "1e-12"), ctx)

    def test_against_continuation_oracle(self, ctx):
        with ctx.workprec():
            for zt in (mp.mpc(3, 1), mp.mpc(1, -2), mp.mpc(-2, 3), mp.mpc("0.7", "0.1"),
                       mp.mpf(5), mp.mpc(-5, -1)):
                a = eval_H(zt, ctx)
                b = eval_H_continued(zt, ctx, steps=200)
                assert abs(a - b) < mp.mpf("1e-25")

    def test_no_zeros_off_band(self, ctx):
        # H(zeta_1(z)) stays away from 0 and infinity off [0, p+]
        rng = random.Random(7)
        with ctx.workprec():
            for _ in range(5):
                z = mp.mpc(rng.uniform(-12, 20), rng.uniform(0.4, 9))
                bt = branches_at(z, ctx, certify=False)
                val = eval_H(bt.zeta[0], ctx)
                assert mp.mpf("0.05") < abs(val) < 20
