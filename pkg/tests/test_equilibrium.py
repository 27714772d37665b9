import random

import mpmath as mp
import pytest

from nikmop.equilibrium import (
    ConstraintError,
    GFunctions,
    SideFlagRequired,
    eval_g,
    eval_psi,
    eval_psi_hat,
    objective_J,
    verify_summaryG,
)


class TestSolution:
    def test_masses(self, eqsol, ctx):
        with ctx.workprec():
            assert abs(eqsol.mass1() - 2) < mp.mpf("1e-8")
            assert abs(eqsol.mass2() - 1) < mp.mpf("1e-8")

    def test_residuals(self, eqsol):
        rep = eqsol.residual_report
        assert rep["band_sup_mid"] < mp.mpf("1e-8")
        assert rep["tail_sup_mid"] < mp.mpf("1e-8")
        assert "gamma2_flag" in rep

    def test_omega_cross_check(self, eqsol, ctx):
        with ctx.workprec():
            for x in (mp.mpf(2), mp.mpf(5), mp.mpf(8)):
                w = 2 * eqsol.potential1(x) - eqsol.potential2(x) + mp.pi * mp.sqrt(x)
                assert abs(w - eqsol.omega) < mp.mpf("1e-6")

    def test_inequalities_off_support(self, eqsol, ctx):
        with ctx.workprec():
            x = eqsol.p_plus + 1
            assert (2 * eqsol.potential1(x) - eqsol.potential2(x)
                    + mp.pi * mp.sqrt(x) - eqsol.omega) > 0
            t = eqsol.p_minus / 2
            assert (2 * eqsol.potential2(t) - eqsol.potential1(t)) < 0

    def test_densities(self, eqsol, ctx):
        with ctx.workprec():
            # positive in the bulk
            for x in (mp.mpf("0.5"), mp.mpf(2), mp.mpf(9)):
                assert eqsol.lambda1_prime(x) > 0
            # constraint saturated on [p-, 0]
            for t in (eqsol.p_minus / 2, eqsol.p_minus * mp.mpf("0.9")):
                assert abs(eqsol.lambda2_prime(t) * 2 * mp.sqrt(abs(t)) - 1) == 0
            # 0 <= nu' <= sigma' below p-
            for m in (mp.mpf("1.2"), 3, 40):
                t = eqsol.p_minus * m
                nu = eqsol.nu_prime(t)
                assert 0 <= nu <= 1 / (2 * mp.sqrt(abs(t)))

    def test_grids(self, eqsol, ctx):
        with ctx.workprec():
            xs, w1, dens = eqsol.grid1()
            assert all(0 <= x <= eqsol.p_plus for x in xs)
            # weighted density values integrate the measure: total mass 2
            total = mp.fsum(w * r * 2 * mp.sqrt(x) for x, w, r in zip(xs, w1, dens))
            assert abs(total - 2) < mp.mpf("1e-8")
            ts, w2, nus = eqsol.grid2()
            assert all(t <= eqsol.p_minus for t in ts)
            assert all(nu >= 0 for nu in nus)

    def test_cdf(self, eqsol, ctx):
        with ctx.workprec():
            assert eqsol.lambda1_cdf(0) == 0
            assert abs(eqsol.lambda1_cdf(eqsol.p_plus) - 2) < mp.mpf("1e-8")
            a, b = eqsol.lambda1_cdf(2), eqsol.lambda1_cdf(5)
            assert 0 < a < b < 2


class TestGFunctions:
    def test_normalization_at_infinity(self, eqsol, ctx):
        gf = GFunctions(eqsol)
        with ctx.workprec():
            z = mp.mpf(10) ** 6
            assert abs(gf.g(1, z) - 2 * mp.log(z)) < mp.mpf("1e-4")
            # the tail of lambda_2 has divergent first moment, so the
            # correction decays like z^(-1/2) only
            d6 = abs(gf.g(2, z) - mp.log(z))
            d8 = abs(gf.g(2, z * 100) - mp.log(z * 100))
            assert d6 < mp.mpf("0.01")
            assert d8 < d6 / 5

    def test_side_flag_required(self, eqsol):
        with pytest.raises(SideFlagRequired):
            eval_g(1, 2, eqsol)  # 2 is on the cut (-inf, p+] of g_1
        with pytest.raises(SideFlagRequired):
            eval_g(2, -1, eqsol)

    def test_g1_jump_is_band_mass(self, eqsol, ctx):
        gf = GFunctions(eqsol)
        with ctx.workprec():
            x = eqsol.p_plus / 2
            jump = gf.g(1, x, side=+1) - gf.g(1, x, side=-1)
            mass = eqsol.mesh1.mass_t_above(eqsol.rho1, x)
            assert abs(mp.re(jump)) < mp.mpf("1e-30")
            assert abs(mp.im(jump) - 2 * mp.pi * mass) < mp.mpf("1e-25")

    def test_g2_jump_below_support(self, eqsol, ctx):
        # for x < p-: Im(g_{2+} - g_{2-}) = 2 pi lambda_2((x, 0])
        gf = GFunctions(eqsol)
        with ctx.workprec():
            x = 3 * eqsol.p_minus
            jump = gf.g(2, x, side=+1) - gf.g(2, x, side=-1)
            mass = (mp.sqrt(-eqsol.p_minus)
                    + eqsol.mesh2.mass_t_above(eqsol.rho2, x))
            assert abs(mp.im(jump) - 2 * mp.pi * mass) < mp.mpf("1e-20")

    def test_g_agrees_with_quadrature(self, eqsol, ctx):
        # independent oracle: direct quadrature of log|z-t| against the grids
        gf = GFunctions(eqsol)
        with ctx.workprec():
            z = mp.mpc(4, 3)
            xs, w1, _ = eqsol.grid1()
            direct = mp.fsum(w * r * mp.log(abs(z - x))
                             for x, w, r in zip(eqsol.mesh1.nodes_t, eqsol.mesh1.w_du,
                                                eqsol.rho1))
            # the plain node sum itself is only ~1e-23 accurate at distance 3
            assert abs(mp.re(gf.g(1, z)) - direct) < mp.mpf("1e-18")


class TestPsi:
    def test_pure_imaginary_on_band(self, eqsol, ctx):
        with ctx.workprec():
            for x in (mp.mpf(1), eqsol.p_plus / 2):
                for side in (+1, -1):
                    v = eval_psi(x, eqsol, side=side)
                    assert mp.re(v) == 0

    def test_value_at_zero(self, eqsol, ctx):
        with ctx.workprec():
            vp = eval_psi(mp.mpf(0), eqsol, side=+1)
            vm = eval_psi(mp.mpf(0), eqsol, side=-1)
            assert abs(abs(vp) - 4 * mp.pi) < mp.mpf("1e-7")
            assert abs(vp + vm) < mp.mpf("1e-7")  # conjugate pair

    def test_normal_derivative(self, eqsol, ctx):
        # d/dy Re psi(x + iy)|_{y=0+} = -2 pi lambda_1'(x) < 0
        with ctx.workprec():
            x = eqsol.p_plus / 2
            h = mp.mpf(2) ** (-(ctx.bits // 8))
            f0 = mp.re(eval_psi(x, eqsol, side=+1))
            f1 = mp.re(eval_psi(mp.mpc(x, h / 2), eqsol))
            f2 = mp.re(eval_psi(mp.mpc(x, h), eqsol))
            der = (-3 * f0 + 4 * f1 - f2) / h
            want = -2 * mp.pi * eqsol.lambda1_prime(x)
            assert want < 0
            assert abs(der - want) < mp.mpf("1e-5") * abs(want)

    def test_two_determinations_agree(self, eqsol, ctx):
        # exp(psi) by the density-integral determination against the
        # identity branch pi sqrt(z) - 2 g1 + g2 - omega, on an overlap
        # annulus around the band where both are accurate
        with ctx.workprec():
            for z in (mp.mpc(2, "0.3"), mp.mpc(7, "-0.25"), mp.mpc(4, "0.1")):
                a = mp.exp(eval_psi(z, eqsol, determination="integral"))
                b = mp.exp(eval_psi(z, eqsol, determination="identity"))
                assert abs(a - b) / abs(a) < mp.mpf("1e-8")

    def test_integral_determination_matches_boundary(self, eqsol, ctx):
        with ctx.workprec():
            x = mp.mpf(3)
            band = eval_psi(x, eqsol, side=+1)
            near = eval_psi(mp.mpc(x, mp.mpf("1e-18")), eqsol, determination="integral")
            assert abs(band - near) < mp.mpf("1e-15")

    def test_psi_hat(self, eqsol, ctx):
        with ctx.workprec():
            x = 2 * eqsol.p_minus
            vp = eval_psi_hat(x, eqsol, side=+1)
            vm = eval_psi_hat(x, eqsol, side=-1)
            assert mp.re(vp) == 0 and abs(vp + vm) == 0
            # magnitude grows moving left (more sigma - lambda_2 mass)
            v2 = eval_psi_hat(4 * eqsol.p_minus, eqsol, side=+1)
            assert abs(v2) > abs(vp) > 0
            with pytest.raises(ValueError):
                eval_psi_hat(mp.mpf(1), eqsol)
            with pytest.raises(SideFlagRequired):
                eval_psi_hat(x, eqsol)


class TestSummaryG:
    def test_all_items(self, eqsol, ctx):
        rep = verify_summaryG(eqsol)
        with ctx.workprec():
            assert rep["i_equality_residual"] < mp.mpf("1e-6")
            assert rep["i_inequality_margin"] > 0
            assert rep["ii_equality_residual"] < mp.mpf("1e-6")
            assert rep["ii_inequality_margin"] > 0
            assert rep["iii_residual"] < mp.mpf("1e-6")
            assert rep["v_normal_derivative_relerr"] < mp.mpf("1e-4")
            assert rep["v_sign_ok"]
            assert rep["vi_strip_margin"] > 0


class TestObjective:
    def _perturbation(self, eqsol, rng, size, ctx):
        # admissible direction: mass-neutral, supported where rho1 is positive
        with ctx.workprec():
            n1 = eqsol.mesh1.n
            d = [mp.mpf(0)] * n1
            for _ in range(6):
                j = rng.randrange(n1 // 4, 3 * n1 // 4)
                d[j] += mp.mpf(rng.uniform(-1, 1))
            m = mp.fsum(w * v for w, v in zip(eqsol.mesh1.w_du, d))
            # project out the mass component along rho1
            d = [v - m / 2 * r for v, r in zip(d, eqsol.rho1)]
            scale = max(abs(v) for v in d)
            return [v / scale * size for v in d]

    def test_local_minimum(self, eqsol, ctx):
        rng = random.Random(99)
        with ctx.workprec():
            j0 = objective_J(eqsol.rho1, eqsol.rho2, eqsol)
            worse = 0
            trials = 50
            for _ in range(trials):
                d = self._perturbation(eqsol, rng, mp.mpf("1e-3"), ctx)
                rho1p = [r + v for r, v in zip(eqsol.rho1, d)]
                jp = objective_J(rho1p, eqsol.rho2, eqsol)
                if jp >= j0 - mp.mpf("1e-12"):
                    worse += 1
            assert worse == trials

    def test_stationarity_quadratic(self, eqsol, ctx):
        rng = random.Random(7)
        with ctx.workprec():
            j0 = objective_J(eqsol.rho1, eqsol.rho2, eqsol)
            d = self._perturbation(eqsol, rng, mp.mpf(1), ctx)
            ts = [mp.mpf("1e-2"), mp.mpf("1e-3")]
            dj = []
            for t in ts:
                rho1p = [r + t * v for r, v in zip(eqsol.rho1, d)]
                dj.append(objective_J(rho1p, eqsol.rho2, eqsol) - j0)
            slope = mp.log(dj[0] / dj[1]) / mp.log(ts[0] / ts[1])
            assert abs(slope - 2) < mp.mpf("0.2")

    def test_kernel_additivity_shift(self, eqsol, ctx):
        # doubling every |x-y| (kernel shift -log 2) moves J by the exact
        # closed-form mass term -6 log 2 at masses (2, 1)
        with ctx.workprec():
            j0 = objective_J(eqsol.rho1, eqsol.rho2, eqsol)
            j2 = objective_J(eqsol.rho1, eqsol.rho2, eqsol, kernel_shift=-mp.log(2))
            want = -6 * mp.log(2)
            assert abs((j2 - j0) - want) < mp.mpf("1e-15")

    def test_inadmissible_rejected(self, eqsol, ctx):
        with ctx.workprec():
            bad = [r * mp.mpf("1.01") for r in eqsol.rho1]  # mass 2.02
            with pytest.raises(ConstraintError):
                objective_J(bad, eqsol.rho2, eqsol)
            neg = list(eqsol.rho1)
            neg[len(neg) // 2] = mp.mpf(-1)
            with pytest.raises(ConstraintError):
                objective_J(neg, eqsol.rho2, eqsol)


class TestZeroDistribution:
    def test_ks_decreases(self, eqsol, ctx, qcache):
        with ctx.workprec():
            def ks(n):
                zs = sorted(qcache(n).zeros)
                N = len(zs)
                d = mp.mpf(0)
                for i, z in enumerate(zs):
                    F = eqsol.lambda1_cdf(z) / 2
                    d = max(d, abs(F - mp.mpf(i) / N), abs(F - mp.mpf(i + 1) / N))
                return d

            k4, k8, k16 = ks(4), ks(8), ks(16)
            assert k4 > k8 > k16
            assert k16 < k4 / 2
