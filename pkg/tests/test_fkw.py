import math

import numpy as np
import pytest
from scipy.optimize import brentq

from betacrit import birman_schwinger as bs
from betacrit import direct_spectrum as ds
from betacrit import fkw
from betacrit.errors import NearSingularError, ValidationError
from betacrit.model import Potential, ProblemSpec, Profile

BALL3 = ProblemSpec(3, "exterior_ball", "fkw", radius=1.0)
BALL2 = ProblemSpec(2, "exterior_ball", "fkw", radius=1.0)
POT = Potential(Profile.indicator(1.5, 2.5))


class TestExteriorSolution:
    def test_free_d3_is_inverse_r(self):
        v = fkw.solve_v(BALL3, 0.0, POT, 0.0)
        r = np.linspace(1.0, 10.0, 100)
        assert v(r) == pytest.approx(1.0 / r, abs=1e-9)

    def test_d2_flattens_toward_threshold(self):
        # convergence to the constant is logarithmic: 1 - v(r) ~ ln r / ln(2/k)
        r = np.linspace(1.0, 5.0, 50)
        gaps = []
        for lam in (-1e-2, -1e-4, -1e-8):
            v = fkw.solve_v(BALL2, 0.0, POT, lam)
            gaps.append(float(np.max(np.abs(v(r) - 1.0))))
        assert gaps[0] > gaps[1] > gaps[2]
        k = 1e-4
        level = math.log(5.0) / (math.log(2.0 / k) - 0.5772156649015329)
        assert gaps[2] == pytest.approx(level, rel=0.05)

    def test_positive_below_the_well(self):
        for problem, beta in ((BALL3, 1.0), (BALL2, 2.0)):
            lam = -beta * POT.max_value() - 1.0
            v = fkw.solve_v(problem, beta, POT, lam)
            assert np.all(v(np.linspace(1.0, 8.0, 200)) > 0.0)

    def test_trace_is_one(self):
        v = fkw.solve_v(BALL3, 0.7, POT, -1.3)
        assert float(v(1.0)) == pytest.approx(1.0, rel=1e-12)

    def test_requires_fkw_problem(self):
        prob = ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0)
        with pytest.raises(ValidationError):
            fkw.solve_v(prob, 0.0, POT, -1.0)

    def test_singular_at_a_dirichlet_eigenvalue(self):
        dirichlet = ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0)
        beta = 4.0
        lam_d, _ = ds.ground_state(dirichlet, POT, beta)
        with pytest.raises(NearSingularError):
            fkw.solve_v(BALL3, beta, POT, lam_d)


class TestGamma1:
    def test_classical_limit_value(self):
        assert fkw.gamma1(BALL3, 0.0, POT, 0.0) == pytest.approx(1.0, abs=1e-4)

    def test_d2_vanishes_at_threshold(self):
        vals = [fkw.gamma1(BALL2, 0.0, POT, lam) for lam in (-1e-2, -1e-4, -1e-6, -1e-8)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.12

    def test_positive_for_strongly_negative_energies(self):
        beta = 1.0
        floor = -beta * POT.max_value() - 1.0
        for lam in np.linspace(floor, floor - 9.0, 10):
            assert fkw.gamma1(BALL3, beta, POT, float(lam)) > 0.0


class TestSolveFkw:
    def test_zero_source_zero_solution(self):
        sol = fkw.solve_fkw(BALL3, 0.5, POT, -1.0, {})
        assert sol.alpha == 0.0
        assert all(np.all(v == 0.0) for _, v in sol.sector_profiles.values())

    def test_boundary_pair_holds(self):
        f0 = lambda r: np.exp(-((r - 2.0) / 0.5) ** 2)
        sol = fkw.solve_fkw(BALL3, 0.5, POT, -1.0, {0: f0})
        mesh0, u0 = sol.sector_profiles[0]
        assert u0[0] == pytest.approx(sol.alpha, rel=1e-12)
        assert sol.alpha * sol.gamma1 + sol.gamma == pytest.approx(0.0, abs=1e-12)

    def test_sector0_equals_neumann_resolvent(self):
        f0 = lambda r: np.exp(-((r - 2.0) / 0.5) ** 2)
        h = 1e-3
        sol = fkw.solve_fkw(BALL3, 0.5, POT, -1.0, {0: f0}, h=h)
        mesh0, u0 = sol.sector_profiles[0]
        from scipy.linalg import solve_banded
        neu = ProblemSpec(3, "exterior_ball", "neumann", radius=1.0)
        op = ds.build_operator(neu, POT, 0.5, h, 40.0, sector=0,
                               closure_lambda=-1.0)
        ab = np.zeros((3, op.diag.size))
        ab[0, 1:] = op.off
        ab[1, :] = op.diag + op.mass
        ab[2, :-1] = op.off
        w = solve_banded((1, 1), ab, op.mass * f0(op.mesh))
        gap = np.max(np.abs(np.interp(op.mesh, mesh0, u0) - w))
        assert gap < 5e-6 * np.max(np.abs(w))

    def test_higher_sector_source_is_pure_dirichlet(self):
        f1 = lambda r: np.exp(-((r - 2.0) / 0.5) ** 2)
        sol = fkw.solve_fkw(BALL3, 0.5, POT, -1.0, {1: f1})
        assert sol.alpha == 0.0
        mesh1, u1 = sol.sector_profiles[1]
        assert u1[0] == 0.0

    def test_alpha_continuous_in_lambda(self):
        f0 = lambda r: np.exp(-((r - 2.0) / 0.5) ** 2)
        lams = (-1.00, -1.01, -1.02)
        alphas = [fkw.solve_fkw(BALL3, 0.5, POT, lam, {0: f0}).alpha
                  for lam in lams]
        d1 = abs(alphas[1] - alphas[0])
        d2 = abs(alphas[2] - alphas[1])
        assert d1 < 0.05 * abs(alphas[0])
        assert d2 == pytest.approx(d1, rel=0.2)

    def test_near_singular_at_nonlocal_eigenvalue(self):
        beta = 4.0
        lam0, _ = ds.ground_state(BALL3, POT, beta)  # sector-0 state of the pair
        g_at = fkw.gamma1(BALL3, beta, POT, lam0)
        assert abs(g_at) < 1e-5  # the flux constant degenerates exactly there
        f0 = lambda r: np.exp(-((r - 2.0) / 0.5) ** 2)
        with pytest.raises(NearSingularError):
            fkw.solve_fkw(BALL3, beta, POT, lam0, {0: f0}, gamma1_tol=1e-4)


class TestSectorEquivalence:
    def test_matrices_match_entrywise(self):
        for l, bc in ((0, "neumann"), (1, "dirichlet"), (2, "dirichlet")):
            plain = ProblemSpec(3, "exterior_ball", bc, radius=1.0, sector=l)
            a = bs.assemble(BALL3.with_sector(l), POT, -0.5, m=48)
            b = bs.assemble(plain, POT, -0.5, m=48)
            assert np.array_equal(a.entries, b.entries)


class TestNormLimit:
    def test_d3_bounded(self):
        out = fkw.fkw_norm_limit(BALL3, POT, m=200, sector_max=2)
        assert out["verdict"] == "bounded"
        assert out["mu_star"] > 0
        assert out["sectors"][0].verdict == "bounded"

    def test_d2_divergent_through_sector0(self):
        out = fkw.fkw_norm_limit(BALL2, POT, m=200, sector_max=2)
        assert out["verdict"] == "divergent"
        assert out["sectors"][0].verdict == "divergent"
        assert out["sectors"][0].log_divergence
        assert out["sectors"][1].verdict == "bounded"

    def test_d1_divergent(self):
        prob = ProblemSpec(1, "exterior_ball", "fkw", radius=1.0)
        pot = Potential(Profile.indicator(1.5, 2.5))
        out = fkw.fkw_norm_limit(prob, pot, m=200)
        assert out["verdict"] == "divergent"

    def test_zero_potential_trivially_bounded(self):
        out = fkw.fkw_norm_limit(BALL3, Potential(Profile.indicator(1.5, 2.5), 0.0),
                                 m=64, sector_max=1)
        assert out["verdict"] == "bounded"
        assert out["mu_star"] == 0.0


class TestBetaCriticalFkw:
    def test_d3_positive_and_matched_by_oracle(self):
        value = fkw.beta_critical_fkw(BALL3, POT, m=300)
        k = brentq(lambda k: k * 1.0 + math.atan(1.5 * k) - 0.5 * math.pi,
                   1e-6, 3.0)
        assert value == pytest.approx(k * k, rel=1e-3)

    def test_d3_sector0_carries_the_threshold(self):
        limit = fkw.fkw_norm_limit(BALL3, POT, m=240, sector_max=3)
        mus = {l: c.mu_star for l, c in limit["sectors"].items()}
        assert max(mus, key=mus.get) == 0

    def test_d2_zero(self):
        assert fkw.beta_critical_fkw(BALL2, POT, m=240) == 0.0

    def test_zero_potential_sentinel(self):
        out = fkw.beta_critical_fkw(BALL3, Potential(Profile.indicator(1.5, 2.5), 0.0))
        assert isinstance(out, bs.NoBoundStates)
