import math

import numpy as np
import pytest

from betacrit.errors import KernelLimitError, ValidationError
from betacrit.green_kernels import (GreenKernel, halfline_kernel,
                                    halfline_limit_kernel, halfspace_green,
                                    halfspace_image_kernel, radial_kernel)
from betacrit.model import (CoefficientProfile, ProblemSpec, Profile,
                            SPHERE_AREA)

import oracles as oc

RNG = np.random.default_rng(20240817)


class TestHalfLine:
    def test_dirichlet_closed_form_value(self):
        val = halfline_kernel("dirichlet", -1.0, 1.0, 2.0)
        expected = (math.exp(-1.0) - math.exp(-3.0)) / 2.0
        assert val == pytest.approx(expected, rel=1e-14)

    def test_dirichlet_against_bvp_solve(self):
        x = np.array([0.5, 1.0, 1.7, 2.4])
        ref = oc.bvp_green_halfline("dirichlet", -1.0, 2.0, x)
        val = halfline_kernel("dirichlet", -1.0, x, 2.0)
        assert val == pytest.approx(ref, rel=2e-4)

    def test_dirichlet_vanishes_at_the_boundary(self):
        assert halfline_kernel("dirichlet", -1.0, 1e-14, 2.0) == pytest.approx(0.0, abs=1e-13)

    def test_neumann_corner_value(self):
        assert halfline_kernel("neumann", -1.0, 1e-300, 1e-300) == pytest.approx(1.0)

    def test_neumann_against_bvp_solve(self):
        x = np.array([0.3, 1.1, 2.2])
        ref = oc.bvp_green_halfline("neumann", -1.0, 1.5, x)
        val = halfline_kernel("neumann", -1.0, x, 1.5)
        assert val == pytest.approx(ref, rel=2e-4)

    def test_positive_lambda_rejected(self):
        with pytest.raises(ValidationError):
            halfline_kernel("dirichlet", 0.0, 1.0, 2.0)

    def test_limit_kernel_is_min(self):
        assert halfline_limit_kernel("dirichlet", 1.0, 2.0) == 1.0
        x = RNG.uniform(0.1, 5.0, 20)
        assert halfline_limit_kernel("dirichlet", x, x) == pytest.approx(x)
        assert halfline_limit_kernel("dirichlet", 1e-15, 3.0) == pytest.approx(0.0, abs=1e-14)

    def test_limit_kernel_neumann_divergent(self):
        with pytest.raises(KernelLimitError):
            halfline_limit_kernel("neumann", 1.0, 2.0)

    def test_limit_reached_from_below(self):
        val = halfline_kernel("dirichlet", -1e-8, 1.0, 2.0)
        assert val == pytest.approx(1.0, abs=1e-3)


class TestRadial:
    def test_d2_sector0_limit_value(self):
        prob = ProblemSpec(2, "exterior_ball", "dirichlet", radius=1.0)
        assert radial_kernel(prob, 0.0, 2.0, 3.0) == pytest.approx(
            math.log(2.0) / (2.0 * math.pi), rel=1e-13)

    def test_d3_sector0_limit_formula(self):
        prob = ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0)
        r, rho = 2.2, 3.7
        expected = (min(r, rho) - 1.0) / (r * rho) / (4.0 * math.pi)
        assert radial_kernel(prob, 0.0, r, rho) == pytest.approx(expected, rel=1e-13)

    def test_dirichlet_vanishes_at_obstacle(self):
        for d in (1, 2, 3):
            prob = ProblemSpec(d, "exterior_ball", "dirichlet", radius=1.0)
            for lam in (0.0, -0.5):
                assert radial_kernel(prob, lam, 1.0, 2.5) == pytest.approx(0.0, abs=1e-13)

    def test_neumann_low_dimension_limit_divergent(self):
        for d in (1, 2):
            prob = ProblemSpec(d, "exterior_ball", "neumann", radius=1.0)
            with pytest.raises(KernelLimitError):
                radial_kernel(prob, 0.0, 2.0, 3.0)

    def test_positive_energy_rejected(self):
        prob = ProblemSpec(2, "exterior_ball", "dirichlet", radius=1.0)
        with pytest.raises(ValidationError):
            radial_kernel(prob, 0.5, 2.0, 3.0)

    def test_neumann_d3_limit_is_inverse_max(self):
        prob = ProblemSpec(3, "exterior_ball", "neumann", radius=1.0)
        val = radial_kernel(prob, 0.0, 2.0, 3.0)
        assert val == pytest.approx(1.0 / 3.0 / (4.0 * math.pi), rel=1e-13)

    @pytest.mark.parametrize("d,l,bc", [(2, 0, "dirichlet"), (2, 1, "neumann"),
                                        (3, 0, "neumann"), (3, 2, "dirichlet"),
                                        (1, 0, "dirichlet"), (1, 1, "neumann")])
    def test_against_radial_bvp_oracle(self, d, l, bc):
        prob = ProblemSpec(d, "exterior_ball", bc, radius=1.0, sector=l)
        lam = -0.7
        xi = 2.0
        r = np.array([1.4, 2.6, 3.5])
        ref = oc.bvp_green_radial(d, l, bc, lam, 1.0, xi, r)
        val = radial_kernel(prob, lam, r, xi) * SPHERE_AREA[d]
        assert val == pytest.approx(ref, rel=5e-4)

    def test_variable_coefficient_against_bvp_oracle(self):
        a = CoefficientProfile(Profile(np.array([1.0, 1.5, 2.0]),
                                       np.array([2.0, 1.4, 1.0])), 2.0)
        prob = ProblemSpec(2, "exterior_ball", "neumann", radius=1.0,
                           coefficient=a)
        lam = -0.9
        r = np.array([1.3, 2.1, 3.0])
        ref = oc.bvp_green_radial(2, 0, "neumann", lam, 1.0, 1.8, r, coefficient=a)
        val = radial_kernel(prob, lam, r, 1.8) * SPHERE_AREA[2]
        assert val == pytest.approx(ref, rel=5e-4)

    def test_variable_coefficient_limit_kernel(self):
        a = CoefficientProfile(Profile(np.array([1.0, 2.0]),
                                       np.array([1.5, 1.0])), 2.0)
        prob = ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0,
                           coefficient=a)
        near = radial_kernel(prob, -1e-9, 2.0, 3.0)
        limit = radial_kernel(prob, 0.0, 2.0, 3.0)
        assert near == pytest.approx(limit, rel=1e-3)


class TestKernelProperties:
    def problems(self):
        yield ProblemSpec(1, "half_line", "dirichlet"), (0.2, 6.0)
        yield ProblemSpec(1, "half_line", "neumann"), (0.2, 6.0)
        yield ProblemSpec(2, "exterior_ball", "dirichlet", radius=1.0), (1.1, 6.0)
        yield ProblemSpec(3, "exterior_ball", "neumann", radius=1.0), (1.1, 6.0)
        yield ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0, sector=2), (1.1, 6.0)

    def test_symmetry_on_random_pairs(self):
        for prob, (lo, hi) in self.problems():
            kern = GreenKernel(prob, -0.6)
            x = RNG.uniform(lo, hi, 40)
            y = RNG.uniform(lo, hi, 40)
            assert kern(x, y) == pytest.approx(kern(y, x), rel=1e-12)

    def test_monotone_in_lambda(self):
        for prob, (lo, hi) in self.problems():
            if prob.sector > 0:
                continue
            x = RNG.uniform(lo, hi, 25)
            y = RNG.uniform(lo, hi, 25)
            g1 = GreenKernel(prob, -2.0)(x, y)
            g2 = GreenKernel(prob, -0.5)(x, y)
            assert np.all(g2 >= g1 - 1e-13)
            assert np.all(g1 >= -1e-13)

    def test_limit_consistency_order_sqrt_lambda(self):
        prob = ProblemSpec(1, "half_line", "dirichlet")
        x = RNG.uniform(0.3, 3.0, 30)
        y = RNG.uniform(0.3, 3.0, 30)
        lim = halfline_limit_kernel("dirichlet", x, y)
        for lam in (-1e-4, -1e-6):
            gap = np.max(np.abs(halfline_kernel("dirichlet", lam, x, y) - lim))
            assert gap < 10.0 * math.sqrt(-lam)

    def test_defining_equation_residual_shrinks(self):
        # apply the operator with central differences to a kernel column
        prob = ProblemSpec(3, "exterior_ball", "dirichlet", radius=1.0)
        lam = -0.8
        xi = 2.0

        def residual(h):
            r = np.arange(2.6, 3.4, h)
            g = radial_kernel(prob, lam, r, xi)
            lap = (g[2:] - 2 * g[1:-1] + g[:-2]) / h ** 2
            grad = (g[2:] - g[:-2]) / (2 * h)
            rr = r[1:-1]
            res = -(lap + 2.0 / rr * grad) - lam * g[1:-1]
            return float(np.max(np.abs(res)))

        r1, r2 = residual(1e-3), residual(5e-4)
        assert r2 < 0.5 * r1  # second-order stencil on an exact solution


class TestHalfSpace:
    def test_image_term_vanishes_far_from_boundary(self):
        y = np.array([0.2, 0.1, -0.3])
        s = np.array([-0.4, 0.2, 0.1])
        far = halfspace_image_kernel(3, "minus", 5.0, 1e6, y, s).item()
        direct_only = 1.0 / np.linalg.norm(y - s) / (4 * math.pi)
        assert far == pytest.approx(direct_only, rel=1e-5)

    def test_d2_values_vanish_as_n_grows(self):
        # bounded n*x(n): the log prefactor sends values to zero like 1/ln n
        y = np.array([0.3, 0.1])
        s = np.array([-0.2, -0.4])
        vals = [halfspace_image_kernel(2, "minus", n, 1.0 / n, y, s).item()
                for n in (10.0, 1e3, 1e6)]
        assert vals[0] > vals[1] > vals[2] > 0
        assert vals[2] == pytest.approx(vals[0] * math.log(10.0) / math.log(1e6),
                                        rel=0.25)

    def test_d3_reflection_arithmetic(self):
        # image argument carries the reflected source plus the 2 n x(n) shift
        wide = Profile.indicator(0.0, 3.0)
        y = np.array([1.0, 0.0, 0.0])
        s = np.array([2.0, 0.0, 0.0])
        val = halfspace_image_kernel(3, "minus", 10.0, 1.0, y, s,
                                     profile=wide).item()
        expected = (1.0 - 1.0 / 23.0) / (4.0 * math.pi)
        assert val == pytest.approx(expected, rel=1e-13)
        # independent image-charge evaluation in physical coordinates
        n = 10.0
        center = np.array([1.0, 0.0, 0.0])
        phys = oc.reflection_kernel(3, "minus", center + y / n, center + s / n)
        assert val == pytest.approx(phys / n, rel=1e-12)

    def test_support_enforced(self):
        y = np.array([1.0, 0.0, 0.0])
        s = np.array([2.0, 0.0, 0.0])  # outside the unit ball
        assert halfspace_image_kernel(3, "minus", 10.0, 1.0, y, s) == 0.0

    def test_d2_plus_sign_unsupported(self):
        with pytest.raises(ValidationError):
            halfspace_image_kernel(2, "plus", 10.0, 0.1,
                                   np.array([0.1, 0.0]), np.array([0.2, 0.0]))

    def test_d2_needs_n_above_one(self):
        with pytest.raises(ValidationError):
            halfspace_image_kernel(2, "minus", 1.0, 0.1,
                                   np.array([0.1, 0.0]), np.array([0.2, 0.0]))

    def test_physical_green_function_symmetry(self):
        x = RNG.uniform(0.1, 2.0, (10, 3))
        xi = RNG.uniform(0.1, 2.0, (10, 3))
        assert halfspace_green(3, "dirichlet", x, xi) == pytest.approx(
            halfspace_green(3, "dirichlet", xi, x))
