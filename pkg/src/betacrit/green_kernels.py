"""Green functions of the unperturbed exterior operators.

All kernels are normalized so that (H0 - lambda) G = delta with G >= 0 for
lambda < 0.  Exterior-ball kernels are returned per unit sphere measure
(divided by |S^{d-1}|), so that matrix assembly against the full volume
element reproduces the sector operator exactly.

Modified Bessel functions are evaluated through their exponentially scaled
variants, so kernels stay finite for any k*r that matters here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import ive, kve

from .errors import KernelLimitError
from .model import SPHERE_AREA, ProblemSpec, ValidationError


def halfline_kernel(bc: str, lam: float, x, xi):
    """Half-line kernel of -u'' - lambda with Dirichlet/Neumann condition at 0.

    (exp(-k|x-xi|) -/+ exp(-k(x+xi))) / (2k) with k = sqrt(-lambda); written
    through expm1 so the lambda -> 0- regime is cancellation-free.
    """
    if bc not in ("dirichlet", "neumann"):
        raise ValidationError(f"unsupported half-line boundary condition {bc!r}")
    if lam >= 0:
        raise ValidationError("half-line kernel needs lambda < 0; use the limit kernel at 0")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = math.sqrt(-lam)
    diff = np.abs(x - xi)
    rmin = np.minimum(x, xi)
    base = np.exp(-k * diff)
    if bc == "dirichlet":
        # exp(-k|x-xi|) - exp(-k(x+xi)) = exp(-k|x-xi|) * (1 - exp(-2k min))
        return base * (-np.expm1(-2.0 * k * rmin)) / (2.0 * k)
    return base * (1.0 + np.exp(-2.0 * k * rmin)) / (2.0 * k)


def halfline_limit_kernel(bc: str, x, xi):
    """Zero-energy limit of the half-line kernel: min(x, xi) (Dirichlet only)."""
    if bc != "dirichlet":
        raise KernelLimitError("limit kernel divergent for the Neumann half-line")
    return np.minimum(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))


def _bessel_order(d: int, l: int) -> float:
    return l + 0.5 * d - 1.0


def _bc_ratio(bc: str, d: int, nu: float, k: float, r0: float) -> tuple[float, float]:
    """Coefficient of the K-solution in the regular solution, split as
    (mantissa, exponent) with c_B = mantissa * exp(exponent)."""
    z0 = k * r0
    if bc == "dirichlet":
        return ive(nu, z0) / kve(nu, z0), 2.0 * z0
    # radial derivative of r^{1-d/2} C_nu(kr) at r0
    amp = (1.0 - 0.5 * d) / r0
    i_num = amp * ive(nu, z0) + k * (ive(nu + 1.0, z0) + (nu / z0) * ive(nu, z0))
    k_den = amp * kve(nu, z0) + k * (-kve(nu + 1.0, z0) + (nu / z0) * kve(nu, z0))
    return i_num / k_den, 2.0 * z0


def _radial_kernel_bessel(d, l, bc, lam, r0, rmin, rmax):
    """a == 1 sector kernel for lambda < 0 via scaled modified Bessels."""
    k = math.sqrt(-lam)
    nu = _bessel_order(d, l)
    zmin, zmax, z0 = k * rmin, k * rmax, k * r0
    ratio, ratio_exp = _bc_ratio(bc, d, nu, k, r0)
    amp = (rmin * rmax) ** (1.0 - 0.5 * d)
    direct = ive(nu, zmin) * kve(nu, zmax) * np.exp(zmin - zmax)
    image = ratio * kve(nu, zmin) * kve(nu, zmax) * np.exp(ratio_exp - zmin - zmax)
    return amp * (direct - image)


def _radial_limit_kernel(d, l, bc, r0, rmin, rmax):
    """Pointwise lambda -> 0- limit of the sector kernel (a == 1)."""
    q = l + d - 2
    if d == 1:
        if bc == "neumann":
            raise KernelLimitError("limit kernel divergent for the d=1 Neumann sector")
        return rmin - r0
    if d == 2 and l == 0:
        if bc == "neumann":
            raise KernelLimitError("limit kernel divergent for the d=2 Neumann sector 0")
        return np.log(rmin / r0)
    if bc == "dirichlet":
        u_reg = rmin ** l - r0 ** (2 * l + d - 2) * rmin ** (-q)
    else:
        u_reg = rmin ** l + (l / q) * r0 ** (2 * l + d - 2) * rmin ** (-q)
    return u_reg * rmax ** (-q) / (l + q)


def _sl_rhs(problem: ProblemSpec, l: int, lam: float):
    """Right-hand side of the first-order system for (u, p u') in the sector."""
    d = problem.dimension
    cent = l * (l + d - 2)

    def rhs(r, y):
        a = float(problem.coefficient_at(r))
        p = a * r ** (d - 1)
        q = a * cent * r ** (d - 3) - lam * r ** (d - 1)
        return [y[1] / p, q * y[0]]

    return rhs


def _exterior_solution_pair(d, l, bc, lam, r0):
    """(u_reg, u_dec, C) callables for a == 1; C normalizes G = u_reg u_dec / C."""
    if lam < 0:
        k = math.sqrt(-lam)
        nu = _bessel_order(d, l)
        ratio, ratio_exp = _bc_ratio(bc, d, nu, k, r0)

        def u_dec(r, _k=k, _nu=nu, _d=d):
            z = _k * np.asarray(r, dtype=float)
            return np.asarray(r, dtype=float) ** (1.0 - 0.5 * _d) * kve(_nu, z) * np.exp(-z)

        def u_reg(r, _k=k, _nu=nu, _d=d, _ratio=ratio, _rexp=ratio_exp):
            r = np.asarray(r, dtype=float)
            z = _k * r
            amp = r ** (1.0 - 0.5 * _d)
            return amp * (ive(_nu, z) * np.exp(z) - _ratio * kve(_nu, z) * np.exp(_rexp - z))

        return u_reg, u_dec, 1.0
    # zero-energy limit
    q = l + d - 2
    if d == 1:
        if bc == "neumann":
            raise KernelLimitError("limit kernel divergent for the d=1 Neumann sector")
        return (lambda r: np.asarray(r, dtype=float) - r0,
                lambda r: np.ones_like(np.asarray(r, dtype=float)), 1.0)
    if d == 2 and l == 0:
        if bc == "neumann":
            raise KernelLimitError("limit kernel divergent for the d=2 Neumann sector 0")
        return (lambda r: np.log(np.asarray(r, dtype=float) / r0),
                lambda r: np.ones_like(np.asarray(r, dtype=float)), 1.0)
    if bc == "dirichlet":
        coef = -r0 ** (2 * l + d - 2)
    else:
        coef = (l / q) * r0 ** (2 * l + d - 2)
    return (lambda r, c=coef: np.asarray(r, dtype=float) ** l + c * np.asarray(r, dtype=float) ** (-q),
            lambda r: np.asarray(r, dtype=float) ** (-q), float(l + q))


def _variable_a_pair(problem: ProblemSpec, l: int, bc: str, lam: float):
    """Solution pair for a variable coefficient: ODE inside [r0, r_flat],
    the a == 1 closed forms beyond."""
    d = problem.dimension
    r0 = problem.inner_radius
    rf = problem.flat_radius()
    if lam < 0:
        k = math.sqrt(-lam)
        nu = _bessel_order(d, l)

        def w_dec(r):
            z = k * np.asarray(r, dtype=float)
            return np.asarray(r, dtype=float) ** (1.0 - 0.5 * d) * kve(nu, z) * np.exp(-z)

        def w_dec_prime(r):
            r = np.asarray(r, dtype=float)
            z = k * r
            amp = r ** (1.0 - 0.5 * d)
            dk = -kve(nu + 1.0, z) + (nu / z) * kve(nu, z)
            return ((1.0 - 0.5 * d) / r) * amp * kve(nu, z) * np.exp(-z) + amp * k * dk * np.exp(-z)
    else:
        q = l + d - 2
        if d == 1 or (d == 2 and l == 0):
            if bc == "neumann":
                raise KernelLimitError("limit kernel divergent")
            w_dec = lambda r: np.ones_like(np.asarray(r, dtype=float))
            w_dec_prime = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        else:
            if bc == "neumann" and q <= 0:
                raise KernelLimitError("limit kernel divergent")
            w_dec = lambda r: np.asarray(r, dtype=float) ** (-q)
            w_dec_prime = lambda r: -q * np.asarray(r, dtype=float) ** (-q - 1)

    rhs = _sl_rhs(problem, l, lam)
    p_rf = float(problem.coefficient_at(rf)) * rf ** (d - 1)

    # decaying solution: integrate inward from the flattening radius
    y_dec0 = [float(w_dec(rf)), p_rf * float(w_dec_prime(rf))]
    sol_dec = solve_ivp(rhs, (rf, r0), y_dec0, dense_output=True,
                        rtol=1e-11, atol=1e-14, method="RK45")
    if not sol_dec.success:
        raise RuntimeError("decaying-solution integration failed: " + sol_dec.message)

    # regular solution: integrate outward from the obstacle
    y_reg0 = [0.0, 1.0] if bc == "dirichlet" else [1.0, 0.0]
    sol_reg = solve_ivp(rhs, (r0, rf), y_reg0, dense_output=True,
                        rtol=1e-11, atol=1e-14, method="RK45")
    if not sol_reg.success:
        raise RuntimeError("regular-solution integration failed: " + sol_reg.message)

    # continue the regular solution past r_flat with the a == 1 fundamental pair
    u_rf, pu_rf = sol_reg.y[:, -1]
    du_rf = pu_rf / p_rf
    if lam < 0:
        k = math.sqrt(-lam)
        nu = _bessel_order(d, l)

        def bessel_i(r):
            z = k * np.asarray(r, dtype=float)
            return np.asarray(r, dtype=float) ** (1.0 - 0.5 * d) * ive(nu, z) * np.exp(z)

        def bessel_i_prime(r):
            r = np.asarray(r, dtype=float)
            z = k * r
            amp = r ** (1.0 - 0.5 * d)
            di = ive(nu + 1.0, z) + (nu / z) * ive(nu, z)
            return ((1.0 - 0.5 * d) / r) * amp * ive(nu, z) * np.exp(z) + amp * k * di * np.exp(z)

        w_grow, w_grow_prime = bessel_i, bessel_i_prime
    else:
        if d == 2 and l == 0:
            w_grow = lambda r: np.log(np.asarray(r, dtype=float))
            w_grow_prime = lambda r: 1.0 / np.asarray(r, dtype=float)
        elif d == 1:
            w_grow = lambda r: np.asarray(r, dtype=float)
            w_grow_prime = lambda r: np.ones_like(np.asarray(r, dtype=float))
        else:
            w_grow = lambda r: np.asarray(r, dtype=float) ** l
            w_grow_prime = lambda r: l * np.asarray(r, dtype=float) ** (l - 1)

    wr = float(w_grow(rf) * w_dec_prime(rf) - w_grow_prime(rf) * w_dec(rf))
    coef_grow = (u_rf * float(w_dec_prime(rf)) - du_rf * float(w_dec(rf))) / wr
    coef_dec = (du_rf * float(w_grow(rf)) - u_rf * float(w_grow_prime(rf))) / wr

    def u_reg(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r <= rf
        if inner.any():
            out[inner] = sol_reg.sol(r[inner])[0]
        if (~inner).any():
            ro = r[~inner]
            out[~inner] = coef_grow * w_grow(ro) + coef_dec * w_dec(ro)
        return out

    def u_dec(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r < rf
        if inner.any():
            out[inner] = sol_dec.sol(r[inner])[0]
        if (~inner).any():
            out[~inner] = w_dec(r[~inner])
        return out

    # p (u_dec u_reg' - u_dec' u_reg) is constant; evaluate at r_flat
    c_norm = p_rf * (float(w_dec(rf)) * du_rf - float(w_dec_prime(rf)) * u_rf)
    return u_reg, u_dec, c_norm


def radial_solution_pair(problem: ProblemSpec, lam: float, sector: int | None = None):
    """(u_reg, u_dec, C) with G_l(r, rho) = u_reg(min) u_dec(max) / C.

    The kernel here is the sector kernel against the measure r^{d-1} dr,
    without the sphere-area normalization applied by ``radial_kernel``.
    """
    if problem.geometry != "exterior_ball":
        raise ValidationError("radial kernels require the exterior ball geometry")
    if lam > 0:
        raise ValidationError("radial kernel needs lambda <= 0")
    l = problem.sector if sector is None else sector
    bc = problem.effective_bc(l)
    if problem.coefficient is None:
        return _exterior_solution_pair(problem.dimension, l, bc, lam, problem.inner_radius)
    return _variable_a_pair(problem, l, bc, lam)


def radial_kernel(problem: ProblemSpec, lam: float, r, rho):
    """Sector Green function of the exterior ball, per unit sphere measure.

    For lambda = 0 the pointwise limit kernel is returned where it exists
    (Dirichlet for all d; Neumann only when the sector decays at infinity).
    """
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    rmin = np.minimum(r, rho)
    rmax = np.maximum(r, rho)
    area = SPHERE_AREA[problem.dimension]
    l = problem.sector
    bc = problem.effective_bc()
    if problem.coefficient is None:
        if lam < 0:
            g = _radial_kernel_bessel(problem.dimension, l, bc, lam,
                                      problem.inner_radius, rmin, rmax)
        elif lam == 0:
            g = _radial_limit_kernel(problem.dimension, l, bc,
                                     problem.inner_radius, rmin, rmax)
        else:
            raise ValidationError("radial kernel needs lambda <= 0")
        return g / area
    u_reg, u_dec, c_norm = radial_solution_pair(problem, lam)
    return u_reg(rmin) * u_dec(rmax) / c_norm / area


_FUNDAMENTAL_C3 = 1.0 / (4.0 * math.pi)


def halfspace_green(d: int, bc: str, x, xi):
    """Zero-energy half-space Green function by reflection (physical points).

    d=3: (1/4pi) (1/|x-xi| -/+ 1/|x-xi*|); d=2 Dirichlet:
    (1/2pi) ln(|x-xi*|/|x-xi|); the domain is x1 > 0.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    xi_star = xi.copy()
    xi_star[..., 0] = -xi_star[..., 0]
    direct = np.linalg.norm(x - xi, axis=-1)
    image = np.linalg.norm(x - xi_star, axis=-1)
    if d == 3:
        sgn = -1.0 if bc == "dirichlet" else 1.0
        return _FUNDAMENTAL_C3 * (1.0 / direct + sgn / image)
    if d == 2:
        if bc != "dirichlet":
            raise ValidationError("d=2 half-space kernel is supported for the Dirichlet condition")
        return np.log(image / direct) / (2.0 * math.pi)
    raise ValidationError("half-space kernels are implemented for d = 2, 3")


def halfspace_image_kernel(d: int, sign: str, n: float, center: float, y, sigma,
                           profile=None):
    """Rescaled near-boundary kernel of the shrinking-well family.

    Points live in the rescaled frame (original = center*e1 + point/n); the
    reflected argument picks up the shift 2*n*center along e1.  ``profile``
    is the radial profile of the well shape W (default: indicator of the unit
    ball).  Values vanish for points outside the rescaled half-space.
    """
    if sign not in ("minus", "plus"):
        raise ValidationError(f"sign must be 'minus' or 'plus', got {sign!r}")
    if d == 2 and sign == "plus":
        raise ValidationError("the d=2 rescaled kernel is defined for the minus (Dirichlet) case")
    if d not in (2, 3):
        raise ValidationError("rescaled kernels are implemented for d = 2, 3")
    if d == 2 and n <= 1.0:
        raise ValidationError("d=2 rescaled kernel needs n > 1 (log factor)")
    c = center if np.ndim(center) == 0 else float(np.asarray(center).reshape(-1)[0])
    if c <= 0:
        raise ValidationError("center must have a positive distance from the boundary")
    y = np.atleast_2d(np.asarray(y, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    shift = 2.0 * n * c
    sigma_star = sigma.copy()
    sigma_star[..., 0] = -sigma_star[..., 0]
    arg = y - sigma_star
    arg[..., 0] = arg[..., 0] + shift
    direct = np.linalg.norm(y - sigma, axis=-1)
    image = np.linalg.norm(arg, axis=-1)

    if profile is None:
        wy = (np.linalg.norm(y, axis=-1) <= 1.0).astype(float)
        ws = (np.linalg.norm(sigma, axis=-1) <= 1.0).astype(float)
    else:
        wy = profile(np.linalg.norm(y, axis=-1))
        ws = profile(np.linalg.norm(sigma, axis=-1))
    inside = (y[..., 0] > -n * c) & (sigma[..., 0] > -n * c)
    weight = np.sqrt(wy) * np.sqrt(ws) * inside

    with np.errstate(divide="ignore"):
        if d == 3:
            sgn = -1.0 if sign == "minus" else 1.0
            vals = _FUNDAMENTAL_C3 * (1.0 / direct + sgn / image)
        else:
            vals = np.log(image / direct) / (2.0 * math.pi * math.log(n))
    return vals * weight


@dataclass(frozen=True)
class GreenKernel:
    """Pointwise-evaluable kernel of (H0 - lambda)^{-1} for a problem."""

    problem: ProblemSpec
    lam: float

    def __post_init__(self):
        if self.lam > 0:
            raise ValidationError("kernels are defined for lambda <= 0")

    def evaluate(self, x, xi):
        if self.problem.geometry == "half_line":
            if self.lam == 0:
                return halfline_limit_kernel(self.problem.boundary_condition, x, xi)
            return halfline_kernel(self.problem.boundary_condition, self.lam, x, xi)
        if self.problem.geometry == "exterior_ball":
            return radial_kernel(self.problem, self.lam, x, xi)
        raise ValidationError("use the rescaled image kernels for half-space studies")

    __call__ = evaluate
