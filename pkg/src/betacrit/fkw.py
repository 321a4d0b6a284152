"""Constant-trace / zero-mean-flux boundary condition on the exterior ball.

With the uniform measure on the sphere the nonlocal condition decouples:
the radially symmetric sector obeys a Neumann condition, every higher sector
a Dirichlet one.  Solutions are reconstructed as u = alpha*v + w where v is
the auxiliary exterior solution with unit trace, w the Dirichlet resolvent of
the source, and alpha = -gamma/gamma1 balances the total flux.

Flux functionals are averaged over the sphere and oriented toward the
obstacle, which makes gamma1 positive for strongly negative energies and
gamma1(0-) = 1 in the classical d=3 unit-ball case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from . import birman_schwinger as bs
from .direct_spectrum import _segment_points, build_operator, dtn_coefficient
from .errors import (KernelLimitError, MethodDisagreement, NearSingularError,
                     ValidationError)
from .model import Potential, ProblemSpec, validate

DEFAULT_SECTOR_MAX = 3


def _require_fkw(problem: ProblemSpec):
    if problem.boundary_condition != "fkw" or problem.geometry != "exterior_ball":
        raise ValidationError("this operation needs an exterior-ball problem "
                              "with the constant-trace/zero-flux condition")


class RadialSolution:
    """Radial profile backed by the integrator's dense output.

    Calling it evaluates the profile; ``derivative`` evaluates p u'.
    """

    def __init__(self, pieces, scale: float, mesh: np.ndarray):
        self._pieces = pieces  # (lo, hi, dense, rescale)
        self._scale = scale
        self.mesh = mesh
        self.values = self(mesh)

    def _eval(self, r, component):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)  # beyond the integrated range the tail is ~0
        for lo, hi, dense, rescale in self._pieces:
            mask = (r >= lo - 1e-12) & (r <= hi + 1e-12)
            if mask.any():
                out[mask] = dense(np.clip(r[mask], lo, hi))[component] * rescale
        return out / self._scale

    def __call__(self, r):
        return self._eval(r, 0)

    def derivative(self, r):
        """p(r) u'(r) along the profile."""
        return self._eval(r, 1)


@dataclass(frozen=True)
class FkwSolution:
    """Sector-decomposed solution with its boundary constants."""

    alpha: float
    gamma: float
    gamma1: float
    lam: float
    sector_profiles: dict  # l -> (mesh, values)
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"alpha": self.alpha, "gamma": self.gamma, "gamma1": self.gamma1,
                "lambda": self.lam, "sectors": sorted(self.sector_profiles),
                "metadata": dict(self.meta)}


def _decay_init(problem: ProblemSpec, lam: float, r: float, l: int = 0):
    """(u, p u') of the decaying free solution at the truncation radius."""
    d = problem.dimension
    if lam == 0 and l + d - 2 <= 0:
        raise KernelLimitError("no decaying zero-energy solution in this sector")
    kappa = dtn_coefficient(d, l, lam, r)
    p = float(problem.coefficient_at(r)) * r ** (d - 1)
    return 1.0, p * kappa


def solve_v(problem: ProblemSpec, beta: float, potential: Potential, lam: float,
            r_max: float = 40.0, rtol: float = 1e-11):
    """Decaying radial solution with unit trace on the obstacle sphere.

    Integrated inward from the truncation radius (the stable direction for
    the decaying branch); raises ``NearSingularError`` when the energy sits
    at a Dirichlet eigenvalue, where no unit-trace solution exists.
    """
    _require_fkw(problem)
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if lam > 0:
        raise ValidationError("the exterior solve needs lambda <= 0")
    d = problem.dimension
    r0 = problem.inner_radius
    lo, hi = potential.support
    r_floor = max(hi + 1.0, problem.flat_radius() + 1.0, r0 + 1.0)
    if lam < 0:
        # the decaying branch grows inward like e^{k(r_max - r)}: cap the
        # exponent; the decay closure is exact at any radius past the well
        k = math.sqrt(-lam)
        r_max = max(r_floor, min(r_max, r_floor + 40.0 / max(k, 1.0)))
    else:
        r_max = max(r_max, r_floor)

    def rhs(r, y):
        a = float(problem.coefficient_at(r))
        p = a * r ** (d - 1)
        w = r ** (d - 1)
        q = -beta * float(potential(r)) * w
        return [y[1] / p, (q - lam * w) * y[0]]

    y = list(_decay_init(problem, lam, r_max))
    segments = _segment_points(problem, potential, r0, r_max)[::-1]
    width = max(hi - lo, 1e-6)
    rescale = 1.0
    pieces = []
    umax = 0.0
    for b0, a0 in zip(segments[:-1], segments[1:]):
        inside = a0 >= lo - 1e-15 and b0 <= hi + 1e-15
        max_step = min(b0 - a0, width / 8) if inside else b0 - a0
        sol = solve_ivp(rhs, (b0, a0), y, dense_output=True, rtol=rtol,
                        atol=1e-12, max_step=max_step)
        if not sol.success:
            raise RuntimeError("exterior solve failed: " + sol.message)
        pieces.append((a0, b0, sol.sol, rescale))
        umax = max(umax, abs(rescale) * float(np.max(np.abs(sol.y[0]))))
        # keep the state O(1); only the ratio to the trace matters
        mag = max(abs(sol.y[0, -1]), abs(sol.y[1, -1]), 1e-300)
        rescale *= mag
        y = [sol.y[0, -1] / mag, sol.y[1, -1] / mag]
    u_at_r0 = y[0] * rescale
    if abs(u_at_r0) < 1e-6 * umax:
        raise NearSingularError("energy sits at a Dirichlet eigenvalue; "
                                "the unit-trace solution degenerates")
    mesh = np.linspace(r0, r_max, 1201)
    return RadialSolution(pieces, u_at_r0, mesh)


def gamma1(problem: ProblemSpec, beta: float, potential: Potential, lam: float,
           r_max: float = 40.0) -> float:
    """Mean boundary flux of the unit-trace solution, oriented to be positive
    for energies below the potential well."""
    v = solve_v(problem, beta, potential, lam, r_max=r_max)
    r0 = problem.inner_radius
    p0 = float(problem.coefficient_at(r0)) * r0 ** (problem.dimension - 1)
    v_prime = float(v.derivative(r0)) / p0
    return -v_prime


def _dirichlet_resolvent(problem: ProblemSpec, beta: float, potential: Potential,
                         lam: float, f, sector: int, h: float, r_max: float):
    """Truncated Dirichlet solve (H_beta - lambda) w = f with the decay closure.

    The resolvent decomposition always uses the Dirichlet condition, whatever
    the sector's effective condition is.
    """
    forced = ProblemSpec(problem.dimension, problem.geometry, "dirichlet",
                         problem.radius, problem.coefficient, 0)
    op = build_operator(forced, potential, beta, h, r_max, sector=sector,
                        closure_lambda=lam)
    mesh = op.mesh
    f_vals = np.asarray(f(mesh), dtype=float)
    a_diag = op.diag - lam * op.mass
    rhs = op.mass * f_vals
    ab = np.zeros((3, a_diag.size))
    ab[0, 1:] = op.off
    ab[1, :] = a_diag
    ab[2, :-1] = op.off
    w = solve_banded((1, 1), ab, rhs)
    if float(np.max(np.abs(w))) > 1e10 * (float(np.max(np.abs(f_vals))) + 1e-300):
        raise NearSingularError("resolvent solve near-singular at this energy")
    return mesh, w


def _inner_flux(mesh: np.ndarray, w: np.ndarray, h: float) -> float:
    """-w'(r0) for a Dirichlet profile (w(r0) = 0 eliminated from the mesh)."""
    # one-sided fourth-order stencil including the boundary zero
    u0, u1, u2, u3, u4 = 0.0, w[0], w[1], w[2], w[3]
    deriv = (-25 * u0 + 48 * u1 - 36 * u2 + 16 * u3 - 3 * u4) / (12 * h)
    return -deriv


def solve_fkw(problem: ProblemSpec, beta: float, potential: Potential, lam: float,
              f: dict, h: float = 1e-3, r_max: float = 40.0,
              gamma1_tol: float = 1e-9) -> FkwSolution:
    """Solve (H_beta - lambda) u = f under the constant-trace/zero-flux pair.

    ``f`` maps sector indices to radial source callables.  The symmetric
    sector combines the Dirichlet resolvent with the unit-trace solution so
    both boundary conditions hold; higher sectors are pure Dirichlet solves.
    """
    _require_fkw(problem)
    if lam >= 0:
        raise ValidationError("source problems are solved below the continuous spectrum")
    lo, hi = potential.support
    r_max = max(r_max, hi + 10.0)
    g1 = gamma1(problem, beta, potential, lam, r_max=r_max)
    sector_profiles = {}
    alpha = 0.0
    gamma = 0.0
    f0 = f.get(0)
    if f0 is not None:
        mesh0, w0 = _dirichlet_resolvent(problem, beta, potential, lam, f0, 0,
                                         h, r_max)
        gamma = _inner_flux(mesh0, w0, h)
        if abs(g1) < gamma1_tol * max(1.0, abs(gamma)):
            raise NearSingularError(
                "zero-mean-flux constant is degenerate (gamma1 ~ 0): "
                "the energy is too close to an eigenvalue of the nonlocal problem")
        alpha = -gamma / g1
        v = solve_v(problem, beta, potential, lam, r_max=r_max)
        u0 = alpha * v(mesh0) + w0
        mesh0 = np.concatenate([[problem.inner_radius], mesh0])
        u0 = np.concatenate([[alpha], u0])
        sector_profiles[0] = (mesh0, u0)
    for l, fl in sorted(f.items()):
        if l == 0 or fl is None:
            continue
        mesh_l, w_l = _dirichlet_resolvent(problem, beta, potential, lam, fl, l,
                                           h, r_max)
        mesh_l = np.concatenate([[problem.inner_radius], mesh_l])
        w_l = np.concatenate([[0.0], w_l])
        sector_profiles[l] = (mesh_l, w_l)
    if not sector_profiles:
        r0 = problem.inner_radius
        sector_profiles[0] = (np.array([r0, r_max]), np.zeros(2))
    return FkwSolution(alpha=float(alpha), gamma=float(gamma), gamma1=float(g1),
                       lam=lam, sector_profiles=sector_profiles,
                       meta={"h": h, "r_max": r_max, "beta": beta,
                             "flux_orientation": "toward the obstacle"})


def fkw_norm_limit(problem: ProblemSpec, potential: Potential, lambda_grid=None,
                   m: int = bs.DEFAULT_M, sector_max: int = DEFAULT_SECTOR_MAX,
                   tol: float = bs.DEFAULT_EIG_TOL) -> dict:
    """Classify the sandwiched-resolvent norm per sector as lambda -> 0-.

    Sector 0 carries the Neumann-type reduction of the nonlocal condition,
    higher sectors are Dirichlet.  The overall verdict is divergent as soon
    as any sector diverges.
    """
    _require_fkw(problem)
    if lambda_grid is None:
        lambda_grid = bs.default_lambda_grid((2, 8))
    per_sector = {}
    overall = "bounded"
    mu_star = 0.0
    top = 1 if problem.dimension == 1 else sector_max
    for l in range(0, top + 1):
        rep = bs.mu_curve(problem.with_sector(l), potential,
                          lambda_grid=lambda_grid, m=m, tol=tol)
        cls = bs.classify_limit(rep)
        per_sector[l] = cls
        if cls.verdict == "divergent":
            overall = "divergent"
        elif cls.verdict == "indeterminate" and overall != "divergent":
            overall = "indeterminate"
        elif cls.verdict == "bounded":
            mu_star = max(mu_star, cls.mu_star)
    return {"verdict": overall, "mu_star": mu_star if overall == "bounded" else None,
            "sectors": per_sector}


def beta_critical_fkw(problem: ProblemSpec, potential: Potential,
                      m: int = bs.DEFAULT_M, sector_max: int = DEFAULT_SECTOR_MAX,
                      crosscheck: bool = True, agree_tol: float = 1e-2):
    """Coupling threshold for the nonlocal condition (uniform measure).

    1/mu* over the sector family when the norms stay bounded, 0 when they
    diverge; cross-checked against the direct eigenvalue sweep with the
    matching per-sector conditions.
    """
    _require_fkw(problem)
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if potential.is_zero():
        return bs.NO_BOUND_STATES
    limit = fkw_norm_limit(problem, potential, m=m, sector_max=sector_max)
    if limit["verdict"] == "divergent":
        return 0.0
    if limit["verdict"] == "indeterminate":
        raise ValidationError("sector classification indeterminate; refine the grid")
    mu_by_sector = {}
    top = 1 if problem.dimension == 1 else sector_max
    for l in range(0, top + 1):
        mat = bs.assemble(problem.with_sector(l), potential, 0.0, m=m)
        mu_by_sector[l] = bs.principal_eigenvalue(mat, bs.DEFAULT_EIG_TOL)
    value = 1.0 / max(mu_by_sector.values())
    if crosscheck:
        from .direct_spectrum import beta_critical_direct
        direct = beta_critical_direct(problem, potential, tol=1e-6)
        if isinstance(direct, float) and abs(direct - value) > agree_tol * max(value, direct):
            raise MethodDisagreement(
                f"kernel and direct thresholds disagree: {value:.6g} vs {direct:.6g}",
                values={"kernel": value, "direct": direct})
    return value
