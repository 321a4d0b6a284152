"""Direct negative-spectrum computations on truncated domains.

The radial operator -(a r^{d-1} u')'/r^{d-1} + centrifugal - beta V is
discretized by second-order finite differences built from the quadratic form,
so the matrix is symmetric tridiagonal.  Decay at infinity enters through an
exact boundary relation at the truncation radius: the zero-energy closure for
eigenvalue counting (which makes the count independent of the truncation),
and the energy-dependent closure inside the shooting solver for eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import kve

from . import birman_schwinger as bs
from .errors import UnconvergedError, ValidationError
from .model import Potential, ProblemSpec, validate

DEFAULT_H = 1e-3
DEFAULT_R_MAX = 30.0


def dtn_coefficient(d: int, l: int, lam: float, r: float) -> float:
    """Logarithmic derivative u'/u at radius r of the decaying free solution.

    At lambda = 0 the bounded solution takes over; its exponent is
    -(l+d-2) when that is negative and 0 otherwise (constant tail).
    """
    if lam == 0:
        return -max(l + d - 2, 0) / r
    k = math.sqrt(-lam)
    nu = l + 0.5 * d - 1.0
    z = k * r
    return l / r - k * kve(nu + 1.0, z) / kve(nu, z)


@dataclass(frozen=True)
class DiscreteOperator:
    """Symmetric tridiagonal pencil (A, M) for one angular sector."""

    mesh: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray
    beta: float
    lambda_dependence: bool = True  # the outer closure varies with the energy
    meta: dict = field(default_factory=dict)


def _sector_arrays(problem: ProblemSpec, potential: Potential, beta: float,
                   r: np.ndarray, l: int):
    d = problem.dimension
    a = problem.coefficient_at(r)
    cent = l * (l + d - 2)
    if cent == 0:
        q_cent = np.zeros_like(r)
    else:
        q_cent = a * cent * r ** float(d - 3)
    weight = r ** float(d - 1)
    h = float(r[1] - r[0]) if r.size > 1 else 1.0
    q = q_cent - beta * potential.cell_average(r, h) * weight
    return a, q, weight


def build_operator(problem: ProblemSpec, potential: Potential, beta: float,
                   h: float = DEFAULT_H, r_max: float = DEFAULT_R_MAX,
                   sector: int | None = None, closure_lambda: float = 0.0) -> DiscreteOperator:
    """Finite-difference pencil on [r_in, r_max] with the decay closure.

    ``closure_lambda`` selects the energy of the outer boundary relation;
    0 gives the threshold-exact closure used for counting.
    """
    d = problem.dimension
    l = problem.sector if sector is None else sector
    bc = problem.effective_bc(l)
    r_in = problem.inner_radius
    lo, hi = potential.support
    if r_max < hi + 1.0:
        r_max = hi + 5.0
    n = max(8, int(round((r_max - r_in) / h)))
    r = r_in + h * np.arange(n + 1)
    a, q, weight = _sector_arrays(problem, potential, beta, r, l)
    r_half = r[:-1] + 0.5 * h
    p_half = problem.coefficient_at(r_half) * r_half ** float(d - 1)
    kappa = dtn_coefficient(d, l, closure_lambda, r[-1])
    p_out = float(problem.coefficient_at(r[-1])) * r[-1] ** float(d - 1)

    # quadratic-form assembly over all nodes r_0..r_N
    diag_full = np.empty(n + 1)
    diag_full[1:-1] = (p_half[:-1] + p_half[1:]) / h + q[1:-1] * h
    diag_full[0] = p_half[0] / h + q[0] * 0.5 * h
    diag_full[-1] = p_half[-1] / h + q[-1] * 0.5 * h - p_out * kappa
    off_full = -p_half / h
    mass_full = weight * h
    mass_full[0] *= 0.5
    mass_full[-1] *= 0.5

    if bc == "dirichlet":
        # eliminate u(r_in) = 0; node 1 becomes a full interior cell
        mesh, diag, off = r[1:], diag_full[1:], off_full[1:]
        mass = mass_full[1:].copy()
        mass[0] = weight[1] * h
    elif bc == "neumann":
        mesh, diag, off, mass = r, diag_full, off_full, mass_full
    else:
        raise ValidationError(f"unsupported sector boundary condition {bc!r}")
    meta = {"h": h, "r_max": float(r[-1]), "sector": l, "bc": bc,
            "closure_lambda": closure_lambda}
    return DiscreteOperator(mesh, diag, off, mass, beta, True, meta)


def _sturm_count(diag: np.ndarray, off: np.ndarray, shift: np.ndarray | float = 0.0) -> int:
    """Number of eigenvalues below the shift for a symmetric tridiagonal."""
    d = (diag - shift).tolist()
    e = off.tolist()
    count = 0
    t = d[0]
    if t < 0:
        count += 1
    tiny = 1e-300
    for i in range(1, len(d)):
        denom = t if abs(t) > tiny else math.copysign(tiny, t if t != 0 else -1.0)
        t = d[i] - e[i - 1] * e[i - 1] / denom
        if t < 0:
            count += 1
    return count


def sector_count(problem: ProblemSpec, potential: Potential, beta: float,
                 h: float, r_max: float, sector: int) -> int:
    """Negative-eigenvalue count of one angular sector."""
    op = build_operator(problem, potential, beta, h, r_max, sector=sector,
                        closure_lambda=0.0)
    return _sturm_count(op.diag, op.off, 0.0)


def _total_count(problem: ProblemSpec, potential: Potential, beta: float,
                 h: float, r_max: float, l_cap: int = 400) -> int:
    """Sum of sector counts with multiplicities (sectors empty out monotonically)."""
    if problem.geometry == "half_line":
        return sector_count(problem, potential, beta, h, r_max, 0)
    if problem.dimension == 1:  # even/odd components of the punctured line
        return sum(sector_count(problem, potential, beta, h, r_max, l) for l in (0, 1))
    total = 0
    for l in range(l_cap + 1):
        c = sector_count(problem, potential, beta, h, r_max, l)
        if c == 0:
            break
        total += problem.sector_multiplicity(l) * c
    return total


def count_negative(problem: ProblemSpec, potential: Potential, beta: float,
                   h: float = DEFAULT_H, r_max: float = DEFAULT_R_MAX,
                   refine: bool = True) -> int:
    """Number of negative eigenvalues of the full operator at coupling beta.

    With ``refine`` the count is recomputed at half the mesh and at twice the
    truncation radius; disagreement raises ``UnconvergedError`` carrying all
    the counts.
    """
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if beta < 0:
        raise ValidationError("coupling must be nonnegative")
    if potential.is_zero() or beta == 0.0:
        return 0
    base = _total_count(problem, potential, beta, h, r_max)
    if not refine:
        return base
    checks = {
        (h, r_max): base,
        (0.5 * h, r_max): _total_count(problem, potential, beta, 0.5 * h, r_max),
        (h, 2.0 * r_max): _total_count(problem, potential, beta, h, 2.0 * r_max),
    }
    values = set(checks.values())
    if len(values) > 1:
        raise UnconvergedError(
            "negative-eigenvalue count did not stabilize under refinement",
            details={f"h={k[0]:g},R={k[1]:g}": v for k, v in checks.items()})
    return base


def _segment_points(problem, potential, r_in, r_max):
    cuts = {r_in, r_max}
    lo, hi = potential.support
    for c in (lo, hi):
        if r_in < c < r_max:
            cuts.add(float(c))
    rf = problem.flat_radius()
    if r_in < rf < r_max:
        cuts.add(float(rf))
    return sorted(cuts)


def _prufer_phase(problem: ProblemSpec, potential: Potential, beta: float,
                  lam: float, r_max: float, sector: int, rtol: float = 1e-10) -> float:
    """Phase of (u, p u') at r_max for the regular solution of the sector."""
    d = problem.dimension
    l = sector
    bc = problem.effective_bc(l)
    r_in = problem.inner_radius
    cent = l * (l + d - 2)

    def rhs(r, y):
        a = float(problem.coefficient_at(r))
        p = a * r ** (d - 1)
        w = r ** (d - 1)
        q = (a * cent * r ** (d - 3) if cent else 0.0) - beta * float(potential(r)) * w
        s, c = math.sin(y[0]), math.cos(y[0])
        return [c * c / p + (lam * w - q) * s * s]

    theta = 0.0 if bc == "dirichlet" else 0.5 * math.pi
    if problem.geometry == "half_line" and bc == "dirichlet" and r_in == 0.0:
        # p(0) = 1 in d = 1; nothing singular at the origin
        pass
    segments = _segment_points(problem, potential, r_in, r_max)
    lo_sup, hi_sup = potential.support
    width = max(hi_sup - lo_sup, 1e-6)
    for a0, b0 in zip(segments[:-1], segments[1:]):
        inside_support = a0 >= lo_sup - 1e-15 and b0 <= hi_sup + 1e-15
        max_step = min(b0 - a0, width / 8) if inside_support else b0 - a0
        sol = solve_ivp(rhs, (a0, b0), [theta], rtol=rtol, atol=1e-13,
                        max_step=max_step, method="RK45")
        if not sol.success:
            raise RuntimeError("phase integration failed: " + sol.message)
        theta = float(sol.y[0, -1])
    return theta


def _target_phase(problem: ProblemSpec, lam: float, r_max: float, sector: int) -> float:
    d = problem.dimension
    kappa = dtn_coefficient(d, sector, lam, r_max)
    p_out = float(problem.coefficient_at(r_max)) * r_max ** (d - 1)
    return math.atan2(1.0, p_out * kappa)


def phase_mismatch(problem: ProblemSpec, potential: Potential, beta: float,
                   lam: float, r_max: float = DEFAULT_R_MAX,
                   sector: int = 0) -> float:
    """theta(r_max) - theta_target; zero exactly at sector eigenvalues."""
    return (_prufer_phase(problem, potential, beta, lam, r_max, sector)
            - _target_phase(problem, lam, r_max, sector))


def ground_state(problem: ProblemSpec, potential: Potential, beta: float,
                 tol: float = 1e-10, r_max: float = DEFAULT_R_MAX,
                 sector: int = 0):
    """Lowest eigenvalue and radial profile, or None without bound states.

    Shooting on the phase mismatch with the energy-dependent decay closure;
    the eigenvalue is bracketed inside (-beta max V, 0).
    """
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if beta <= 0:
        raise ValidationError("ground-state search needs beta > 0")
    if potential.is_zero():
        return None
    lo, hi = potential.support
    r_max = max(r_max, hi + 10.0)
    vmax = beta * potential.max_value()
    lam_lo = -vmax - 1e-6
    lam_hi = -1e-12 * max(1.0, vmax)
    f_hi = phase_mismatch(problem, potential, beta, lam_hi, r_max, sector)
    if f_hi <= 0.0:
        return None
    f_lo = phase_mismatch(problem, potential, beta, lam_lo, r_max, sector)
    if f_lo >= 0.0:
        raise UnconvergedError(
            "shooting bracket failure: mismatch positive at the lower bound",
            details={"lambda_lo": lam_lo, "mismatch": f_lo})
    lam0 = brentq(lambda lam: phase_mismatch(problem, potential, beta, lam,
                                             r_max, sector),
                  lam_lo, lam_hi, xtol=tol)
    mesh, u = _eigenfunction(problem, potential, beta, lam0, r_max, sector)
    return float(lam0), (mesh, u)


def _eigenfunction(problem, potential, beta, lam, r_max, sector, n_mesh=4000):
    """Profile at a converged eigenvalue, normalized in the volume measure.

    The regular branch is integrated outward only up to the outer support
    edge; past the well the decaying branch is integrated inward from the
    truncation radius (the stable direction) and the two are glued by value.
    """
    d = problem.dimension
    l = sector
    bc = problem.effective_bc(l)
    r_in = problem.inner_radius
    cent = l * (l + d - 2)

    def rhs(r, y):
        a = float(problem.coefficient_at(r))
        p = a * r ** (d - 1)
        w = r ** (d - 1)
        q = (a * cent * r ** (d - 3) if cent else 0.0) - beta * float(potential(r)) * w
        return [y[1] / p, (q - lam * w) * y[0]]

    lo_sup, hi_sup = potential.support
    width = max(hi_sup - lo_sup, 1e-6)
    glue = min(max(hi_sup, problem.flat_radius()), r_max - 1.0)

    def integrate(span_points, y, direction_tag):
        mesh_parts, u_parts = [], []
        for a0, b0 in zip(span_points[:-1], span_points[1:]):
            t_eval = np.linspace(a0, b0, max(8, int(n_mesh * abs(b0 - a0)
                                                    / (r_max - r_in))))
            inside = (min(a0, b0) >= lo_sup - 1e-15
                      and max(a0, b0) <= hi_sup + 1e-15)
            max_step = min(abs(b0 - a0), width / 8) if inside else abs(b0 - a0)
            sol = solve_ivp(rhs, (a0, b0), y, t_eval=t_eval, rtol=1e-10,
                            atol=1e-13, max_step=max_step)
            if not sol.success:
                raise RuntimeError(f"{direction_tag} profile integration failed: "
                                   + sol.message)
            mesh_parts.append(sol.t)
            u_parts.append(sol.y[0])
            y = [sol.y[0, -1], sol.y[1, -1]]
        return np.concatenate(mesh_parts), np.concatenate(u_parts)

    y0 = [0.0, 1.0] if bc == "dirichlet" else [1.0, 0.0]
    out_points = [p for p in _segment_points(problem, potential, r_in, glue)]
    mesh_out, u_out = integrate(out_points, y0, "outward")

    kappa = dtn_coefficient(d, l, lam, r_max)
    p_out = float(problem.coefficient_at(r_max)) * r_max ** (d - 1)
    mesh_in, u_in = integrate([r_max, glue], [1.0, p_out * kappa], "inward")
    mesh_in, u_in = mesh_in[::-1], u_in[::-1]
    scale = u_out[-1] / u_in[0] if u_in[0] != 0 else 1.0
    mesh = np.concatenate([mesh_out, mesh_in[1:]])
    u = np.concatenate([u_out, scale * u_in[1:]])
    norm = math.sqrt(np.trapezoid(u ** 2 * mesh ** (d - 1), mesh))
    return mesh, u / norm


def crosscheck_birman_schwinger(problem: ProblemSpec, potential: Potential,
                                beta_grid, m: int = bs.DEFAULT_M,
                                tol: float = 1e-10):
    """Residual |beta * mu0(lambda0(beta)) - 1| over a coupling grid.

    For each coupling the ground state energy comes from the shooting solver
    and mu0 from the independently assembled kernel matrix at that energy.
    """
    rows = []
    if potential.is_zero():
        return rows
    for beta in beta_grid:
        gs = ground_state(problem, potential, float(beta), tol=tol)
        if gs is None:
            raise ValidationError(f"no bound state at beta={beta:g}; "
                                  "crosscheck needs couplings above threshold")
        lam0, _ = gs
        mat = bs.assemble(problem, potential, lam0, m=m)
        mu0 = bs.principal_eigenvalue(mat, bs.DEFAULT_EIG_TOL)
        rows.append({"beta": float(beta), "lambda0": lam0, "mu0": mu0,
                     "residual": abs(beta * mu0 - 1.0)})
    return rows


def beta_critical_direct(problem: ProblemSpec, potential: Potential,
                         tol: float = 1e-6, h: float = DEFAULT_H,
                         r_max: float = DEFAULT_R_MAX):
    """Coupling threshold by bisection of the negative-eigenvalue count."""
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if potential.is_zero():
        return bs.NO_BOUND_STATES
    lo_sup, hi_sup = potential.support
    r_max = max(r_max, hi_sup + 10.0)

    def has_state(beta):
        return _total_count(problem, potential, beta, h, r_max) >= 1

    lo, hi = 0.0, 1.0
    doublings = 0
    while not has_state(hi):
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 60:
            return bs.NO_BOUND_STATES
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if has_state(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def eigenvalue_residual(problem: ProblemSpec, potential: Potential, beta: float,
                        lam: float, r_max: float | None = None,
                        sector: int = 0, h_res: float = 1e-2) -> float:
    """Strong-form residual of the eigen-equation at a converged energy.

    Re-integrates the first-order system (u, p u') on uniform sub-grids and
    checks (p u')' = (q - lambda w) u with fourth-order differences inside
    each smooth segment.  Returns the max residual relative to the profile
    scale.
    """
    d = problem.dimension
    l = sector
    bc = problem.effective_bc(l)
    r_in = problem.inner_radius
    cent = l * (l + d - 2)
    lo_sup, hi_sup = potential.support
    if r_max is None:
        r_max = max(DEFAULT_R_MAX, hi_sup + 10.0)

    def rhs(r, y):
        a = float(problem.coefficient_at(r))
        p = a * r ** (d - 1)
        w = r ** (d - 1)
        q = (a * cent * r ** (d - 3) if cent else 0.0) - beta * float(potential(r)) * w
        return [y[1] / p, (q - lam * w) * y[0]]

    y = [0.0, 1.0] if bc == "dirichlet" else [1.0, 0.0]
    segments = _segment_points(problem, potential, r_in, r_max)
    worst = 0.0
    scale_u = 0.0
    scale_v = 0.0
    pieces = []
    for a0, b0 in zip(segments[:-1], segments[1:]):
        n_pts = max(9, int(round((b0 - a0) / h_res)) + 1)
        t_eval = np.linspace(a0, b0, n_pts)
        sol = solve_ivp(rhs, (a0, b0), y, t_eval=t_eval, rtol=1e-12, atol=1e-14,
                        max_step=(b0 - a0) / 8)
        if not sol.success:
            raise RuntimeError("residual integration failed: " + sol.message)
        pieces.append((sol.t, sol.y[0], sol.y[1]))
        scale_u = max(scale_u, float(np.max(np.abs(sol.y[0]))))
        scale_v = max(scale_v, float(np.max(np.abs(sol.y[1]))))
        y = [sol.y[0, -1], sol.y[1, -1]]
    for r, uu, vv in pieces:
        if r.size < 9:
            continue
        hh = r[1] - r[0]
        dv = (vv[:-4] - 8 * vv[1:-3] + 8 * vv[3:-1] - vv[4:]) / (12 * hh)
        rr = r[2:-2]
        a = problem.coefficient_at(rr)
        w = rr ** float(d - 1)
        q = (a * cent * rr ** float(d - 3) if cent else np.zeros_like(rr)) \
            - beta * potential(rr) * w
        res = dv - (q - lam * w) * uu[2:-2]
        denom = max(scale_v, (abs(lam) + beta * potential.max_value() + 1.0) * scale_u)
        worst = max(worst, float(np.max(np.abs(res))) / denom)
    return worst
