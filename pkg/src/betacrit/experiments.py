"""Scaling studies, boundary-condition dichotomy, and the counting audit.

The shrinking-well studies work in the rescaled frame where the well has unit
size: the near-boundary kernels there determine how the coupling threshold
responds as the well approaches the boundary.  Weakly singular kernels (log
in 2-d, inverse distance in 3-d) get their Nystrom diagonal from exact ray
integrals of the singular part over the quadrature domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import birman_schwinger as bs
from . import direct_spectrum as ds
from .errors import ValidationError
from .model import (Potential, ProblemSpec, Profile, ScaledPotentialFamily,
                    realize_scaled)

C3 = 1.0 / (4.0 * math.pi)
DEFAULT_CLR_CONSTANT = 0.1156  # d=3 counting-bound constant, configurable


@dataclass(frozen=True)
class ScalingStudy:
    """Per-n results of one study, with shared resolution metadata."""

    kind: str
    rows: tuple
    notices: tuple = ()
    meta: dict = field(default_factory=dict)

    def values(self, key: str) -> np.ndarray:
        return np.array([row[key] for row in self.rows])

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "rows": [dict(r) for r in self.rows],
                "notices": list(self.notices), "metadata": dict(self.meta)}


# ---------------------------------------------------------------------------
# quadrature grids on disks and balls


def disk_grid(n_r: int, n_t: int, radius: float = 1.0):
    """Polar product rule: Gauss-Legendre radially, trapezoid in angle."""
    xg, wg = leggauss(n_r)
    r = 0.5 * radius * (xg + 1.0)
    wr = 0.5 * radius * wg * r
    theta = 2.0 * math.pi * np.arange(n_t) / n_t
    wt = 2.0 * math.pi / n_t
    pts = np.stack([np.outer(r, np.cos(theta)).ravel(),
                    np.outer(r, np.sin(theta)).ravel()], axis=1)
    w = np.outer(wr, np.full(n_t, wt)).ravel()
    return pts, w


def ball_grid(n_r: int, n_mu: int, n_phi: int, radius: float = 1.0,
              center=None):
    """Spherical product rule with the x1-axis as the polar axis."""
    xg, wg = leggauss(n_r)
    r = 0.5 * radius * (xg + 1.0)
    wr = 0.5 * radius * wg * r ** 2
    mu, wmu = leggauss(n_mu)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * math.pi / n_phi
    sin_t = np.sqrt(1.0 - mu ** 2)
    x1 = np.einsum("i,j->ij", r, mu)
    x2 = np.einsum("i,j,k->ijk", r, sin_t, np.cos(phi))
    x3 = np.einsum("i,j,k->ijk", r, sin_t, np.sin(phi))
    pts = np.stack([np.broadcast_to(x1[:, :, None], x2.shape).ravel(),
                    x2.ravel(), x3.ravel()], axis=1)
    w = np.einsum("i,j,k->ijk", wr, wmu, np.full(n_phi, wphi)).ravel()
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts, w


def _ray_length_ball(y: np.ndarray, omega: np.ndarray, radius: float,
                     center=None) -> np.ndarray:
    """Distance from interior points y to the sphere along directions omega."""
    yc = y if center is None else y - np.asarray(center, dtype=float)
    b = yc @ omega.T
    disc = radius ** 2 - np.sum(yc ** 2, axis=1)[:, None] + b ** 2
    return -b + np.sqrt(np.maximum(disc, 0.0))


def log_cell_integrals(points: np.ndarray, radius: float = 1.0,
                       x1_min: float = -np.inf, n_theta: int = 256) -> np.ndarray:
    """Exact integrals of ln(1/|y - s|) over disk(radius) cut at s1 > x1_min."""
    theta = 2.0 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    omega = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    t = _ray_length_ball(points, omega, radius)
    if np.isfinite(x1_min):
        with np.errstate(divide="ignore"):
            t_line = (x1_min - points[:, 0:1]) / omega[:, 0][None, :]
        t_line = np.where(omega[:, 0][None, :] < 0, t_line, np.inf)
        t = np.minimum(t, np.maximum(t_line, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 0.25 * t ** 2 * (1.0 - 2.0 * np.log(t))
    f = np.where(t > 0, f, 0.0)
    return f.sum(axis=1) * (2.0 * math.pi / n_theta)


def newton_cell_integrals(points: np.ndarray, radius: float = 1.0,
                          x1_min: float = -np.inf, n_mu: int = 32,
                          n_phi: int = 32, center=None) -> np.ndarray:
    """Exact integrals of 1/|y - s| over ball(radius) cut at s1 > x1_min."""
    mu, wmu = leggauss(n_mu)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_t = np.sqrt(1.0 - mu ** 2)
    omega = np.stack([np.repeat(mu, n_phi),
                      np.outer(sin_t, np.cos(phi)).ravel(),
                      np.outer(sin_t, np.sin(phi)).ravel()], axis=1)
    wdir = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    t = _ray_length_ball(points, omega, radius, center=center)
    if np.isfinite(x1_min):
        with np.errstate(divide="ignore"):
            t_line = (x1_min - points[:, 0:1]) / omega[:, 0][None, :]
        t_line = np.where(omega[:, 0][None, :] < 0, t_line, np.inf)
        t = np.minimum(t, np.maximum(t_line, 0.0))
    return 0.5 * (t ** 2) @ wdir


# ---------------------------------------------------------------------------
# near-boundary kernel studies


def _pair_distances(pts: np.ndarray, shift: float):
    diff = pts[:, None, :] - pts[None, :, :]
    direct = np.sqrt(np.sum(diff ** 2, axis=-1))
    star = pts.copy()
    star[:, 0] = -star[:, 0]
    diff_im = pts[:, None, :] - star[None, :, :]
    diff_im[..., 0] += shift
    image = np.sqrt(np.sum(diff_im ** 2, axis=-1))
    return direct, image


def halfspace_kernel_matrix(d: int, sign: str, n: float, center: float,
                            profile: Profile | None = None,
                            m: int = 700) -> bs.KernelMatrix:
    """Discretized rescaled kernel operator for one value of n."""
    if d == 2 and sign == "plus":
        raise ValidationError("the d=2 rescaled kernel exists for the minus case only")
    if d == 2 and n <= 1.0:
        raise ValidationError("d=2 scaling needs n > 1")
    cut = -n * center
    if d == 2:
        n_r = max(6, int(round(math.sqrt(m / 2.0))))
        pts, w = disk_grid(n_r, 2 * n_r)
    else:
        c = max(5, int(round((m / 1.4) ** (1.0 / 3.0))))
        pts, w = ball_grid(c, c, int(math.ceil(1.4 * c)))
    keep = pts[:, 0] > cut + 1e-12
    pts, w = pts[keep], w[keep]
    density = (np.linalg.norm(pts, axis=1) <= 1.0).astype(float) \
        if profile is None else profile(np.linalg.norm(pts, axis=1))
    shift = 2.0 * n * center
    direct, image = _pair_distances(pts, shift)
    if d == 2:
        c_s = 1.0 / (2.0 * math.pi * math.log(n))
        with np.errstate(divide="ignore"):
            g = np.log(1.0 / direct)
        regular = c_s * np.log(image)
        cells = log_cell_integrals(pts, 1.0, cut)
    else:
        c_s = C3
        sgn = -1.0 if sign == "minus" else 1.0
        with np.errstate(divide="ignore"):
            g = 1.0 / direct
        regular = sgn * C3 / image
        cells = newton_cell_integrals(pts, 1.0, cut)
    meta = {"d": d, "sign": sign, "n": n, "center": center, "nodes": pts.shape[0]}
    return bs.assemble_points(pts, w, density, regular, g, c_s, cells, 0.0, meta)


def minorant_eigenvalue(d: int, shift: float, profile: Profile | None = None,
                        ball_center=(0.5, 0.0, 0.0), ball_radius: float = 0.25,
                        m: int = 700) -> float:
    """Principal eigenvalue of the fixed sub-ball comparison operator.

    The image term is controlled on a ball away from the boundary:
    |image| >= 2(c1 - r_B) + shift there, so the kernel dominates
    rho * c3 / |y - s| with an explicit rho independent of n.
    """
    if d != 3:
        raise ValidationError("the sub-ball comparison operator is a d=3 device")
    c1 = ball_center[0]
    rho = 1.0 - (2.0 * ball_radius) / (2.0 * (c1 - ball_radius) + shift)
    if rho <= 0:
        return 0.0
    c = max(5, int(round((m / 1.4) ** (1.0 / 3.0))))
    pts, w = ball_grid(c, c, int(math.ceil(1.4 * c)), radius=ball_radius,
                       center=ball_center)
    if profile is None:
        alpha = 1.0
    else:
        alpha = float(np.min(profile(np.linalg.norm(pts, axis=1))))
    diff = pts[:, None, :] - pts[None, :, :]
    with np.errstate(divide="ignore"):
        g = 1.0 / np.sqrt(np.sum(diff ** 2, axis=-1))
    cells = newton_cell_integrals(pts, ball_radius, center=ball_center)
    mat = bs.assemble_points(pts, w, np.ones(pts.shape[0]),
                             np.zeros_like(g), g, rho * alpha * C3, cells, 0.0,
                             {"rho": rho, "alpha": alpha})
    return bs.principal_eigenvalue(mat, bs.DEFAULT_EIG_TOL)


def halfspace_norm_study(d: int, sign: str, family: ScaledPotentialFamily,
                         n_grid, m: int = 700) -> ScalingStudy:
    """Norm of the rescaled near-boundary operator along the n grid.

    Rows carry the principal eigenvalue per n; for d=2 the rank-one lower
    bound of the shifted-log kernel, for d=3 the sub-ball comparison
    eigenvalue, land alongside for the boundedness checks.
    """
    if family.dimension != d:
        raise ValidationError("family dimension does not match the study dimension")
    rows = []
    notices = []
    w_mass = _profile_mass(family.base_profile, d)
    for n in n_grid:
        center = family.center(n)
        try:
            mat = halfspace_kernel_matrix(d, sign, float(n), center,
                                          family.base_profile, m=m)
        except ValidationError as exc:
            notices.append(f"n={n:g} skipped: {exc}")
            continue
        norm = bs.principal_eigenvalue(mat, bs.DEFAULT_EIG_TOL)
        row = {"n": float(n), "center": center, "norm": norm,
               "nodes": mat.meta["nodes"]}
        if d == 2:
            row["rank_one_bound"] = (math.log(2.0 * n * center)
                                     / (2.0 * math.pi * math.log(n))) * w_mass
        else:
            row["minorant"] = minorant_eigenvalue(d, 2.0 * n * center,
                                                  family.base_profile, m=m)
        rows.append(row)
    norms = [r["norm"] for r in rows]
    meta = {"d": d, "sign": sign, "m": m, "path": family.center_path.describe(),
            "strictly_decreasing": bool(all(b < a for a, b in zip(norms, norms[1:]))),
            "profile_mass": w_mass}
    return ScalingStudy("halfspace-norm", tuple(rows), tuple(notices), meta)


def _profile_mass(profile: Profile, d: int) -> float:
    """integral of W over R^d for a radial profile."""
    r = np.linspace(0.0, profile.hi, 4001)
    if d == 1:
        return 2.0 * float(np.trapezoid(profile(r), r))
    area = 2.0 * math.pi if d == 2 else 4.0 * math.pi
    return float(np.trapezoid(profile(r) * area * r ** (d - 1), r))


# ---------------------------------------------------------------------------
# one-dimensional shrinking wells


def scaling_study_1d(family: ScaledPotentialFamily, n_grid,
                     m: int = bs.DEFAULT_M, with_direct: bool = True) -> ScalingStudy:
    """Coupling threshold of the shrinking well family on the half-line.

    Both routes are reported per admissible n; inadmissible scales (support
    poking out of the domain) are dropped with a notice.
    """
    if family.dimension != 1:
        raise ValidationError("this study is the d=1 Dirichlet one")
    problem = ProblemSpec(1, "half_line", "dirichlet")
    rows = []
    notices = []
    for n in n_grid:
        if not family.admissible(n):
            notices.append(f"n={n:g} inadmissible: support leaks outside the domain "
                           f"(margin {family.margin(n):.3e})")
            continue
        pot = realize_scaled(family, n)
        beta_kernel = bs.beta_critical(problem, pot, method="limit-kernel", m=m)
        row = {"n": float(n), "beta_cr_kernel": beta_kernel, "m": m}
        if with_direct:
            h = min(ds.DEFAULT_H, (pot.support[1] - pot.support[0]) / 80.0)
            row["beta_cr_direct"] = ds.beta_critical_direct(problem, pot,
                                                            tol=1e-7, h=h)
            row["h"] = h
        rows.append(row)
    if not rows:
        raise ValidationError("every n in the grid was inadmissible; " +
                              "; ".join(notices))
    vals = [r["beta_cr_kernel"] for r in rows]
    meta = {"m": m, "path": family.center_path.describe(),
            "monotone_increasing": bool(all(b > a for a, b in zip(vals, vals[1:])))}
    return ScalingStudy("shrinking-well-1d", tuple(rows), tuple(notices), meta)


# ---------------------------------------------------------------------------
# counting-bound audit


def clr_audit(problem: ProblemSpec, potential: Potential, beta_grid,
              constant: float = DEFAULT_CLR_CONSTANT, h: float = ds.DEFAULT_H,
              r_max: float = ds.DEFAULT_R_MAX, refine: bool = False) -> ScalingStudy:
    """Counting bound audit: count <= constant * beta^{3/2} integral V^{3/2}.

    A violation would expose a solver bug, so the rows carry an explicit
    flag; the integral runs over the volume where V lives.
    """
    if problem.dimension != 3:
        raise ValidationError("the counting bound audit is a d=3 statement")
    v_moment = potential.integral_power(1.5, 3)
    rows = []
    for beta in beta_grid:
        count = ds.count_negative(problem, potential, float(beta), h=h,
                                  r_max=r_max, refine=refine)
        bound = constant * float(beta) ** 1.5 * v_moment
        rows.append({"beta": float(beta), "count": count, "bound": bound,
                     "violated": bool(count > bound)})
    meta = {"constant": constant, "v_moment": v_moment, "h": h,
            "violations": int(sum(r["violated"] for r in rows))}
    return ScalingStudy("counting-audit", tuple(rows), (), meta)


# ---------------------------------------------------------------------------
# boundary-condition dichotomy


def default_dichotomy_potentials(dimension: int) -> list[tuple[str, Potential]]:
    if dimension == 1:
        return [
            ("indicator[1,2]", Potential(Profile.indicator(1.0, 2.0))),
            ("tent[0.8,2.0]x2", Potential(Profile.tent(0.8, 2.0, 2.0))),
            ("bump[1.5,2.5]x1.5", Potential(Profile.bump(1.5, 2.5, 1.5))),
        ]
    return [
        ("indicator[1.5,2.5]", Potential(Profile.indicator(1.5, 2.5))),
        ("tent[1.2,2.4]x2", Potential(Profile.tent(1.2, 2.4, 2.0))),
        ("bump[1.8,2.8]x1.5", Potential(Profile.bump(1.8, 2.8, 1.5))),
    ]


def dichotomy_suite(potentials_1d=None, potentials_2d=None,
                    m: int = 300, decades=(2, 8), radius: float = 1.0) -> ScalingStudy:
    """Bounded/divergent verdicts over (dimension, condition, potential).

    Low-dimensional exterior problems split by the boundary condition:
    Dirichlet stays bounded, Neumann diverges (a power law on the half-line,
    logarithmically for the planar exterior ball).  Indeterminate verdicts
    are listed as such, never coerced.
    """
    if potentials_1d is None:
        potentials_1d = default_dichotomy_potentials(1)
    if potentials_2d is None:
        potentials_2d = default_dichotomy_potentials(2)
    grid = bs.default_lambda_grid(decades)
    rows = []
    for d, pots in ((1, potentials_1d), (2, potentials_2d)):
        for bc in ("dirichlet", "neumann"):
            for name, pot in pots:
                if d == 1:
                    prob = ProblemSpec(1, "half_line", bc)
                else:
                    prob = ProblemSpec(2, "exterior_ball", bc, radius=radius)
                rep = bs.mu_curve(prob, pot, lambda_grid=grid, m=m)
                cls = bs.classify_limit(rep)
                rows.append({"d": d, "bc": bc, "potential": name,
                             "verdict": cls.verdict,
                             "rate_exponent": cls.rate_exponent,
                             "log_divergence": cls.log_divergence,
                             "growth_per_decade": cls.growth_per_decade})
    meta = {"m": m, "decades": list(decades),
            "indeterminate": int(sum(r["verdict"] == "indeterminate" for r in rows))}
    return ScalingStudy("dichotomy", tuple(rows), (), meta)
