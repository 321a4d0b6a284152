"""Resolvent sandwich operators and the coupling threshold they encode.

The operator sqrt(V) (H0 - lambda)^{-1} sqrt(V) is discretized by a Nystrom
method on composite Gauss-Legendre panels over the support of V.  Its largest
eigenvalue mu0(lambda) increases toward mu* as lambda -> 0-, and the coupling
threshold is 1/mu*; when mu0 diverges the threshold is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (IndeterminateError, KernelLimitError, MethodDisagreement,
                     UnconvergedError, ValidationError)
from .green_kernels import halfline_kernel, halfline_limit_kernel, radial_kernel
from .model import SPHERE_AREA, Potential, ProblemSpec, validate

DEFAULT_M = 400
DEFAULT_PANEL_ORDER = 8
DEFAULT_EIG_TOL = 1e-8
DEFAULT_DECADES = (2, 7)


class NoBoundStates:
    """Sentinel: the potential vanishes, so no coupling creates bound states."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoBoundStates"


NO_BOUND_STATES = NoBoundStates()


def default_lambda_grid(decades=DEFAULT_DECADES) -> np.ndarray:
    """Energies -10^{-j} for j in the decade range, sorted toward 0-."""
    j0, j1 = decades
    return -np.power(10.0, [-j for j in range(j0, j1 + 1)])


def gauss_panels(lo: float, hi: float, m: int, panel_order: int = DEFAULT_PANEL_ORDER):
    """Composite Gauss-Legendre rule with ~m nodes on [lo, hi]."""
    if hi <= lo:
        raise ValidationError("empty quadrature interval")
    q = max(1, min(panel_order, m))
    panels = max(1, round(m / q))
    xg, wg = leggauss(q)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetrized Nystrom discretization of the sandwiched resolvent."""

    nodes: np.ndarray
    weights: np.ndarray  # volume weights (measure of each node's cell)
    entries: np.ndarray
    lam: float
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def assemble(problem: ProblemSpec, potential: Potential, lam: float,
             m: int = DEFAULT_M, panel_order: int = DEFAULT_PANEL_ORDER) -> KernelMatrix:
    """Kernel matrix of the sandwiched resolvent at energy lambda <= 0.

    lam = 0 requests the limit kernel and raises ``KernelLimitError`` where
    that limit diverges (e.g. Neumann in low dimension).
    """
    diags = validate(problem, potential)
    if diags:
        raise ValidationError("; ".join(diags))
    if problem.geometry not in ("half_line", "exterior_ball"):
        raise ValidationError("assemble() covers half-line and exterior-ball problems; "
                              "use assemble_points() for half-space grids")
    lo, hi = potential.support
    lo = max(lo, problem.inner_radius)
    nodes, w = gauss_panels(lo, hi, m, panel_order)
    d = problem.dimension
    if problem.geometry == "half_line":
        vol = w
        if lam == 0:
            g = halfline_limit_kernel(problem.boundary_condition,
                                      nodes[:, None], nodes[None, :])
        else:
            g = halfline_kernel(problem.boundary_condition, lam,
                                nodes[:, None], nodes[None, :])
    else:
        vol = w * SPHERE_AREA[d] * nodes ** (d - 1)
        g = radial_kernel(problem, lam, nodes[:, None], nodes[None, :])
    sv = np.sqrt(potential(nodes))
    half_weight = np.sqrt(vol) * sv
    entries = half_weight[:, None] * g * half_weight[None, :]
    entries = 0.5 * (entries + entries.T)  # symmetrize away roundoff
    meta = {"m": nodes.size, "panel_order": panel_order,
            "geometry": problem.geometry, "sector": problem.sector,
            "bc": problem.boundary_condition,
            "diagonal_rule": "evaluate",  # these kernels stay continuous there
            "normalization": "(H0-lambda)G=delta; G>=0 for lambda<0"}
    return KernelMatrix(nodes, vol, entries, lam, meta)


def assemble_points(points: np.ndarray, weights: np.ndarray, density: np.ndarray,
                    regular_matrix: np.ndarray, singular_matrix: np.ndarray | None = None,
                    singular_coefficient: float = 0.0,
                    singular_cell_integrals: np.ndarray | None = None,
                    lam: float = 0.0, meta: dict | None = None) -> KernelMatrix:
    """Nystrom matrix on an explicit point cloud, with optional subtraction.

    The operator kernel is density-weighted:
        K(y, s) = sqrt(density(y)) [c_s * g(y,s) + reg(y,s)] sqrt(density(s))
    ``singular_matrix`` holds g off the diagonal (diagonal entries ignored),
    and ``singular_cell_integrals`` the exact integrals of g(y_i, .) over the
    whole quadrature domain.  The mean-value subtraction then fixes the
    diagonal without ever evaluating g on it.
    """
    v = weights * density
    sq = np.sqrt(v)
    entries = sq[:, None] * regular_matrix * sq[None, :]
    if singular_matrix is not None:
        g = np.array(singular_matrix, dtype=float)
        np.fill_diagonal(g, 0.0)
        entries = entries + singular_coefficient * (sq[:, None] * g * sq[None, :])
        if singular_cell_integrals is None:
            raise ValidationError("singular part needs its cell integrals for the diagonal")
        row = g @ weights  # sum_{j != i} w_j g_ij
        diag_fix = singular_coefficient * density * (singular_cell_integrals - row)
        entries[np.diag_indices_from(entries)] = (
            np.diag(regular_matrix) * v + diag_fix)
    entries = 0.5 * (entries + entries.T)
    meta = dict(meta or {})
    meta.setdefault("diagonal_rule",
                    "mean-value subtraction with exact cell integrals")
    return KernelMatrix(np.asarray(points, dtype=float), v, entries, lam, meta)


def _power_iteration(a: np.ndarray, tol: float, max_iter: int = 20000):
    """Largest eigenvalue of a symmetric matrix; all-ones start vector."""
    n = a.shape[0]
    if n == 0:
        return 0.0, 0.0, 0
    v = np.full(n, 1.0 / math.sqrt(n))
    theta = 0.0
    for it in range(1, max_iter + 1):
        u = a @ v
        norm_u = float(np.linalg.norm(u))
        if norm_u == 0.0:
            return 0.0, 0.0, it
        theta = float(v @ u)
        res = float(np.linalg.norm(u - theta * v))
        if res <= tol * max(abs(theta), 1e-300):
            return theta, res, it
        v = u / norm_u
    return theta, res, -1


def _subspace_fallback(a: np.ndarray, tol: float, dim: int = 4, sweeps: int = 400):
    """Deterministic orthogonal iteration used when power iteration stalls
    (nearly degenerate top of the spectrum)."""
    n = a.shape[0]
    dim = min(dim, n)
    cols = [np.ones(n)]
    if dim > 1:
        cols.append(np.array([(-1.0) ** i for i in range(n)]))
    if dim > 2:
        cols.append(np.linspace(-1.0, 1.0, n))
    if dim > 3:
        cols.append(np.linspace(-1.0, 1.0, n) ** 2)
    v, _ = np.linalg.qr(np.stack(cols[:dim], axis=1))
    theta = 0.0
    for _ in range(sweeps):
        v, _ = np.linalg.qr(a @ v)
        t = v.T @ (a @ v)
        evals, evecs = np.linalg.eigh(0.5 * (t + t.T))
        idx = int(np.argmax(evals))
        theta = float(evals[idx])
        w = v @ evecs[:, idx]
        res = float(np.linalg.norm(a @ w - theta * w))
        if res <= tol * max(abs(theta), 1e-300):
            return theta, res
    return theta, res


def principal_eigenvalue(matrix, tol: float = DEFAULT_EIG_TOL) -> float:
    """Largest eigenvalue of a symmetric kernel matrix.

    Power iteration from the all-ones vector, with a small deterministic
    subspace iteration as the fallback for (near-)degenerate tops.
    """
    a = matrix.entries if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=float)
    theta, res, iters = _power_iteration(a, tol)
    if iters >= 0:
        return theta
    theta, res = _subspace_fallback(a, tol)
    if res <= tol * max(abs(theta), 1e-300):
        return theta
    raise UnconvergedError(
        f"principal eigenvalue iteration stalled (residual {res:.3e})",
        details={"residual": res, "value": theta})


def principal_eigenvalue_residual(matrix, tol: float = DEFAULT_EIG_TOL):
    """(eigenvalue, achieved residual) - the residual lands in reports."""
    a = matrix.entries if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=float)
    theta, res, iters = _power_iteration(a, tol)
    if iters < 0:
        theta, res = _subspace_fallback(a, tol)
        if res > tol * max(abs(theta), 1e-300):
            raise UnconvergedError(
                f"principal eigenvalue iteration stalled (residual {res:.3e})",
                details={"residual": res, "value": theta})
    return theta, res


@dataclass(frozen=True)
class Classification:
    """Verdict on the lambda -> 0- behaviour of mu0."""

    verdict: str  # bounded | divergent | indeterminate
    mu_star: float | None = None
    mu_last: float | None = None
    extrapolation_gap: float | None = None
    rate_exponent: float | None = None
    log_divergence: bool = False
    growth_per_decade: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mu_star": self.mu_star,
            "mu_last": self.mu_last,
            "extrapolation_gap": self.extrapolation_gap,
            "rate_exponent": self.rate_exponent,
            "log_divergence": self.log_divergence,
            "growth_per_decade": self.growth_per_decade,
        }


@dataclass(frozen=True)
class SpectralReport:
    """mu0(lambda) samples plus their threshold interpretation."""

    samples: tuple  # rows (lambda, mu0, m, residual)
    classification: Classification | None = None
    beta_cr: object = None  # float, 0.0, or NO_BOUND_STATES
    metadata: dict = field(default_factory=dict)

    def lambdas(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    def mus(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    def to_json_dict(self) -> dict:
        beta = self.beta_cr
        if isinstance(beta, NoBoundStates):
            beta_out, verdict = None, "no-bound-states"
        else:
            beta_out, verdict = beta, None
        out = {
            "samples": [{"lambda": s[0], "mu0": s[1], "m": s[2], "residual": s[3]}
                        for s in self.samples],
            "classification": self.classification.to_json_dict() if self.classification else None,
            "beta_cr": beta_out,
            "metadata": dict(self.metadata),
        }
        if verdict:
            out["beta_cr_verdict"] = verdict
        return out

    def csv_rows(self):
        for s in self.samples:
            yield {"lambda": s[0], "mu0": s[1], "m": s[2], "residual": s[3]}


def mu_curve(problem: ProblemSpec, potential: Potential, lambda_grid=None,
             m: int = DEFAULT_M, panel_order: int = DEFAULT_PANEL_ORDER,
             tol: float = DEFAULT_EIG_TOL) -> SpectralReport:
    """Principal eigenvalue along an energy grid increasing toward 0-.

    The samples must come out monotone (the operator grows with lambda); a
    violation beyond the eigenvalue tolerance is flagged as a discretization
    failure in the metadata.
    """
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    lams = np.sort(np.asarray(lambda_grid, dtype=float))
    if lams.size and lams[-1] >= 0:
        raise ValidationError("energy grid must be strictly negative")
    rows = []
    for lam in lams:
        mat = assemble(problem, potential, float(lam), m=m, panel_order=panel_order)
        mu, res = principal_eigenvalue_residual(mat, tol)
        rows.append((float(lam), mu, mat.size, res))
    mus = np.array([r[1] for r in rows])
    scale = float(np.max(np.abs(mus))) if mus.size else 1.0
    monotone = bool(np.all(np.diff(mus) >= -10 * tol * max(scale, 1.0)))
    meta = {"m": m, "panel_order": panel_order, "monotone": monotone,
            "sector": problem.sector, "bc": problem.boundary_condition,
            "normalization": "(H0-lambda)G=delta; G>=0 for lambda<0"}
    return SpectralReport(tuple(rows), None, None, meta)


def _fit_line(x: np.ndarray, y: np.ndarray):
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    denom = float(np.linalg.norm(y - y.mean())) or 1.0
    return coef[0], coef[1], float(np.linalg.norm(resid)) / denom


def classify_limit(samples, bounded_tol: float = 0.02,
                   divergent_tol: float = 0.05) -> Classification:
    """Bounded / divergent verdict from mu0 samples along lambda -> 0-.

    Growth below ``bounded_tol`` per decade reads as bounded; above
    ``divergent_tol`` the tail is fit against power and logarithmic models.
    Growth between the two thresholds yields an explicit indeterminate
    verdict, never a silent guess.
    """
    if isinstance(samples, SpectralReport):
        rows = [(s[0], s[1]) for s in samples.samples]
    else:
        rows = [(float(l), float(mu)) for l, mu in samples]
    rows.sort(key=lambda t: t[0])  # ascending lambda, i.e. toward 0-
    if len(rows) < 4:
        raise ValidationError("classification needs at least 4 samples")
    lam = np.array([r[0] for r in rows])
    mu = np.array([r[1] for r in rows])
    if np.any(lam >= 0):
        raise ValidationError("classification samples must have lambda < 0")
    span = math.log10(abs(lam[0]) / abs(lam[-1]))
    if span < 3 - 1e-9:
        raise ValidationError("classification needs samples spanning >= 3 decades")
    if np.any(mu <= 0):
        return Classification("bounded", mu_star=float(mu[-1]), mu_last=float(mu[-1]),
                              extrapolation_gap=0.0, growth_per_decade=0.0)
    ddec = math.log10(abs(lam[-2]) / abs(lam[-1]))
    growth = (mu[-1] / mu[-2]) ** (1.0 / ddec) - 1.0

    if growth < bounded_tol:
        d1 = mu[-2] - mu[-3]
        d2 = mu[-1] - mu[-2]
        mu_star = float(mu[-1])
        if d1 > 0 and 0 < d2 / d1 < 0.95:
            rho = d2 / d1
            mu_star = float(mu[-1] + d2 * rho / (1 - rho))
        return Classification("bounded", mu_star=mu_star, mu_last=float(mu[-1]),
                              extrapolation_gap=float(mu_star - mu[-1]),
                              growth_per_decade=float(growth))
    if growth <= divergent_tol:
        return Classification("indeterminate", mu_last=float(mu[-1]),
                              growth_per_decade=float(growth))

    tail = slice(max(0, len(rows) - 5), len(rows))
    x = np.log(np.abs(lam[tail]))
    slope_pow, _, resid_pow = _fit_line(x, np.log(mu[tail]))
    slope_log, _, resid_log = _fit_line(-x, mu[tail])
    if resid_pow <= resid_log:
        return Classification("divergent", mu_last=float(mu[-1]),
                              rate_exponent=float(slope_pow),
                              growth_per_decade=float(growth))
    return Classification("divergent", mu_last=float(mu[-1]),
                          log_divergence=True,
                          rate_exponent=None,
                          growth_per_decade=float(growth))


def beta_critical(problem: ProblemSpec, potential: Potential,
                  method: str = "auto", m: int = DEFAULT_M,
                  tol: float = DEFAULT_EIG_TOL, lambda_grid=None,
                  panel_order: int = DEFAULT_PANEL_ORDER,
                  sector_max: int | None = None):
    """Coupling threshold 1/mu* from the sandwiched-resolvent route.

    method 'limit-kernel' evaluates the zero-energy kernel directly;
    'extrapolation' classifies the mu0(lambda) tail; 'auto' prefers the limit
    kernel and falls back; 'both' runs the two and cross-checks.
    Returns 0.0 for divergent limits and NO_BOUND_STATES for V == 0.
    """
    if method not in ("auto", "limit-kernel", "extrapolation", "both"):
        raise ValidationError(f"unknown method {method!r}")
    if potential.is_zero():
        return NO_BOUND_STATES

    sectors = [problem.sector]
    if sector_max is not None:
        sectors = list(range(0, sector_max + 1))

    def _limit_kernel_value():
        mu_by_sector = {}
        for l in sectors:
            mat = assemble(problem.with_sector(l), potential, 0.0, m=m,
                           panel_order=panel_order)
            mu_by_sector[l] = principal_eigenvalue(mat, tol)
        mu_star = max(mu_by_sector.values())
        if mu_star <= 0:
            return NO_BOUND_STATES, mu_by_sector
        return 1.0 / mu_star, mu_by_sector

    def _extrapolation_value():
        best = None
        for l in sectors:
            report = mu_curve(problem.with_sector(l), potential,
                              lambda_grid=lambda_grid, m=m,
                              panel_order=panel_order, tol=tol)
            cls = classify_limit(report)
            if cls.verdict == "divergent":
                return 0.0, cls
            if cls.verdict == "indeterminate":
                raise IndeterminateError(
                    f"growth per decade {cls.growth_per_decade:.3%} is between the "
                    "bounded and divergent thresholds")
            if best is None or cls.mu_star > best.mu_star:
                best = cls
        return 1.0 / best.mu_star, best

    if method == "limit-kernel":
        value, _ = _limit_kernel_value()
        return value
    if method == "extrapolation":
        value, _ = _extrapolation_value()
        return value
    if method == "auto":
        try:
            value, _ = _limit_kernel_value()
            return value
        except KernelLimitError:
            value, _ = _extrapolation_value()
            return value

    # both: cross-validate
    try:
        lk, _ = _limit_kernel_value()
    except KernelLimitError:
        lk = None
    ex, _ = _extrapolation_value()
    if lk is None:
        return ex
    if isinstance(lk, NoBoundStates) or isinstance(ex, NoBoundStates):
        return lk if isinstance(lk, NoBoundStates) else ex
    scale = max(abs(lk), abs(ex), 1e-300)
    if ex == 0.0 and lk > 0.0:
        raise MethodDisagreement(
            "limit kernel exists but the extrapolation classified the norm as divergent",
            values={"limit-kernel": lk, "extrapolation": ex})
    if abs(lk - ex) > 5e-2 * scale:
        raise MethodDisagreement(
            f"threshold methods disagree: {lk:.6g} vs {ex:.6g}",
            values={"limit-kernel": lk, "extrapolation": ex})
    return lk
