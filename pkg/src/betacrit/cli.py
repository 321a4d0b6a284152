"""Command-line surface: config ingestion, dispatch, report emission.

Every subcommand reads one JSON configuration (schema shipped with the
package), writes its artifacts atomically into the output directory, and
exits 0 on success, 1 on configuration errors, 2 on numerical failures
(unconverged counts, indeterminate classifications, near-singular solves).
Outputs carry no timestamps, and all iterative solvers start from fixed
vectors, so identical configs produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np
import jsonschema

from . import birman_schwinger as bs
from . import direct_spectrum as ds
from . import experiments as ex
from . import fkw
from .errors import (IndeterminateError, KernelLimitError, MethodDisagreement,
                     NearSingularError, UnconvergedError, ValidationError)
from .model import (CenterPath, CoefficientProfile, Potential, ProblemSpec,
                    Profile, ScaledPotentialFamily)

DEFAULTS = {
    "m": 400,                 # kernel quadrature nodes
    "panel_order": 8,         # Gauss-Legendre points per panel
    "lambda_decades": [2, 7],  # energy grid -10^{-j}
    "mesh_h": 1e-3,           # finite-difference mesh
    "r_max": 30.0,            # truncation radius
    "eig_tol": 1e-8,          # eigenvalue relative tolerance
    "bisect_tol": 1e-6,       # threshold bisection tolerance
    "sector_max": 3,          # highest angular sector swept where relevant
}

SUBCOMMANDS = ("mu-curve", "beta-cr", "direct", "crosscheck", "fkw",
               "scaling", "halfspace", "clr", "dichotomy")

CONFIG_ERRORS = (ValidationError, jsonschema.ValidationError,
                 json.JSONDecodeError, FileNotFoundError, KeyError)
NUMERIC_ERRORS = (UnconvergedError, IndeterminateError, NearSingularError,
                  KernelLimitError, MethodDisagreement)


def load_schema(name: str = "config") -> dict:
    with resources.files("betacrit.schemas").joinpath(f"{name}.schema.json").open() as fh:
        return json.load(fh)


def load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    jsonschema.validate(cfg, load_schema())
    return cfg


def build_problem(cfg: dict) -> ProblemSpec:
    p = cfg["problem"]
    coeff = None
    if "coefficient" in p:
        samples = np.array(p["coefficient"]["samples"], dtype=float)
        coeff = CoefficientProfile(Profile(samples[:, 0], samples[:, 1]),
                                   p["coefficient"]["flat_radius"])
    return ProblemSpec(p["dimension"], p["geometry"], p["boundary_condition"],
                       radius=p.get("radius", 1.0), coefficient=coeff,
                       sector=p.get("sector", 0))


def build_potential(cfg: dict) -> Potential | ScaledPotentialFamily:
    q = cfg["potential"]
    kind = q["kind"]
    amp = q.get("amplitude", 1.0)
    if kind == "family":
        profile_name = q.get("profile", "indicator")
        base = {"indicator": Profile.indicator(0.0, 1.0),
                "bump": Profile.bump(0.0, 1.0),
                "tent": Profile.tent(0.0, 1.0)}[profile_name]
        path = CenterPath(q.get("center_coefficient", 1.0),
                          q.get("center_exponent", 1.0))
        return ScaledPotentialFamily(base, path, cfg["problem"]["dimension"])
    if kind == "samples":
        samples = np.array(q["samples"], dtype=float)
        return Potential(Profile(samples[:, 0], samples[:, 1]), amp)
    lo, hi = q["support"]
    if kind == "indicator":
        return Potential(Profile.indicator(lo, hi), amp)
    if kind == "tent":
        return Potential(Profile.tent(lo, hi), amp)
    if kind == "bump":
        return Potential(Profile.bump(lo, hi), amp)
    if kind == "zero":
        return Potential(Profile.indicator(lo, hi, 0.0), 0.0)
    raise ValidationError(f"unknown potential kind {kind!r}")


def _numerics(cfg: dict) -> dict:
    out = dict(DEFAULTS)
    out.update(cfg.get("numerics", {}))
    return out


def _lambda_grid(cfg: dict, num: dict) -> np.ndarray:
    study = cfg.get("study", {})
    if "lambda_grid" in study:
        return np.asarray(study["lambda_grid"], dtype=float)
    return bs.default_lambda_grid(tuple(num["lambda_decades"]))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    _atomic_write(path, buf.getvalue())


def write_json(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True,
                                   allow_nan=True) + "\n")


def _atomic_write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parallel(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _classification_dict(cls):
    return cls.to_json_dict() if cls is not None else None


# ---------------------------------------------------------------------------
# subcommands


def _run_mu_curve(cfg, problem, potential, num, out, threads):
    grid = _lambda_grid(cfg, num)
    report = bs.mu_curve(problem, potential, lambda_grid=grid, m=num["m"],
                         panel_order=num["panel_order"], tol=num["eig_tol"])
    cls = bs.classify_limit(report)
    payload = report.to_json_dict()
    payload["classification"] = _classification_dict(cls)
    if cls.verdict == "bounded":
        payload["beta_cr"] = 1.0 / cls.mu_star
    elif cls.verdict == "divergent":
        payload["beta_cr"] = 0.0
    if not report.metadata.get("monotone", True):
        raise UnconvergedError("mu0 samples not monotone: discretization failure",
                               details=payload)
    return payload, ("lambda", "mu0", "m", "residual"), list(report.csv_rows())


def _run_beta_cr(cfg, problem, potential, num, out, threads):
    method = cfg.get("study", {}).get("method", "auto")
    grid = _lambda_grid(cfg, num)
    value = bs.beta_critical(problem, potential, method=method, m=num["m"],
                             tol=num["eig_tol"], lambda_grid=grid,
                             panel_order=num["panel_order"])
    if isinstance(value, bs.NoBoundStates):
        beta_payload = {"beta_cr": None, "verdict": "no-bound-states"}
    else:
        beta_payload = {"beta_cr": value, "verdict": "bounded" if value > 0 else "divergent"}
    payload = {**beta_payload, "method": method,
               "metadata": {"m": num["m"], "panel_order": num["panel_order"],
                            "sector": problem.sector,
                            "normalization": "(H0-lambda)G=delta; G>=0 for lambda<0"}}
    rows = [{"beta_cr": "" if beta_payload["beta_cr"] is None else beta_payload["beta_cr"],
             "verdict": beta_payload["verdict"], "method": method}]
    return payload, ("beta_cr", "verdict", "method"), rows


def _run_direct(cfg, problem, potential, num, out, threads):
    study = cfg.get("study", {})
    beta_grid = study.get("beta_grid", [1.0])
    refine = study.get("refine", True)

    def one(beta):
        count = ds.count_negative(problem, potential, float(beta),
                                  h=num["mesh_h"], r_max=num["r_max"],
                                  refine=refine)
        row = {"beta": float(beta), "count": count, "mesh": num["mesh_h"],
               "r_max": num["r_max"], "lambda0": "", "residual": ""}
        if count > 0 and beta > 0:
            gs = ds.ground_state(problem, potential, float(beta),
                                 r_max=num["r_max"])
            if gs is not None:
                row["lambda0"] = gs[0]
                row["residual"] = ds.eigenvalue_residual(
                    problem, potential, float(beta), gs[0], r_max=num["r_max"])
        return row

    rows = _parallel(one, list(beta_grid), threads)
    bc = ds.beta_critical_direct(problem, potential, tol=num["bisect_tol"],
                                 h=num["mesh_h"], r_max=num["r_max"])
    payload = {"rows": rows,
               "beta_cr_direct": None if isinstance(bc, bs.NoBoundStates) else bc,
               "metadata": {"mesh_h": num["mesh_h"], "r_max": num["r_max"]}}
    return payload, ("beta", "lambda0", "count", "mesh", "r_max", "residual"), rows


def _run_crosscheck(cfg, problem, potential, num, out, threads):
    beta_grid = cfg.get("study", {}).get("beta_grid", [1.0, 2.0, 4.0])
    rows = ds.crosscheck_birman_schwinger(problem, potential, beta_grid,
                                          m=num["m"])
    payload = {"rows": rows,
               "max_residual": max((r["residual"] for r in rows), default=0.0)}
    return payload, ("beta", "lambda0", "mu0", "residual"), rows


def _run_fkw(cfg, problem, potential, num, out, threads):
    study = cfg.get("study", {})
    beta = study.get("beta", 0.0)
    grid = _lambda_grid(cfg, num)
    sector_max = num["sector_max"]

    def gamma_row(lam):
        return {"lambda": float(lam),
                "gamma1": fkw.gamma1(problem, beta, potential, float(lam))}

    g_rows = _parallel(gamma_row, [l for l in grid], threads)
    limit = fkw.fkw_norm_limit(problem, potential, lambda_grid=grid,
                               m=num["m"], sector_max=sector_max)
    value = fkw.beta_critical_fkw(problem, potential, m=num["m"],
                                  sector_max=sector_max)
    sector_mu = {}
    for l, cls in limit["sectors"].items():
        sector_mu[str(l)] = _classification_dict(cls)
    payload = {"gamma1": g_rows,
               "norm_limit": {"verdict": limit["verdict"],
                              "mu_star": limit["mu_star"],
                              "sectors": sector_mu},
               "beta_cr": None if isinstance(value, bs.NoBoundStates) else value,
               "metadata": {"beta": beta, "sector_max": sector_max, "m": num["m"],
                            "flux_orientation": "toward the obstacle"}}
    csv_rows = [{"lambda": r["lambda"], "gamma1": r["gamma1"]} for r in g_rows]
    return payload, ("lambda", "gamma1"), csv_rows


def _require_family(potential):
    if not isinstance(potential, ScaledPotentialFamily):
        raise ValidationError("this study needs potential.kind == 'family'")
    return potential


def _run_scaling(cfg, problem, potential, num, out, threads):
    family = _require_family(potential)
    n_grid = cfg.get("study", {}).get("n_grid", [4, 8, 16, 32])
    study = ex.scaling_study_1d(family, n_grid, m=num["m"])
    payload = study.to_json_dict()
    cols = ("n", "beta_cr_kernel", "beta_cr_direct", "h", "m")
    rows = [{c: r.get(c, "") for c in cols} for r in study.rows]
    return payload, cols, rows


def _run_halfspace(cfg, problem, potential, num, out, threads):
    family = _require_family(potential)
    study_cfg = cfg.get("study", {})
    sign = study_cfg.get("sign", "minus")
    n_grid = study_cfg.get("n_grid", [10, 100, 1000, 10000])
    study = ex.halfspace_norm_study(problem.dimension, sign, family, n_grid,
                                    m=num["m"])
    payload = study.to_json_dict()
    if problem.dimension == 2:
        cols = ("n", "center", "norm", "rank_one_bound", "nodes")
    else:
        cols = ("n", "center", "norm", "minorant", "nodes")
    rows = [{c: r.get(c, "") for c in cols} for r in study.rows]
    return payload, cols, rows


def _run_clr(cfg, problem, potential, num, out, threads):
    study_cfg = cfg.get("study", {})
    beta_grid = study_cfg.get("beta_grid", [2.0, 5.0, 20.0, 80.0])
    constant = study_cfg.get("constant", ex.DEFAULT_CLR_CONSTANT)
    refine = study_cfg.get("refine", False)
    study = ex.clr_audit(problem, potential, beta_grid, constant=constant,
                         h=num["mesh_h"], r_max=num["r_max"], refine=refine)
    payload = study.to_json_dict()
    cols = ("beta", "count", "bound", "violated")
    rows = [{c: r[c] for c in cols} for r in study.rows]
    return payload, cols, rows


def _run_dichotomy(cfg, problem, potential, num, out, threads):
    study = ex.dichotomy_suite(m=num["m"],
                               decades=tuple(num["lambda_decades"]))
    payload = study.to_json_dict()
    if study.meta["indeterminate"]:
        raise IndeterminateError(
            f"{study.meta['indeterminate']} indeterminate verdicts in the dichotomy suite")
    cols = ("d", "bc", "potential", "verdict", "rate_exponent",
            "log_divergence", "growth_per_decade")
    rows = [{c: ("" if r[c] is None else r[c]) for c in cols} for r in study.rows]
    return payload, cols, rows


RUNNERS = {
    "mu-curve": _run_mu_curve,
    "beta-cr": _run_beta_cr,
    "direct": _run_direct,
    "crosscheck": _run_crosscheck,
    "fkw": _run_fkw,
    "scaling": _run_scaling,
    "halfspace": _run_halfspace,
    "clr": _run_clr,
    "dichotomy": _run_dichotomy,
}


def run(subcommand: str, config_path: str, out_dir: str = ".",
        threads: int = 1, verbose: bool = False) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        problem = build_problem(cfg)
        potential = build_potential(cfg)
        num = _numerics(cfg)
    except CONFIG_ERRORS as exc:
        _diagnostic("config-error", exc)
        return 1
    try:
        payload, columns, rows = RUNNERS[subcommand](cfg, problem, potential,
                                                     num, out_dir, threads)
        jsonschema.validate(payload, load_schema("report"))
        out_cfg = cfg.get("output", {})
        json_name = out_cfg.get("json", f"{subcommand}.json")
        csv_name = out_cfg.get("csv", f"{subcommand}.csv")
        write_json(os.path.join(out_dir, json_name), payload)
        write_csv(os.path.join(out_dir, csv_name), columns, rows)
        if verbose:
            print(json.dumps({"subcommand": subcommand,
                              "artifacts": [json_name, csv_name]}))
        return 0
    except NUMERIC_ERRORS as exc:
        _diagnostic("numerical-failure", exc)
        return 2
    except ValidationError as exc:
        _diagnostic("config-error", exc)
        return 1


def _diagnostic(kind: str, exc: Exception):
    info = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, jsonschema.ValidationError):
        info["field"] = "/".join(str(p) for p in exc.absolute_path)
        info["message"] = exc.message
    details = getattr(exc, "details", None) or getattr(exc, "values", None)
    if details:
        info["details"] = {str(k): v for k, v in details.items()}
    print(json.dumps(info, sort_keys=True, default=str), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="betacrit",
        description="Coupling thresholds of exterior elliptic problems: "
                    "kernel spectra, direct solves, and scaling studies.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.threads, args.verbose)


if __name__ == "__main__":
    sys.exit(main())
