"""How the boundary condition decides whether weak coupling binds.

In one and two dimensions the Dirichlet exterior problem keeps the
sandwiched-resolvent norm bounded as the energy approaches zero (so the
threshold is positive), while the Neumann problem lets it blow up (threshold
zero): a power law 1/sqrt(|lambda|) on the half-line and a logarithm for the
planar exterior ball.  In three dimensions both conditions stay bounded.

Run:  PYTHONPATH=src python3 demos/02_boundary_dichotomy.py
"""

from betacrit import (ProblemSpec, Potential, Profile, classify_limit,
                      dichotomy_suite, mu_curve)


def show_curve(title, problem, potential):
    rep = mu_curve(problem, potential, m=250)
    cls = classify_limit(rep)
    print(f"\n{title}")
    for lam, mu, _, _ in rep.samples:
        print(f"  lambda = {lam:9.1e}   mu0 = {mu:12.6f}")
    tag = cls.verdict
    if cls.verdict == "divergent":
        tag += " (log)" if cls.log_divergence else f" (rate {cls.rate_exponent:+.3f})"
    else:
        tag += f" (mu* = {cls.mu_star:.6f}, raw last {cls.mu_last:.6f})"
    print(f"  verdict: {tag}")


def main():
    well = Potential(Profile.indicator(1.0, 2.0))
    ring = Potential(Profile.indicator(1.5, 2.5))

    show_curve("half-line, Dirichlet", ProblemSpec(1, "half_line", "dirichlet"), well)
    show_curve("half-line, Neumann", ProblemSpec(1, "half_line", "neumann"), well)
    show_curve("planar exterior ball, Neumann (radial sector)",
               ProblemSpec(2, "exterior_ball", "neumann", radius=1.0), ring)
    show_curve("spatial exterior ball, Neumann",
               ProblemSpec(3, "exterior_ball", "neumann", radius=1.0), ring)

    print("\nfull verdict matrix over three potentials per cell:")
    study = dichotomy_suite(m=300)
    for row in study.rows:
        rate = ""
        if row["verdict"] == "divergent":
            rate = "log" if row["log_divergence"] else f"{row['rate_exponent']:+.2f}"
        print(f"  d={row['d']}  {row['bc']:9s}  {row['potential']:22s} "
              f"{row['verdict']:10s} {rate}")
    print(f"  indeterminate verdicts: {study.meta['indeterminate']}")


if __name__ == "__main__":
    main()
