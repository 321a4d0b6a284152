"""Rescaled near-boundary kernels on the half-space.

In the frame where the shrinking well has unit size, the zero-energy kernel
keeps the direct Coulomb/log term and an image term shifted by 2 n x(n).
For the planar Dirichlet case the operator norm dies like 1/ln n when
n x(n) stays bounded, but stays above (1-delta)/(4 pi) * integral(W) along
x(n) = n^{-delta}; in three dimensions the norms are scale-invariant and
dominated from below by a fixed sub-ball comparison operator.

Run:  PYTHONPATH=src python3 demos/04_near_boundary_kernels.py
"""

import math

from betacrit import CenterPath, Profile, ScaledPotentialFamily, halfspace_norm_study


def main():
    disk = ScaledPotentialFamily(Profile.indicator(0.0, 1.0),
                                 CenterPath(1.0, 1.0), 2)
    study = halfspace_norm_study(2, "minus", disk, [10, 100, 1000, 10000], m=500)
    print("planar case, center path x(n) = 1/n (bounded n*x):")
    print("      n       norm")
    for row in study.rows:
        print(f"  {row['n']:7.0f}  {row['norm']:.6f}")
    print(f"  strictly decreasing: {study.meta['strictly_decreasing']}")

    slow = ScaledPotentialFamily(Profile.indicator(0.0, 1.0),
                                 CenterPath(1.0, 0.5), 2)
    study = halfspace_norm_study(2, "minus", slow, [100, 1000, 10000], m=500)
    floor = study.meta["profile_mass"] / (8.0 * math.pi)
    print(f"\nplanar case, x(n) = n^(-1/2); rank-one floor {floor:.4f}:")
    print("      n       norm     shifted-log bound")
    for row in study.rows:
        print(f"  {row['n']:7.0f}  {row['norm']:.6f}   {row['rank_one_bound']:.6f}")

    ball = ScaledPotentialFamily(Profile.indicator(0.0, 1.0),
                                 CenterPath(1.0, 1.0), 3)
    print("\nspatial case, both boundary signs:")
    for sign in ("minus", "plus"):
        study = halfspace_norm_study(3, sign, ball, [2, 8, 32, 128], m=700)
        print(f"  sign = {sign}")
        print("        n       norm      sub-ball minorant")
        for row in study.rows:
            print(f"    {row['n']:6.0f}  {row['norm']:.6f}     {row['minorant']:.6f}")


if __name__ == "__main__":
    main()
