"""Critical coupling constants of exterior elliptic problems.

The threshold beta_cr separating trivial from nontrivial negative spectrum of
-div(a grad u) - beta V on an exterior domain is computed two independent
ways: through the principal eigenvalue of the sandwiched resolvent
sqrt(V) (H0 - lambda)^{-1} sqrt(V) as lambda -> 0-, and through direct
eigenvalue counting on truncated domains with exact decay closures.  The
package also covers the nonlocal constant-trace/zero-flux boundary condition
and the near-boundary shrinking-well scaling studies.
"""

from .errors import (IndeterminateError, KernelLimitError, MethodDisagreement,
                     NearSingularError, UnconvergedError, ValidationError)
from .model import (CenterPath, CoefficientProfile, Potential, ProblemSpec,
                    Profile, ScaledPotentialFamily, h_factor, realize_scaled,
                    validate)
from .green_kernels import (GreenKernel, halfline_kernel, halfline_limit_kernel,
                            halfspace_green, halfspace_image_kernel,
                            radial_kernel)
from .birman_schwinger import (Classification, KernelMatrix, NO_BOUND_STATES,
                               NoBoundStates, SpectralReport, assemble,
                               assemble_points, beta_critical, classify_limit,
                               default_lambda_grid, mu_curve,
                               principal_eigenvalue)
from .direct_spectrum import (DiscreteOperator, beta_critical_direct,
                              build_operator, count_negative,
                              crosscheck_birman_schwinger, eigenvalue_residual,
                              ground_state)
from .fkw import (FkwSolution, beta_critical_fkw, fkw_norm_limit, gamma1,
                  solve_fkw, solve_v)
from .experiments import (ScalingStudy, clr_audit, dichotomy_suite,
                          halfspace_norm_study, minorant_eigenvalue,
                          scaling_study_1d)

__version__ = "0.1.0"

__all__ = [
    "CenterPath", "Classification", "CoefficientProfile", "DiscreteOperator",
    "FkwSolution", "GreenKernel", "IndeterminateError", "KernelLimitError",
    "KernelMatrix", "MethodDisagreement", "NO_BOUND_STATES", "NearSingularError",
    "NoBoundStates", "Potential", "ProblemSpec", "Profile", "ScaledPotentialFamily",
    "ScalingStudy", "SpectralReport", "UnconvergedError", "ValidationError",
    "assemble", "assemble_points", "beta_critical", "beta_critical_direct",
    "beta_critical_fkw", "build_operator", "classify_limit", "clr_audit",
    "count_negative", "crosscheck_birman_schwinger", "default_lambda_grid",
    "dichotomy_suite", "eigenvalue_residual", "fkw_norm_limit", "gamma1",
    "ground_state", "h_factor", "halfline_kernel", "halfline_limit_kernel",
    "halfspace_green", "halfspace_image_kernel", "halfspace_norm_study",
    "minorant_eigenvalue", "mu_curve", "principal_eigenvalue", "radial_kernel",
    "realize_scaled", "scaling_study_1d", "solve_fkw", "solve_v", "validate",
]
