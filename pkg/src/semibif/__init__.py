"""Bifurcation diagrams of -Δu = λ f(u) with Dirichlet data on intervals and balls."""
from .admissible import AdmissibilityReport, admissibility_check
from .continuation import (Branch, ExtremalReport, FoldPoint, critical_eps_search, extremal_lambda,
                           refine_fold, trace_branch)
from .degree import Box, DegreeResult, DiscreteMap, brouwer_degree, homotopy_sweep, product_check
from .kernels import BACKEND_NAME
from .nonlinearity import (Bump, DomainError, InfeasibleAmplitudeError, Nonlinearity, QuadratureError,
                           build_perturbation)
from .solvers import (ProblemSpec, minimal_branch, parabolic_evolve, poisson_profile, radial_shoot,
                      solve_minimal, time_map_lambda)
from .topology import (DiagramReport, MultiplePoint, Verdict, build_report, classify_case,
                       compare_diagrams, detect_folds, detect_minimal_jump, detect_multiple_points,
                       instability_pipeline)

__version__ = "0.1.0"
