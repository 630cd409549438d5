from .minimal import MinimalBranchResult, MinimalSolution, minimal_branch, solve_minimal
from .parabolic import EvolutionResult, StepUnderflowError, parabolic_evolve
from .poisson import PoissonProfile, poisson_fd, poisson_profile
from .problem import BranchPoint, ProblemSpec
from .shooting import BranchTermination, ShootResult, radial_shoot, shoot_lambda
from .timemap import time_map_curve, time_map_lambda

__all__ = [
    "BranchPoint", "BranchTermination", "EvolutionResult", "MinimalBranchResult",
    "MinimalSolution", "PoissonProfile", "ProblemSpec", "ShootResult", "StepUnderflowError",
    "minimal_branch", "parabolic_evolve", "poisson_fd", "poisson_profile", "radial_shoot",
    "shoot_lambda", "solve_minimal", "time_map_curve", "time_map_lambda",
]
