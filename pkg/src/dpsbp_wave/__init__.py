"""Space-time upwind summation-by-parts solver for the damped wave equation.

Forward solves, discrete adjoints, energy diagnostics and initial-condition
inversion on tensor-product grids in one and two dimensions.
"""

from .adjoint import AdjointSystem, assemble_adjoint, backpropagate, solve_adjoint
from .diagnostics import (
    EnergyTrace,
    ExactSolution,
    auxiliary_field,
    convergence_rate,
    energy_trace,
    exact_solution,
    l2_error,
)
from .forward import (
    BoundaryParams,
    ForwardModel,
    PenaltyConfig,
    SolutionField,
    WaveProblem,
    assemble_forward,
    build_problem_operators,
    build_space_grid,
    march_multiblock,
)
from .inverse import (
    InitialDisplacementInversion,
    MisfitForm,
    Observations,
    objective,
    optimize,
    synthetic_observations,
)
from .operators import (
    Flavor,
    SbpTriplet,
    TimeOps,
    build_space_triplet,
    build_time_ops,
    verify_space,
    verify_time,
)

__all__ = [
    "AdjointSystem", "BoundaryParams", "EnergyTrace", "ExactSolution", "Flavor",
    "ForwardModel", "InitialDisplacementInversion", "MisfitForm", "Observations",
    "PenaltyConfig", "SbpTriplet", "SolutionField", "TimeOps", "WaveProblem",
    "assemble_adjoint", "assemble_forward", "auxiliary_field", "backpropagate",
    "build_problem_operators", "build_space_grid", "build_space_triplet",
    "build_time_ops", "convergence_rate", "energy_trace", "exact_solution",
    "l2_error", "march_multiblock", "objective", "optimize", "solve_adjoint",
    "synthetic_observations", "verify_space", "verify_time",
]
