"""Nonnegative solutions of ``-Delta u = a(x) u^q`` with sign-changing ``a``.

Finite differences on intervals and radial balls, weighted principal
eigenpairs, Newton and monotone solvers, ground states by constrained energy
minimisation, and continuation in ``q`` and in the singular exponent.
"""

from .grid import (
    Field,
    Grid,
    GridMismatchError,
    boundary_flux,
    dirichlet_energy,
    integrate,
    interval_grid,
    laplacian_apply,
    radial_grid,
    solve_linear,
)
from .weight import (
    Weight,
    WeightError,
    WeightSpec,
    check_decay,
    parse_weight_spec,
    sample_weight,
    solution_operator,
)
from .spectrum import (
    EigenError,
    EigenPair,
    phi_q_slice,
    principal_eigenpair,
    t_star,
    transversality,
)
from .solver import (
    BoundsViolation,
    SolveConfig,
    SolveReport,
    SolverError,
    apriori_upper,
    classify_positivity,
    make_subsolution,
    monotone_iterate,
    newton_solve,
    residual,
)
from .ground_state import GroundState, energy, maximality_check, minimize_energy
from .continuation import (
    SolutionCurve,
    asymptotic_q0,
    asymptotic_q1,
    continue_curve,
    singular_continue,
)
from .corpus import builtin, prop51_build, symmetric_grid

__version__ = "0.1.0"

__all__ = [
    "Field",
    "Grid",
    "GridMismatchError",
    "boundary_flux",
    "dirichlet_energy",
    "integrate",
    "interval_grid",
    "laplacian_apply",
    "radial_grid",
    "solve_linear",
    "Weight",
    "WeightError",
    "WeightSpec",
    "check_decay",
    "parse_weight_spec",
    "sample_weight",
    "solution_operator",
    "EigenError",
    "EigenPair",
    "phi_q_slice",
    "principal_eigenpair",
    "t_star",
    "transversality",
    "BoundsViolation",
    "SolveConfig",
    "SolveReport",
    "SolverError",
    "apriori_upper",
    "classify_positivity",
    "make_subsolution",
    "monotone_iterate",
    "newton_solve",
    "residual",
    "GroundState",
    "energy",
    "maximality_check",
    "minimize_energy",
    "SolutionCurve",
    "asymptotic_q0",
    "asymptotic_q1",
    "continue_curve",
    "singular_continue",
    "builtin",
    "prop51_build",
    "symmetric_grid",
]
