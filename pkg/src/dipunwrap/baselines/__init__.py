"""Classical unwrappers used for comparison."""

from .goldstein import branch_cuts, residues, unwrap_goldstein
from .irls import IrlsConfig, IrlsInfo, quadratic_energy, unwrap_irls
from .itoh import unwrap_itoh_1d
from .ls import least_squares_solution, neumann_eigenvalues, poisson_residual, solve_poisson_neumann, unwrap_ls_dct

__all__ = [
    "IrlsConfig",
    "IrlsInfo",
    "branch_cuts",
    "least_squares_solution",
    "neumann_eigenvalues",
    "poisson_residual",
    "quadratic_energy",
    "residues",
    "solve_poisson_neumann",
    "unwrap_goldstein",
    "unwrap_irls",
    "unwrap_itoh_1d",
    "unwrap_ls_dct",
]
