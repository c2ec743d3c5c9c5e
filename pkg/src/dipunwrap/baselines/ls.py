"""Unweighted least-squares unwrapping via a DCT Poisson solver."""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from ..core import GradientField, as_grid, congruence, forward_gradient, gradient_adjoint, wrapped_gradient
from .itoh import unwrap_itoh_1d


def neumann_eigenvalues(height: int, width: int) -> np.ndarray:
    """Eigenvalues of ``Delta^T Delta`` in the type-II cosine basis."""
    ly = 2.0 - 2.0 * np.cos(np.pi * np.arange(height) / height)
    lx = 2.0 - 2.0 * np.cos(np.pi * np.arange(width) / width)
    return ly[:, None] + lx[None, :]


def solve_poisson_neumann(rhs: np.ndarray) -> np.ndarray:
    """Solve ``Delta^T Delta u = rhs`` for the zero-mean ``u``.

    ``rhs`` must sum to zero (it does whenever it is ``Delta^T`` of something).
    """
    lam = neumann_eigenvalues(*rhs.shape)
    lam[0, 0] = 1.0
    coef = dctn(rhs, type=2, norm="ortho") / lam
    coef[0, 0] = 0.0
    return idctn(coef, type=2, norm="ortho")


def least_squares_solution(psi) -> np.ndarray:
    """Zero-mean minimizer of ``|Delta phi - W(Delta psi)|^2`` before congruence."""
    psi = as_grid(psi, "psi")
    return solve_poisson_neumann(gradient_adjoint(wrapped_gradient(psi)))


def unwrap_ls_dct(psi) -> np.ndarray:
    psi = as_grid(psi, "psi")
    if min(psi.shape) == 1:
        return unwrap_itoh_1d(psi.ravel()).reshape(psi.shape)
    return congruence(psi, least_squares_solution(psi))


def poisson_residual(phi, psi) -> float:
    """``max |Delta^T (Delta phi - W(Delta psi))|`` (zero at a least-squares optimum)."""
    r = forward_gradient(phi) - wrapped_gradient(psi)
    return float(np.max(np.abs(gradient_adjoint(GradientField(*r)))))
