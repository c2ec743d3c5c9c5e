"""Direct minimizer of the weighted L2,1 energy by iteratively reweighted least squares.

Each outer round freezes the adaptive weights and solves the weighted normal
equations ``D^T W D phi = D^T W g`` with conjugate gradients, preconditioned by
the unweighted Neumann Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (
    GradientField,
    WeightBounds,
    as_grid,
    congruence,
    forward_gradient,
    gradient_adjoint,
    weights_from_residual,
    wrapped_gradient,
)
from .itoh import unwrap_itoh_1d
from .ls import solve_poisson_neumann


@dataclass(frozen=True)
class IrlsConfig:
    bounds: WeightBounds = field(default_factory=lambda: WeightBounds(0.1, 10.0))
    outer_iters: int = 10
    cg_iters: int = 200
    cg_tol: float = 1e-10

    def __post_init__(self):
        if self.outer_iters < 1 or self.cg_iters < 1:
            raise ValueError("outer_iters and cg_iters must be positive")
        if not self.cg_tol > 0:
            raise ValueError(f"cg_tol must be > 0, got {self.cg_tol}")


@dataclass
class IrlsInfo:
    converged: bool = True
    cg_steps: list[int] = field(default_factory=list)
    # quadratic energy after each CG step of every round, one list per round
    energies: list[list[float]] = field(default_factory=list)


def quadratic_energy(phi, target: GradientField, w) -> float:
    """``sum w * |D phi - target|^2`` with per-pixel weights shared by both components."""
    r = forward_gradient(phi) - target
    return float(np.sum(w * (r.gx**2 + r.gy**2)))


def _weighted_laplacian(phi, w):
    d = forward_gradient(phi)
    return gradient_adjoint(GradientField(w * d.gx, w * d.gy))


def _pcg(phi0, w, target, max_iter, tol, trace=None):
    """Preconditioned CG on the weighted normal equations.

    Returns (best iterate, converged). CG minimizes the quadratic over growing
    Krylov spaces, so the energy of successive iterates never increases.
    """
    b = gradient_adjoint(GradientField(w * target.gx, w * target.gy))
    phi = phi0 - phi0.mean()
    r = b - _weighted_laplacian(phi, w)
    bnorm = max(np.linalg.norm(b), 1e-300)
    if np.linalg.norm(r) <= tol * bnorm:
        return phi, True
    z = solve_poisson_neumann(r)
    p = z.copy()
    rz = float(np.vdot(r, z))
    for _ in range(max_iter):
        ap = _weighted_laplacian(p, w)
        pap = float(np.vdot(p, ap))
        if pap <= 0:
            break
        alpha = rz / pap
        phi = phi + alpha * p
        r = r - alpha * ap
        if trace is not None:
            trace.append(quadratic_energy(phi, target, w))
        if np.linalg.norm(r) <= tol * bnorm:
            return phi, True
        z = solve_poisson_neumann(r)
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return phi, False


def unwrap_irls(psi, cfg: IrlsConfig | None = None, *, return_info: bool = False):
    cfg = cfg or IrlsConfig()
    psi = as_grid(psi, "psi")
    if min(psi.shape) == 1:
        out = unwrap_itoh_1d(psi.ravel()).reshape(psi.shape)
        return (out, IrlsInfo()) if return_info else out
    target = wrapped_gradient(psi)
    info = IrlsInfo()
    # start from the unweighted solution; with uniform weights it is the exact optimum
    phi = solve_poisson_neumann(gradient_adjoint(target))
    for _ in range(cfg.outer_iters):
        resid = (forward_gradient(phi) - target).norm()
        w = weights_from_residual(resid, cfg.bounds)
        trace = [quadratic_energy(phi, target, w)]
        phi, ok = _pcg(phi, w, target, cfg.cg_iters, cfg.cg_tol, trace)
        info.converged &= ok
        info.cg_steps.append(len(trace) - 1)
        info.energies.append(trace)
    out = congruence(psi, phi)
    return (out, info) if return_info else out
