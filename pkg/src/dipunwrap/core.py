"""Wrap algebra, discrete gradients and the adaptive weight law.

Grids are plain 2D ``float64`` numpy arrays (row-major, ``(height, width)``).
Gradient fields are :class:`GradientField` pairs whose ``gx`` holds the
forward difference along columns and ``gy`` along rows; the last column of
``gx`` and the last row of ``gy`` are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi


class GradientField(NamedTuple):
    gx: np.ndarray
    gy: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape

    def norm(self) -> np.ndarray:
        """Per-pixel Euclidean norm over the two components."""
        return np.hypot(self.gx, self.gy)

    def __sub__(self, other: "GradientField") -> "GradientField":  # type: ignore[override]
        return GradientField(self.gx - other.gx, self.gy - other.gy)


@dataclass(frozen=True)
class WeightBounds:
    eps_min: float = 0.1
    eps_max: float = 8.0

    def __post_init__(self):
        if not (0 < self.eps_min < self.eps_max):
            raise ValueError(
                f"need 0 < eps_min < eps_max, got [{self.eps_min}, {self.eps_max}]"
            )


def as_grid(a, name: str = "grid") -> np.ndarray:
    g = np.asarray(a, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise ValueError(f"{name} must be a non-empty 2D array, got shape {g.shape}")
    return g


def wrap_scalar(phi: float) -> float:
    """Wrap ``phi`` into [-pi, pi)."""
    if not math.isfinite(phi):
        raise ValueError(f"cannot wrap non-finite value {phi!r}")
    out = math.fmod(phi + math.pi, TWO_PI)
    if out < 0:
        out += TWO_PI
    out -= math.pi
    # fmod can land on +pi after the shift for inputs just below an odd multiple
    return -math.pi if out >= math.pi else out


def wrap(phi) -> np.ndarray:
    """Elementwise wrap into [-pi, pi). Works on arrays of any shape."""
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise ValueError("cannot wrap non-finite values")
    out = np.mod(phi + np.pi, TWO_PI) - np.pi
    # np.mod may return exactly 2*pi for tiny negative arguments
    out[out >= np.pi] -= TWO_PI
    return out


def wrap_grid(phi) -> np.ndarray:
    return wrap(as_grid(phi, "phi"))


def forward_gradient(phi) -> GradientField:
    phi = as_grid(phi, "phi")
    gx = np.zeros_like(phi)
    gy = np.zeros_like(phi)
    gx[:, :-1] = phi[:, 1:] - phi[:, :-1]
    gy[:-1, :] = phi[1:, :] - phi[:-1, :]
    return GradientField(gx, gy)


def gradient_adjoint(field: GradientField) -> np.ndarray:
    """Adjoint of :func:`forward_gradient` (negative divergence)."""
    gx, gy = field
    out = np.zeros_like(gx)
    out[:, :-1] -= gx[:, :-1]
    out[:, 1:] += gx[:, :-1]
    out[:-1, :] -= gy[:-1, :]
    out[1:, :] += gy[:-1, :]
    return out


def wrapped_gradient(psi) -> GradientField:
    """``W(Delta psi)``: wrapped forward differences of a wrapped phase."""
    g = forward_gradient(psi)
    return GradientField(wrap(g.gx), wrap(g.gy))


def itoh_violations(phi) -> np.ndarray:
    """Binary mask of pixels whose gradient has squared norm above pi**2."""
    g = forward_gradient(phi)
    return (g.gx**2 + g.gy**2 > np.pi**2).astype(np.float64)


def residual_norm(phi, psi) -> np.ndarray:
    """Per-pixel norm of ``Delta phi - W(Delta psi)``."""
    phi = as_grid(phi, "phi")
    psi = as_grid(psi, "psi")
    _check_same_shape(phi, psi)
    return (forward_gradient(phi) - wrapped_gradient(psi)).norm()


def weights_from_residual(e, bounds: WeightBounds) -> np.ndarray:
    """Three-branch weight law applied to residual norms ``e``.

    Equivalent to ``1 / clip(e, eps_min, eps_max)``.
    """
    e = np.asarray(e, dtype=np.float64)
    return 1.0 / np.clip(e, bounds.eps_min, bounds.eps_max)


def adaptive_weights(phi, psi, bounds: WeightBounds) -> np.ndarray:
    return weights_from_residual(residual_norm(phi, psi), bounds)


def congruence(psi, phi_hat) -> np.ndarray:
    """Snap ``phi_hat`` onto the congruence class of ``psi``."""
    psi = as_grid(psi, "psi")
    phi_hat = as_grid(phi_hat, "phi_hat")
    _check_same_shape(psi, phi_hat)
    return phi_hat + wrap(psi - phi_hat)


def weighted_energy(phi, psi, w) -> float:
    w = as_grid(w, "w")
    e = residual_norm(phi, psi)
    _check_same_shape(e, w)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return float(np.sum(w * e))


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
