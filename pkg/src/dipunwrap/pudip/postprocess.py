"""Background flattening and thresholding of unwrapped phase maps."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from ..core import as_grid


def local_std(phi, window: int = 3) -> np.ndarray:
    """Standard deviation over a ``window x window`` neighbourhood (edges reflected)."""
    phi = as_grid(phi, "phi")
    mean = uniform_filter(phi, size=window, mode="reflect")
    sq = uniform_filter(phi * phi, size=window, mode="reflect")
    return np.sqrt(np.maximum(sq - mean * mean, 0.0))


def _poly_design(h: int, w: int, degree: int) -> np.ndarray:
    # coordinates scaled to [-1, 1] keep the normal matrix well conditioned
    y, x = np.meshgrid(np.linspace(-1, 1, h), np.linspace(-1, 1, w), indexing="ij")
    cols = [x**i * y**j for i in range(degree + 1) for j in range(degree + 1 - i)]
    return np.stack([c.ravel() for c in cols], axis=1)


def remove_background(phi, t_sigma: float, poly_degree: int = 3, std_window: int = 3) -> np.ndarray:
    """Subtract a polynomial surface fitted on the flat (low local spread) pixels."""
    phi = as_grid(phi, "phi")
    if min(phi.shape) < 3:
        raise ValueError(f"need at least a 3x3 grid, got {phi.shape}")
    if not 0.5 <= t_sigma <= 1.0:
        raise ValueError(f"t_sigma must lie in [0.5, 1], got {t_sigma}")
    if poly_degree < 0:
        raise ValueError("poly_degree must be non-negative")
    mask = local_std(phi, std_window) < t_sigma
    design = _poly_design(*phi.shape, poly_degree)
    n_coef = design.shape[1]
    if mask.sum() < n_coef:
        raise ValueError(f"background mask has {int(mask.sum())} pixels, fewer than the {n_coef} coefficients")
    m = mask.ravel()
    coef, *_ = np.linalg.lstsq(design[m], phi.ravel()[m], rcond=None)
    return phi - (design @ coef).reshape(phi.shape)


def segment_threshold(phi, fraction: float = 0.2) -> np.ndarray:
    """Binary mask of pixels at or above ``fraction`` of the maximum (all-zero input gives all ones)."""
    phi = as_grid(phi, "phi")
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    return (phi >= fraction * phi.max()).astype(np.float64)
