"""Reconstruction quality measures."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d

from .core import TWO_PI, as_grid, wrap

RSNR_CAP_DB = 100.0
SSIM_C1 = 1e-4
SSIM_C2 = 9e-4
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

CSV_COLUMNS = ("scenario", "method", "rsnr_db", "ssim", "rewrap_error", "seed", "wall_ms")


class Rsnr(NamedTuple):
    value_db: float  # math.inf above the cap
    offset_b: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value_db)

    def __str__(self) -> str:
        return format_db(self.value_db)


def format_db(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


def _pair(a, b, names=("estimate", "truth")):
    a, b = as_grid(a, names[0]), as_grid(b, names[1])
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {names[0]} {a.shape} vs {names[1]} {b.shape}")
    return a, b


def rsnr(estimate, truth) -> Rsnr:
    """SNR in dB after regressing out the best global offset."""
    est, tru = _pair(estimate, truth)
    tnorm = np.linalg.norm(tru)
    if tnorm == 0:
        raise ValueError("truth has zero norm")
    b = float(np.mean(tru - est))
    err = np.linalg.norm(est + b - tru)
    if err == 0:
        return Rsnr(math.inf, b)
    value = 20.0 * math.log10(tnorm / err)
    return Rsnr(math.inf if value > RSNR_CAP_DB else value, b)


def _gauss_taps(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(a: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # separable correlation, keeping only positions where the window fits
    half = len(taps) // 2
    out = correlate1d(correlate1d(a, taps, axis=0, mode="constant"), taps, axis=1, mode="constant")
    return out[half : a.shape[0] - half, half : a.shape[1] - half]


def ssim_map(estimate, truth) -> np.ndarray:
    est, tru = _pair(estimate, truth)
    if min(est.shape) < SSIM_WINDOW:
        raise ValueError(f"ssim needs grids of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {est.shape}")
    taps = _gauss_taps()
    mu_a, mu_b = _filter_valid(est, taps), _filter_valid(tru, taps)
    var_a = _filter_valid(est * est, taps) - mu_a**2
    var_b = _filter_valid(tru * tru, taps) - mu_b**2
    cov = _filter_valid(est * tru, taps) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return num / den


def ssim(estimate, truth) -> float:
    return float(np.mean(ssim_map(estimate, truth)))


def rewrap_error(phi_tilde, psi) -> float:
    """Relative L2 mismatch between the measurement and the rewrapped estimate."""
    phi, psi = _pair(phi_tilde, psi, ("phi_tilde", "psi"))
    pnorm = np.linalg.norm(psi)
    if pnorm == 0:
        raise ValueError("psi has zero norm")
    return float(np.linalg.norm(psi - wrap(phi)) / pnorm)


def wrap_count_error(estimate, truth, psi) -> np.ndarray:
    """Per-pixel difference of integer wrap counts (estimate minus truth)."""
    est, tru = _pair(estimate, truth)
    _, psi = _pair(est, psi, ("estimate", "psi"))
    k_est = np.rint((est - psi) / TWO_PI)
    k_tru = np.rint((tru - psi) / TWO_PI)
    return (k_est - k_tru).astype(np.int64)


def metric_row(scenario: str, method: str, estimate, truth, psi, seed: int, wall_ms: float) -> dict:
    """One CSV-ready metric record; numbers rendered at full precision.

    SSIM is taken after shifting the estimate by the regressed offset, so a
    global 2*pi*k ambiguity does not count against it.
    """
    r = rsnr(estimate, truth)
    try:
        s = repr(ssim(np.asarray(estimate, dtype=np.float64) + r.offset_b, truth))
    except ValueError:
        s = "nan"  # grid smaller than the window
    return {
        "scenario": scenario,
        "method": method,
        "rsnr_db": format_db(r.value_db),
        "ssim": s,
        "rewrap_error": repr(rewrap_error(estimate, psi)),
        "seed": str(seed),
        "wall_ms": f"{wall_ms:.1f}",
    }
