"""Synthetic ground-truth phase generators.

Every generator is a pure function of its arguments (and seed). Coordinates
follow the screen convention: x grows to the right along columns, y grows
downward along rows, which is the left-handed frame used for crop angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .core import TWO_PI, wrap

# wrap counts stay in [0, 20] (21 classes) when the phase stays below 41*pi
PHASENET_MAX_PHASE = 40.0 * np.pi


@dataclass(frozen=True)
class EllipseSpec:
    radius_y: float = 80.0
    radius_x: float = 110.0
    amplitude: float = 15.0
    sigma: float = 0.45
    crop_angle: float = 0.0

    def __post_init__(self):
        if self.radius_y <= 0 or self.radius_x <= 0:
            raise ValueError("radii must be positive")
        if self.amplitude <= 0 or self.sigma <= 0:
            raise ValueError("amplitude and sigma must be positive")
        if not 0 <= self.crop_angle <= 360:
            raise ValueError(f"crop_angle must lie in [0, 360], got {self.crop_angle}")


class Distribution(Enum):
    UNIFORM01 = "uniform"
    GAUSSIAN_SHIFTED = "gaussian"


@dataclass(frozen=True)
class RandomSurfaceSpec:
    matrix_size: int = 5
    distribution: Distribution = Distribution.UNIFORM01
    scale: float = 15.0
    target_size: int = 256

    def __post_init__(self):
        if self.matrix_size not in (3, 5, 7, 9, 11):
            raise ValueError(f"matrix_size must be one of 3, 5, 7, 9, 11; got {self.matrix_size}")
        if self.scale <= 0 or self.target_size < 2:
            raise ValueError("scale must be positive and target_size at least 2")


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple[float, float, float]  # (x1, x2, x3) in um
    semi_axes: tuple[float, float, float]  # um
    n_inner: float = 1.38


@dataclass(frozen=True)
class PhantomSpec:
    ellipsoids: Sequence[Ellipsoid] = field(default_factory=tuple)
    n_shell: float = 1.35
    shell_thickness: float = 0.0  # um
    n_medium: float = 1.333
    wavelength: float = 0.532  # um
    voxel_pitch: float = 0.2  # um
    pixel_pitch: float = 0.645  # um

    def __post_init__(self):
        if self.wavelength <= 0 or self.pixel_pitch <= 0 or self.voxel_pitch <= 0:
            raise ValueError("wavelength and pitches must be positive")
        if self.shell_thickness < 0:
            raise ValueError("shell thickness must be nonnegative")
        for e in self.ellipsoids:
            if min(e.semi_axes) <= 0:
                raise ValueError("ellipsoid semi-axes must be positive")
            if e.n_inner <= 1:
                raise ValueError("refractive indices must exceed 1")
        if self.n_medium <= 1 or self.n_shell <= 1:
            raise ValueError("refractive indices must exceed 1")


def _centered_coords(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.arange(height, dtype=np.float64) - height // 2
    x = np.arange(width, dtype=np.float64) - width // 2
    return np.meshgrid(y, x, indexing="ij")


def gen_sample_b(spec: EllipseSpec, height: int = 256, width: int = 256) -> np.ndarray:
    """Elliptical Gaussian bump with the angular sector [0, crop_angle) set to zero.

    The peak sits on pixel (height // 2, width // 2). Angles are measured from
    the +x axis towards +y (downward), so 90 degrees crops the lower-right quadrant.
    """
    y, x = _centered_coords(height, width)
    r2 = (y / spec.radius_y) ** 2 + (x / spec.radius_x) ** 2
    phi = np.where(r2 <= 1.0, spec.amplitude * np.exp(-r2 / (2.0 * spec.sigma**2)), 0.0)
    if spec.crop_angle > 0:
        theta = np.degrees(np.arctan2(y, x)) % 360.0
        phi[theta < spec.crop_angle] = 0.0
    return phi


def sample_b_sigma(seed: int) -> float:
    """Random Gaussian width U(0.30, 0.65) used for sample B."""
    return float(np.random.default_rng(seed).uniform(0.30, 0.65))


def gen_sample_c(max_value: float, height: int = 256, width: int = 256, sigma: float = 0.45) -> np.ndarray:
    """Sample B geometry with radii 102/120, crop 135 degrees, rescaled to peak ``max_value``."""
    if max_value <= 0:
        raise ValueError("max_value must be positive")
    phi = gen_sample_b(EllipseSpec(102.0, 120.0, 1.0, sigma, 135.0), height, width)
    return phi * (max_value / phi.max())


@lru_cache(maxsize=32)
def _cubic_matrix(n_in: int, n_out: int, a: float = -0.5) -> np.ndarray:
    """(n_out, n_in) cubic-convolution interpolation matrix, half-pixel aligned, edge-clamped."""

    def kernel(t):
        t = abs(t)
        if t <= 1:
            return (a + 2) * t**3 - (a + 3) * t**2 + 1
        if t < 2:
            return a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a
        return 0.0

    m = np.zeros((n_out, n_in))
    ratio = n_in / n_out
    for o in range(n_out):
        src = (o + 0.5) * ratio - 0.5
        base = math.floor(src)
        for k in range(base - 1, base + 3):
            m[o, min(max(k, 0), n_in - 1)] += kernel(src - k)
    m.setflags(write=False)
    return m


def bicubic_upsample(m, height: int, width: int) -> np.ndarray:
    """Separable Catmull-Rom interpolation of a small matrix onto a ``height x width`` grid."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or min(m.shape) < 2:
        raise ValueError(f"need at least a 2x2 matrix, got shape {m.shape}")
    return _cubic_matrix(m.shape[0], height) @ m @ _cubic_matrix(m.shape[1], width).T


def _random_matrix(rng: np.random.Generator, size: int, dist: Distribution) -> np.ndarray:
    if dist is Distribution.UNIFORM01:
        return rng.uniform(0.0, 1.0, (size, size))
    g = rng.standard_normal((size, size))
    return g - g.min()


def _smooth_disk(mat: np.ndarray, target: int) -> np.ndarray:
    surf = bicubic_upsample(mat, target, target)
    # cubic convolution overshoots; keep the surface inside the sample range
    surf = np.clip(surf, mat.min(), mat.max())
    c = (target - 1) / 2.0
    yy, xx = np.mgrid[0:target, 0:target]
    disk = (yy - c) ** 2 + (xx - c) ** 2 <= (target / 2.0) ** 2
    return np.where(disk, surf, 0.0)


def gen_sample_d(spec: RandomSurfaceSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random smooth object on a centered disk; returns ``(truth, wrapped)``."""
    rng = np.random.default_rng(seed)
    mat = _random_matrix(rng, spec.matrix_size, spec.distribution) * spec.scale
    truth = _smooth_disk(mat, spec.target_size)
    return truth, wrap(truth)


def add_speckle(phi, snr_db: float, seed: int) -> np.ndarray:
    """Add zero-mean multiplicative speckle-like perturbation at an exact SNR.

    An exponential intensity field ``I ~ Exp(1)`` modulates the phase
    (``phi * I``); the resulting perturbation ``phi * (I - 1)`` is centred and
    scaled so that ``20 log10(|phi| / |n|) == snr_db``. ``snr_db = inf``
    returns the input unchanged.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if math.isinf(snr_db) and snr_db > 0:
        return phi.copy()
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    rng = np.random.default_rng(seed)
    intensity = rng.exponential(1.0, phi.shape)
    n = phi * (intensity - 1.0)
    n -= n.mean()
    norm_n = np.linalg.norm(n)
    if norm_n == 0:
        raise ValueError("cannot add speckle to an all-zero phase")
    n *= np.linalg.norm(phi) / (norm_n * 10.0 ** (snr_db / 20.0))
    return phi + n


def realized_snr_db(clean, noisy) -> float:
    clean = np.asarray(clean, dtype=np.float64)
    return 20.0 * math.log10(np.linalg.norm(clean) / np.linalg.norm(np.asarray(noisy) - clean))


def _chord(e_center, e_axes, x1, x2, grow: float):
    """Per-pixel [lo, hi] along x3 of the ellipsoid grown by ``grow``; NaN where the ray misses."""
    a1, a2, a3 = (s + grow for s in e_axes)
    q = ((x1 - e_center[0]) / a1) ** 2 + ((x2 - e_center[1]) / a2) ** 2
    half = np.where(q < 1.0, a3 * np.sqrt(np.clip(1.0 - q, 0.0, None)), np.nan)
    return e_center[2] - half, e_center[2] + half


def straight_ray_phase(spec: PhantomSpec, height: int, width: int) -> np.ndarray:
    """Line integral of (n - n_medium) along x3, times 2*pi/lambda.

    Each ray's chord through every ellipsoid and its shell is computed in
    closed form. Where interiors overlap, the highest interior index wins;
    shells only fill points that lie in no interior.
    """
    if not spec.ellipsoids:
        return np.zeros((height, width))
    x1 = (np.arange(width) - (width - 1) / 2.0) * spec.pixel_pitch
    x2 = (np.arange(height) - (height - 1) / 2.0) * spec.pixel_pitch
    X1, X2 = np.meshgrid(x1, x2)

    # intervals: (lo, hi, index, priority); interiors outrank shells
    los, his, idx, prio = [], [], [], []
    for e in spec.ellipsoids:
        lo, hi = _chord(e.center, e.semi_axes, X1, X2, 0.0)
        los.append(lo), his.append(hi), idx.append(e.n_inner), prio.append(1)
        if spec.shell_thickness > 0:
            lo, hi = _chord(e.center, e.semi_axes, X1, X2, spec.shell_thickness)
            los.append(lo), his.append(hi), idx.append(spec.n_shell), prio.append(0)
    lo = np.stack(los, axis=-1)
    hi = np.stack(his, axis=-1)
    n_of = np.array(idx)
    prio = np.array(prio)

    # breakpoints along each ray; evaluate the index at every sub-segment midpoint
    pts = np.sort(np.concatenate([np.nan_to_num(lo, nan=0.0), np.nan_to_num(hi, nan=0.0)], axis=-1), axis=-1)
    mid = 0.5 * (pts[..., 1:] + pts[..., :-1])
    seg = pts[..., 1:] - pts[..., :-1]
    inside = (mid[..., :, None] >= lo[..., None, :]) & (mid[..., :, None] <= hi[..., None, :])  # NaN compares False
    inner = inside & (prio == 1)
    shell = inside & (prio == 0)
    n_inner = np.where(inner, n_of, -np.inf).max(axis=-1)
    n_here = np.where(np.isfinite(n_inner), n_inner, np.where(shell.any(axis=-1), spec.n_shell, spec.n_medium))
    path = np.sum(seg * (n_here - spec.n_medium), axis=-1)
    return (TWO_PI / spec.wavelength) * path


class PhaseNetSample(NamedTuple):
    wrapped: np.ndarray
    wrap_count: np.ndarray
    truth: np.ndarray
    seed: int
    scale: float
    matrix_size: int
    distribution: Distribution


def wrap_count(truth) -> np.ndarray:
    truth = np.asarray(truth, dtype=np.float64)
    return np.rint((truth - wrap(truth)) / TWO_PI).astype(np.int64)


def phasenet_samples(count: int, seed: int, size: int = 256) -> Iterator[PhaseNetSample]:
    """Training tuples in the style of the supervised wrap-count classifier.

    Half of the tuples use a U(0,1) matrix and half a min-shifted N(0,1)
    matrix; sizes cycle over 3..11 at random. Each tuple gets its own seed
    derived from ``seed``. Surfaces whose peak exceeds 40*pi are scaled down
    to it so the wrap count spans at most 21 classes.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    children = np.random.SeedSequence(seed).spawn(count)
    for i, child in enumerate(children):
        tuple_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(tuple_seed)
        dist = Distribution.UNIFORM01 if i % 2 == 0 else Distribution.GAUSSIAN_SHIFTED
        msize = int(rng.choice([3, 5, 7, 9, 11]))
        scale = float(rng.uniform(3 * np.pi, 12 * np.pi))
        truth = _smooth_disk(_random_matrix(rng, msize, dist) * scale, size)
        peak = truth.max()
        if peak > PHASENET_MAX_PHASE:
            truth *= PHASENET_MAX_PHASE / peak
        wrapped = wrap(truth)
        yield PhaseNetSample(wrapped, wrap_count(truth), truth, tuple_seed, scale, msize, dist)


def gen_phasenet_dataset(count: int, seed: int, size: int = 256) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Stream of ``(wrapped, wrap_count)`` pairs."""
    for s in phasenet_samples(count, seed, size):
        yield s.wrapped, s.wrap_count
