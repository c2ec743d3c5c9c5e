"""Optimize the generator against the reweighted gradient-consistency loss."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import nn
from ..core import WeightBounds, as_grid, congruence, wrapped_gradient, weights_from_residual
from ..io import write_grid
from ..nn import Tensor
from .network import GeneratorConfig, build_generator, sample_input


class NumericalError(RuntimeError):
    """Raised when the loss becomes non-finite (usually a learning rate that is too high)."""


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    lr: float = 0.01
    weight_bounds: WeightBounds = field(default_factory=lambda: WeightBounds(0.1, 10.0))
    refresh_every: int = 100
    delta: float = 1e-18
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if self.iterations < 1 or self.refresh_every < 1:
            raise ValueError("iterations and refresh_every must be positive")
        if self.refresh_every > self.iterations:
            raise ValueError("refresh_every cannot exceed iterations")
        if self.lr <= 0 or self.delta <= 0:
            raise ValueError("lr and delta must be positive")


@dataclass
class RunReport:
    losses: list[float]
    phi_hat: np.ndarray
    phi_tilde: np.ndarray
    wall_time: float
    seed: int
    config: dict

    def write_log(self, path) -> None:
        """One ``iteration loss`` line per step, full float precision."""
        lines = [f"{i} {loss!r}" for i, loss in enumerate(self.losses)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def save(self, directory) -> None:
        """Write ``phi_hat.phz``, ``phi_tilde.phz`` and ``losses.txt`` into ``directory``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_grid(d / "phi_hat.phz", self.phi_hat)
        write_grid(d / "phi_tilde.phz", self.phi_tilde)
        self.write_log(d / "losses.txt")


def desk_profile(iterations: int = 600, seed: int = 0, **overrides) -> tuple[GeneratorConfig, TrainConfig]:
    """Small settings for 64x64 images on a CPU."""
    gcfg = GeneratorConfig(input_channels=32, stages=3, body_channels=32, skip_channels=4)
    tcfg = TrainConfig(iterations=iterations, seed=seed, **overrides)
    return gcfg, tcfg


def paper_profile(iterations: int = 1000, seed: int = 0, **overrides) -> tuple[GeneratorConfig, TrainConfig]:
    """Full-width settings intended for 256x256 images."""
    gcfg = GeneratorConfig(input_channels=32, stages=5, body_channels=128, skip_channels=4)
    tcfg = TrainConfig(iterations=iterations, seed=seed, **overrides)
    return gcfg, tcfg


def _target(psi: np.ndarray) -> np.ndarray:
    g = wrapped_gradient(psi)
    return np.stack([g.gx, g.gy])


def pudip_loss(output: Tensor, psi, w, delta: float = 1e-18) -> Tensor:
    """sum_n w_n * sqrt(|[Delta f - W(Delta psi)]_n|^2 + delta); ``w`` is held constant."""
    psi = as_grid(psi, "psi")
    w = as_grid(w, "w")
    if output.shape != (1,) + psi.shape or w.shape != psi.shape:
        raise ValueError(f"shape mismatch: output {output.shape}, psi {psi.shape}, w {w.shape}")
    r = nn.forward_diff(output) - _target(psi)
    sq = nn.square(r)
    mag = nn.sqrt(sq[0] + sq[1] + delta)
    return nn.tsum(mag * w)


def _residual_norm(out: np.ndarray, target: np.ndarray) -> np.ndarray:
    d = out[0]
    gx = np.zeros_like(d)
    gy = np.zeros_like(d)
    gx[:, :-1] = d[:, 1:] - d[:, :-1]
    gy[:-1, :] = d[1:, :] - d[:-1, :]
    return np.hypot(gx - target[0], gy - target[1])


def unwrap_pudip(psi, gcfg: GeneratorConfig | None = None, tcfg: TrainConfig | None = None, callback=None):
    """Unwrap ``psi`` with an untrained generator; returns ``(phi_tilde, RunReport)``.

    ``callback(iteration, loss, output)`` is called after every step if given.
    """
    psi = as_grid(psi, "psi")
    gcfg = gcfg or GeneratorConfig()
    tcfg = tcfg or TrainConfig()
    H, W = psi.shape
    t0 = time.perf_counter()

    net = build_generator(gcfg, H, W, seed=tcfg.seed)
    z = sample_input(tcfg.seed, gcfg.input_channels, *net.padded)
    params = net.parameters()
    state = nn.AdamState(lr=tcfg.lr, beta1=tcfg.beta1, beta2=tcfg.beta2)
    target = _target(psi)

    losses: list[float] = []
    w = None
    for it in range(tcfg.iterations):
        out = net(z)
        if it % tcfg.refresh_every == 0:
            w = weights_from_residual(_residual_norm(out.data, target), tcfg.weight_bounds)
        loss = pudip_loss(out, psi, w, tcfg.delta)
        value = float(loss.data)
        if not np.isfinite(value):
            raise NumericalError(f"non-finite loss at iteration {it}; try a smaller learning rate")
        losses.append(value)
        nn.backward(loss)
        nn.adam_step(params, state)
        nn.zero_grad(params)
        if callback is not None:
            callback(it, value, out.data[0])

    phi_hat = net(z).data[0].copy()
    if not np.all(np.isfinite(phi_hat)):
        raise NumericalError("network output became non-finite")
    phi_tilde = congruence(psi, phi_hat)
    report = RunReport(
        losses=losses,
        phi_hat=phi_hat,
        phi_tilde=phi_tilde,
        wall_time=time.perf_counter() - t0,
        seed=tcfg.seed,
        config={"generator": _config_echo(gcfg), "train": _config_echo(tcfg)},
    )
    return phi_tilde, report


def _config_echo(cfg) -> dict:
    d = asdict(cfg)
    if "offset_mode" in d:
        d["offset_mode"] = type(cfg.offset_mode).__name__
    return d
