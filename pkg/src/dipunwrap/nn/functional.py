"""Differentiable layer ops on ``C x H x W`` tensors (batch size is always 1)."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .tensor import Tensor, make_node


def _out_size(n: int, k: int, stride: int, padding: int) -> int:
    return (n + 2 * padding - k) // stride + 1


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 1) -> Tensor:
    """2D cross-correlation with zero padding.

    x: (C, H, W); kernel: (O, C, kh, kw); bias: (O,).
    """
    if x.data.ndim != 3 or kernel.data.ndim != 4:
        raise ValueError(f"conv2d expects (C,H,W) input and (O,C,kh,kw) kernel, got {x.shape} and {kernel.shape}")
    C, H, W = x.shape
    O, Ck, kh, kw = kernel.shape
    if Ck != C:
        raise ValueError(f"kernel expects {Ck} input channels, input has {C}")
    if bias is not None and bias.shape != (O,):
        raise ValueError(f"bias shape {bias.shape} does not match {O} output channels")
    if stride not in (1, 2):
        raise ValueError(f"stride must be 1 or 2, got {stride}")
    Ho, Wo = _out_size(H, kh, stride, padding), _out_size(W, kw, stride, padding)
    if Ho < 1 or Wo < 1:
        raise ValueError(f"input {H}x{W} too small for kernel {kh}x{kw}")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = np.empty((C, kh, kw, Ho, Wo))
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, i : i + stride * Ho : stride, j : j + stride * Wo : stride]
    cols = cols.reshape(C * kh * kw, Ho * Wo)
    kmat = kernel.data.reshape(O, C * kh * kw)
    out = kmat @ cols
    if bias is not None:
        out += bias.data[:, None]
    out = out.reshape(O, Ho, Wo)

    def bw(g):
        g2 = g.reshape(O, Ho * Wo)
        gk = (g2 @ cols.T).reshape(kernel.shape) if kernel.requires_grad else None
        gb = g2.sum(axis=1) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (kmat.T @ g2).reshape(C, kh, kw, Ho, Wo)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += gcols[:, i, j]
            gx = gxp[:, padding : padding + H, padding : padding + W] if padding else gxp
        return gx, gk, gb

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return make_node(out, parents, bw, f"conv{kh}x{kw}/s{stride}")


def conv2d_1x1(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Pointwise channel mixing; kernel (O, C, 1, 1)."""
    if kernel.data.ndim != 4 or kernel.shape[2:] != (1, 1):
        raise ValueError(f"expected (O,C,1,1) kernel, got {kernel.shape}")
    if x.data.ndim != 3 or kernel.shape[1] != x.shape[0]:
        raise ValueError(f"kernel {kernel.shape} incompatible with input {x.shape}")
    C, H, W = x.shape
    O = kernel.shape[0]
    kmat = kernel.data.reshape(O, C)
    xm = x.data.reshape(C, H * W)
    out = kmat @ xm
    if bias is not None:
        out += bias.data[:, None]

    def bw(g):
        g2 = g.reshape(O, H * W)
        gx = (kmat.T @ g2).reshape(C, H, W) if x.requires_grad else None
        gk = (g2 @ xm.T).reshape(kernel.shape) if kernel.requires_grad else None
        gb = g2.sum(axis=1) if bias is not None and bias.requires_grad else None
        return gx, gk, gb

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return make_node(out.reshape(O, H, W), parents, bw, "conv1x1")


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-channel normalization over the spatial positions of a single image."""
    C, H, W = x.shape
    n = H * W
    if n < 2:
        raise ValueError("batch_norm needs at least 2 spatial positions per channel")
    xm = x.data.reshape(C, n)
    mu = xm.mean(axis=1, keepdims=True)
    xc = xm - mu
    var = np.mean(xc * xc, axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv_std
    out = gamma.data[:, None] * xhat + beta.data[:, None]

    def bw(g):
        g2 = g.reshape(C, n)
        gg = np.sum(g2 * xhat, axis=1) if gamma.requires_grad else None
        gbt = np.sum(g2, axis=1) if beta.requires_grad else None
        gx = None
        if x.requires_grad:
            dxhat = g2 * gamma.data[:, None]
            gx = (
                inv_std
                / n
                * (n * dxhat - dxhat.sum(axis=1, keepdims=True) - xhat * np.sum(dxhat * xhat, axis=1, keepdims=True))
            ).reshape(C, H, W)
        return gx, gg, gbt

    return make_node(out.reshape(C, H, W), (x, gamma, beta), bw, "batchnorm")


def prelu(x: Tensor, alpha: Tensor) -> Tensor:
    """x if x >= 0 else alpha_c * x, with one learnable slope per channel."""
    if alpha.shape != (x.shape[0],):
        raise ValueError(f"alpha must have one entry per channel ({x.shape[0]}), got {alpha.shape}")
    a = alpha.data.reshape((-1,) + (1,) * (x.data.ndim - 1))
    neg = x.data < 0
    out = np.where(neg, a * x.data, x.data)

    def bw(g):
        gx = np.where(neg, a * g, g) if x.requires_grad else None
        ga = None
        if alpha.requires_grad:
            ga = np.where(neg, g * x.data, 0.0).reshape(x.shape[0], -1).sum(axis=1)
        return gx, ga

    return make_node(out, (x, alpha), bw, "prelu")


@lru_cache(maxsize=64)
def _upsample_matrix(n: int) -> np.ndarray:
    """(2n, n) half-pixel linear interpolation matrix with edge clamping."""
    m = np.zeros((2 * n, n))
    for o in range(2 * n):
        src = max((o + 0.5) / 2.0 - 0.5, 0.0)
        i0 = min(int(np.floor(src)), n - 1)
        i1 = min(i0 + 1, n - 1)
        t = src - i0
        m[o, i0] += 1.0 - t
        m[o, i1] += t
    m.setflags(write=False)
    return m


def upsample_bilinear_2x(x: Tensor) -> Tensor:
    C, H, W = x.shape
    uh, uw = _upsample_matrix(H), _upsample_matrix(W)
    out = np.einsum("oh,chw,pw->cop", uh, x.data, uw, optimize=True)

    def bw(g):
        return (np.einsum("oh,cop,pw->chw", uh, g, uw, optimize=True),)

    return make_node(out, (x,), bw, "upsample2x")


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"spatial shapes differ: {a.shape[1:]} vs {b.shape[1:]}")
    ca = a.shape[0]
    return make_node(
        np.concatenate([a.data, b.data], axis=0),
        (a, b),
        lambda g: (g[:ca], g[ca:]),
        "concat",
    )


def forward_diff(x: Tensor) -> Tensor:
    """Forward differences of a (1, H, W) tensor, stacked as (2, H, W) = (gx, gy).

    Zero on the last column of gx and last row of gy.
    """
    if x.data.ndim != 3 or x.shape[0] != 1:
        raise ValueError(f"forward_diff expects a (1,H,W) tensor, got {x.shape}")
    d = x.data[0]
    out = np.zeros((2,) + d.shape)
    out[0, :, :-1] = d[:, 1:] - d[:, :-1]
    out[1, :-1, :] = d[1:, :] - d[:-1, :]

    def bw(g):
        gx = np.zeros_like(d)
        gx[:, :-1] -= g[0, :, :-1]
        gx[:, 1:] += g[0, :, :-1]
        gx[:-1, :] -= g[1, :-1, :]
        gx[1:, :] += g[1, :-1, :]
        return (gx[None],)

    return make_node(out, (x,), bw, "forward_diff")
