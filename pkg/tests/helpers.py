import numpy as np

from dipunwrap import nn
from dipunwrap.nn import Tensor


def smooth_field(rng, h, w, max_step=1.0):
    """Random low-frequency surface whose largest per-pixel gradient norm equals ``max_step``."""
    coarse = rng.normal(size=(4, 4))
    y = np.linspace(0, 3, h)[:, None]
    x = np.linspace(0, 3, w)[None, :]
    phi = np.zeros((h, w))
    for i in range(4):
        for j in range(4):
            phi += coarse[i, j] * np.cos(np.pi * i * y / 3) * np.cos(np.pi * j * x / 3)
    gx = np.zeros_like(phi)
    gy = np.zeros_like(phi)
    gx[:, :-1] = np.diff(phi, axis=1)
    gy[:-1, :] = np.diff(phi, axis=0)
    return phi * (max_step / np.max(np.hypot(gx, gy)))


def numeric_grad(f, arrays, k, h=1e-4):
    """Central differences of scalar f(*arrays) with respect to arrays[k]."""
    x = arrays[k]
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f(*arrays)
        x[i] = old - h
        fm = f(*arrays)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def check_layer(op, arrays, seed):
    """Compare autodiff gradients of sum(op(...) * R) against finite differences."""
    rng = np.random.default_rng(1000 + seed)
    probe_shape = op(*[Tensor(a) for a in arrays]).shape
    probe = rng.normal(size=probe_shape)

    def scalar(*arrs):
        return float(np.sum(op(*[Tensor(a) for a in arrs]).data * probe))

    ts = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = op(*ts)
    nn.backward(nn.tsum(out * Tensor(probe)))
    for k, t in enumerate(ts):
        num = numeric_grad(scalar, [a.copy() for a in arrays], k)
        ana = t.grad
        err = np.linalg.norm(ana - num)
        scale = max(np.linalg.norm(ana), np.linalg.norm(num))
        assert err <= max(1e-3 * scale, 1e-6), f"input {k}: rel err {err / max(scale, 1e-300):.2e}"
