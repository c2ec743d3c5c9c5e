from __future__ import annotations

import numpy as np

from ..core import wrap


def unwrap_itoh_1d(psi) -> np.ndarray:
    """Integrate wrapped successive differences along a 1D sequence."""
    psi = np.asarray(psi, dtype=np.float64).ravel()
    if psi.size == 0:
        raise ValueError("need at least one sample")
    out = np.empty_like(psi)
    out[0] = psi[0]
    if psi.size > 1:
        out[1:] = psi[0] + np.cumsum(wrap(np.diff(psi)))
    return out
