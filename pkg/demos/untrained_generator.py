"""Unwrap a desk-sized cropped bump with the untrained generator and compare to least squares.

Runs 600 Adam steps on a 64x64 image; expect about a minute on one CPU core.
"""

import numpy as np

from dipunwrap.baselines import unwrap_ls_dct
from dipunwrap.core import wrap
from dipunwrap.datagen import EllipseSpec, gen_sample_b
from dipunwrap.metrics import rsnr, wrap_count_error
from dipunwrap.pudip import desk_profile, unwrap_pudip

truth = gen_sample_b(EllipseSpec(radius_y=20, radius_x=27.5, crop_angle=90), 64, 64)
psi = wrap(truth)

gcfg, tcfg = desk_profile(iterations=600, seed=1)
print(gcfg)


def progress(i, loss, out):
    if i % 100 == 0:
        print(f"  step {i:>4}  loss {loss:10.3f}")


phi, report = unwrap_pudip(psi, gcfg, tcfg, callback=progress)
ls = unwrap_ls_dct(psi)

print(f"generator RSNR {rsnr(phi, truth).value_db:.2f} dB  ({report.wall_time:.0f} s)")
print(f"LS        RSNR {rsnr(ls, truth).value_db:.2f} dB")

# where the integer wrap counts went wrong, after removing the global 2*pi*k offset
k = wrap_count_error(phi, truth, psi)
k -= int(np.round(np.median(k)))
print("pixels with a wrong wrap count:", int(np.count_nonzero(k)))
