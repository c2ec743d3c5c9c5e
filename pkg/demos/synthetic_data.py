"""Tour of the synthetic generators, writing a few grids to ./demo_out."""

from pathlib import Path

import numpy as np

from dipunwrap.core import wrap
from dipunwrap.datagen import (
    Distribution,
    Ellipsoid,
    PhantomSpec,
    RandomSurfaceSpec,
    add_speckle,
    gen_sample_c,
    gen_sample_d,
    phasenet_samples,
    realized_snr_db,
    straight_ray_phase,
)
from dipunwrap.io import export_csv, write_grid

out = Path("demo_out")
out.mkdir(exist_ok=True)

# sample C: peak height controls how many wrap fronts appear
for mx in (6, 24, 42):
    row = wrap(gen_sample_c(mx))[128]
    print(f"max {mx:>2}: {int(np.sum(np.abs(np.diff(row)) > np.pi))} fronts on the centre row")

truth, psi = gen_sample_d(RandomSurfaceSpec(7, Distribution.GAUSSIAN_SHIFTED, 15.0, 128), seed=3)
write_grid(out / "sample_d_truth.phz", truth)
write_grid(out / "sample_d_wrapped.phz", psi)

noisy = add_speckle(truth, 15.7, seed=0)
print(f"speckle SNR {realized_snr_db(truth, noisy):.3f} dB")

# two overlapping cells, the smaller one denser
cells = PhantomSpec(
    ellipsoids=(Ellipsoid((0, 0, 0), (6, 5, 4), 1.37), Ellipsoid((2, 1, 0), (2, 2, 2), 1.40)),
    shell_thickness=0.5,
)
phase = straight_ray_phase(cells, 64, 64)
print(f"phantom peak phase {phase.max():.2f} rad")
(out / "phantom.csv").write_text(export_csv(phase))

for s in phasenet_samples(3, seed=0, size=64):
    print(f"tuple seed {s.seed}: matrix {s.matrix_size}, {s.distribution.value}, classes {s.wrap_count.min()}..{s.wrap_count.max()}")
