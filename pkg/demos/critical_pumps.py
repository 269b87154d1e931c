# Where does the normal state give way, and how much does rotation move it?
#
# Run top to bottom; each block prints what it found.

import numpy as np

from dualjc import criticality as cr
from dualjc.model import ModelParams, PhysicalSetup, intrinsic_loss, sagnac_shift

# %% A resonator spinning at 6.6 krad/s: how big is the Sagnac splitting?
lab = PhysicalSetup(refractive_index=1.4, radius=1.1e-3, angular_velocity=6.6e3,
                    vacuum_wavelength=1550e-9, quality_factor=6e9)
print(f"Sagnac shift   {sagnac_shift(lab) / 1e6:.2f} MHz")
print(f"intrinsic loss {intrinsic_loss(lab) / 1e3:.1f} kHz")

# %% Work in units where the loss rate is 0.1 and the splitting is 1.
base = ModelParams.from_lambdas(delta=2.0, sagnac=1.0, delta_q=1e4, kappa=0.1, lambda_a=1.5)

for order, lam in (("first", 1.5), ("second", 1.36)):
    fwd, bwd = cr.nonreciprocity_window(base, lam, order)
    print(f"{order:6s} order at lambda={lam}: forward {fwd / base.kappa:.4f} kappa, "
          f"backward {bwd / base.kappa:.4f} kappa")

# %% Pumps between the two thresholds drive superradiance from one side only.
# With the rotation switched off both directions agree again.
still = base.replace(sagnac=0.0)
print("no rotation:", [round(g / still.kappa, 4) for g in cr.nonreciprocity_window(still, 1.5, "first")])

# %% The coupling where the two kinds of transition meet sits close to sqrt 2
# and drifts only slightly with the splitting.
for ratio in np.linspace(-0.9, 0.9, 7):
    p = base.replace(sagnac=2 * ratio)
    print(f"sagnac/delta={ratio:+.2f}  lambda_tric={cr.lambda_tricritical(p):.5f}")
