"""Build the two material families and look at their relaxation kernels.

An extended Maxwell body (every unit has a dashpot) relaxes to zero
stress; give one unit no dashpot and the kernel keeps a plateau - the
extended standard linear solid.  The kernel acts separately on the
volumetric and deviatoric parts of the strain, with one decaying
exponential per viscous unit.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from viscowave import IsotropicModuli, Material, MaxwellUnit, relaxation_kernel

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

emm = Material((
    MaxwellUnit(IsotropicModuli(lam=1.0, mu=1.0, dim=3), viscosity=2.0),
    MaxwellUnit(IsotropicModuli(lam=0.4, mu=0.6, dim=3), viscosity=0.4),
))
esls = Material(emm.units + (MaxwellUnit(IsotropicModuli(lam=0.2, mu=0.5, dim=3)),))

print(f"first material: {emm.kind},  second material: {esls.kind}")
print(f"unrelaxed shear speeds: {emm.unrelaxed_shear_speed():.4f}, "
      f"{esls.unrelaxed_shear_speed():.4f}  (sqrt(sum mu_j / rho))")

t = np.linspace(0.0, 8.0, 400)
fig, axes = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
for material, label in ((emm, "no plateau"), (esls, "with plateau")):
    k = relaxation_kernel(material)
    axes[0].plot(t, k.vol(t), label=f"{material.kind} ({label})")
    axes[1].plot(t, k.dev(t), label=material.kind)
    print(f"{material.kind}: g_V(0) = {k.vol(0.0):.3f}, plateau = {k.vol_const:.3f}; "
          f"g_D(0) = {k.dev(0.0):.3f}, plateau = {k.dev_const:.3f}")
axes[0].set_title("volumetric kernel")
axes[1].set_title("deviatoric kernel")
for ax in axes:
    ax.set_xlabel("t (s)")
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "relaxation_kernels.png"), dpi=120)
print(f"wrote {OUT}/relaxation_kernels.png")
