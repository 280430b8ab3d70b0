"""Probing the weighted inequalities behind the continuation argument.

The radial weight exp(beta/2 (log r)^2) blows up at its center, so the
integrals are evaluated in the log domain on a radially refined grid.
Swept over beta, the gradient-to-Laplacian ratio must not grow; the
memory-kernel inequalities must hold for every admissible kernel up to
the horizon T0 = min(1/(4 e b0), ln 2 / b1).
"""

import numpy as np

from viscowave.ucp import (
    CarlemanConfig,
    RadialBump,
    probe_kernel_inequalities,
    probe_weight_ratio,
)

r0 = 0.3
bumps = [RadialBump(center=(c * np.cos(t), c * np.sin(t), 0.05 * r0),
                    radius=0.35 * c)
         for c, t in zip([0.12, 0.16, 0.2], [0.0, 1.3, 2.1])]
cfg = CarlemanConfig(x0=(0.0, 0.0, 0.0), beta=4.0, r0=r0)

betas = np.geomspace(4.0, 40.0, 5)
rows = probe_weight_ratio(cfg, bumps, betas)
print("beta-sweep of  beta Int h^2(|grad z|^2 + z^2) / Int h^2 |Lap z|^2 :")
for i in range(len(bumps)):
    series = [r["ratio"] for r in rows if r["bump"] == i]
    trend = "non-growing" if series[-1] <= series[0] * 1.05 else "GROWING"
    print(f"  bump {i}: " + "  ".join(f"{v:.3e}" for v in series) + f"  ({trend})")
print(f"largest observed ratio (empirical only): "
      f"{max(r['ratio'] for r in rows):.3e}")

print("\nmemory-kernel inequalities, slack = bound / left-hand side:")
for b0, b1 in ((1.0, 1.0), (0.5, 2.0), (3.0, 3.0)):
    probe = CarlemanConfig(x0=(0, 0, 0), beta=6.0, r0=r0, b0=b0, b1=b1)
    parts = [(bumps[0], lambda s: np.sin(3.0 * s) + 0.4),
             (bumps[1], lambda s: s ** 2 - 0.2 * s + 0.1)]
    worst_conv = worst_coer = np.inf
    for row in probe_kernel_inequalities(probe, parts):
        worst_conv = min(worst_conv, row["convolution_rhs"]
                         / max(row["convolution_lhs"], 1e-300))
        worst_coer = min(worst_coer, row["coercivity_rhs"]
                         / max(row["coercivity_lhs"], 1e-300))
    print(f"  b0={b0}, b1={b1}: horizon T0={probe.horizon:.4f}, "
          f"min convolution slack {worst_conv:.2f}, "
          f"min coercivity slack {worst_coer:.2f}")
