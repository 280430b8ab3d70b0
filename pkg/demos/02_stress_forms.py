"""Two routes to the same stress: convolution kernel vs memory strains.

The hereditary integral over the strain-rate history and the local
update of per-unit memory strains are forms of the same law.  Here a
smooth strain history is pushed through both routes; halving the step
shrinks their difference at second order.
"""

import numpy as np

from viscowave import IsotropicModuli, Material, MaxwellUnit, relaxation_kernel
from viscowave.constitutive import (
    MemoryState,
    stress_convolution,
    stress_internal,
    update_memory_state,
)
from viscowave.tensors import pack

material = Material((
    MaxwellUnit(IsotropicModuli(1.0, 1.0, 3), 2.0),
    MaxwellUnit(IsotropicModuli(0.2, 0.5, 3)),   # spring only: ESLS
))
kernel = relaxation_kernel(material)

rng = np.random.default_rng(3)
A = rng.standard_normal((3, 3))
mode = pack(0.5 * (A + A.T))
history = lambda t: np.sin(1.7 * t)[:, None] * mode + (t ** 2)[:, None] * mode * 0.1

print("steps   max |sigma_conv - sigma_mem|   ratio")
previous = None
for n in (64, 128, 256, 512, 1024):
    times = np.linspace(0.0, 1.0, n + 1)
    strains = history(times)
    mem = MemoryState.zeros(material)
    for i in range(n):
        mem = update_memory_state(material, mem, strains[i], strains[i + 1],
                                  times[1] - times[0])
    gap = np.max(np.abs(
        stress_convolution(kernel, times, strains, 1.0, 3)
        - stress_internal(material, strains[-1], mem)))
    ratio = "" if previous is None else f"{previous / gap:.2f}"
    print(f"{n:5d}   {gap:.3e}                   {ratio}")
    previous = gap
print("ratios near 4 = second-order agreement of the two forms")
