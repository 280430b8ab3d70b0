"""One wavefield cannot obey two different equations of motion.

A single recorded field is tested against candidate materials: the
true one leaves only a discretization floor, a candidate whose
modulus-to-density ratio differs inside a traversed disc lights up
there, and a mismatch hidden in a region the wave never reached is
flagged unidentifiable rather than declared correct.
"""

import numpy as np

from viscowave import (
    BoundaryMask,
    Grid,
    IsotropicModuli,
    Material,
    MaxwellUnit,
    SourceSpec,
    residual_field,
    run,
    uniqueness_experiment,
)

h = 2.5e-4
grid = Grid(2, (121, 81), h)  # 0.03 x 0.02 m
bcs = BoundaryMask({"x_lo": "dirichlet", "x_hi": "traction",
                    "y_lo": "traction", "y_hi": "traction"})
source = SourceSpec(face="x_lo", frequency=150.0, amplitude=1e-4,
                    polarization=(0.0, 1.0), center=(0.0, 0.01), width=0.003,
                    ramp_cycles=1.0, n_cycles=2.0)
truth = Material((MaxwellUnit(IsotropicModuli(1.0, 1.0, 2)),), rho=1.0)
result = run(truth, grid, bcs, source, 0.032, snapshot_every=2,
             trace_every=10 ** 9)

coords = grid.node_coords()
disc = sum((c - p) ** 2 for c, p in zip(coords, (0.015, 0.01))) <= 0.004 ** 2
mu = np.where(disc, 1.2, 1.0)
candidate = Material((MaxwellUnit(IsotropicModuli(np.ones(grid.shape), mu, 2)),),
                     rho=1.0)

floor = residual_field(result, truth)
wrong = residual_field(result, candidate)
print(f"self-residual floor inside the disc: {np.max(floor[disc]):.3e}")
print(f"candidate residual inside the disc:  {np.max(wrong[disc]):.3e}")
print(f"separation: {np.max(wrong[disc]) / max(np.max(floor[disc]), 1e-300):.1e} x")

report = uniqueness_experiment(result, candidate)
print("\n" + str(report))
