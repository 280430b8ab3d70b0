"""Finite speed of propagation, checked on a ball that shrinks in time.

The material's bound speed comes from the summed operator norms of the
unit tensors over the density.  A ball that starts away from the
source and shrinks at that speed must stay empty of signal until it
collapses; shrink it at a quarter of the speed instead and the wave
catches it - the negative control.
"""

from viscowave import (
    BoundaryMask,
    Cone,
    Grid,
    IsotropicModuli,
    Material,
    MaxwellUnit,
    SourceSpec,
    alpha,
    run_with_cone,
    verify_fsp,
)

material = Material((MaxwellUnit(IsotropicModuli(1.0, 1.0, 2)),), rho=1.0)
grid = Grid(2, (201, 201), 1.0 / 200)
bcs = BoundaryMask({"x_lo": "dirichlet", "x_hi": "traction",
                    "y_lo": "traction", "y_hi": "traction"})
source = SourceSpec(face="x_lo", frequency=5.0, amplitude=1e-3,
                    polarization=(0.0, 1.0), center=(0.0, 0.5), width=0.08,
                    ramp_cycles=1.0)

bound = alpha(material)
print(f"speed bound alpha = {bound:.4f}  "
      f"(shear speed 1.0, pressure speed {(2 * 1 + 2 * 1) ** 0.5 / 2 ** 0.5:.4f})")
cone = Cone(center=(0.45, 0.5), radius=0.25, speed=bound)
result = run_with_cone(material, grid, bcs, source, 0.30, cone,
                       snapshot_every=5, store_v=True, trace_every=4)

print("\n-- bound-speed cone --")
print(verify_fsp(result, cone))

slow = Cone(cone.center, cone.radius, cone.speed / 4.0)
print("\n-- quarter-speed cone (negative control) --")
print(verify_fsp(result, slow, trace_matches_cone=False))
