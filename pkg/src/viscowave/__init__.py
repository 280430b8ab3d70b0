"""Time-domain simulation and verification of viscoelastic wave models.

Isotropic media built from parallel spring-dashpot units: stress via
Prony-series convolution kernels or local-in-time memory strains, an
energy-exact explicit grid solver, finite-speed-of-propagation
monitoring, exact polynomial verification of the curl/div elliptic
reformulation, Carleman-weight inequality probes, and wave-speed
identification experiments on the simulated fields.
"""

from .constitutive import (
    Material,
    MaxwellUnit,
    MemoryState,
    RelaxationKernel,
    memory_update,
    relaxation_kernel,
    stress_convolution,
    stress_internal,
)
from .fsp import Cone, EnergyTrace, alpha, cone_energy, run_with_cone, verify_fsp
from .inversion import (
    DiscriminationReport,
    SpeedMap,
    estimate_speed,
    residual_field,
    uniqueness_experiment,
)
from .polycalc import Poly, PolyVec
from .solver import (
    BoundaryMask,
    Grid,
    RunResult,
    SimState,
    SolverInstabilityError,
    SourceSpec,
    run,
    stable_dt,
)
from .tensors import IsotropicModuli, SymTensor, apply_isotropic, exp_apply
from .ucp import AugmentedField, CarlemanConfig, RadialBump, carleman_weight

__version__ = "0.1.0"

__all__ = [
    "AugmentedField", "BoundaryMask", "CarlemanConfig", "Cone",
    "DiscriminationReport", "EnergyTrace", "Grid", "IsotropicModuli",
    "Material", "MaxwellUnit", "MemoryState", "Poly", "PolyVec",
    "RadialBump", "RelaxationKernel", "RunResult", "SimState",
    "SolverInstabilityError", "SourceSpec", "SpeedMap", "SymTensor",
    "alpha", "apply_isotropic", "carleman_weight", "cone_energy",
    "estimate_speed", "exp_apply", "memory_update", "relaxation_kernel",
    "residual_field", "run", "run_with_cone", "stable_dt",
    "stress_convolution", "stress_internal", "uniqueness_experiment",
    "verify_fsp",
]
