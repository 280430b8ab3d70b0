"""EMM / ESLS material descriptions and their two equivalent stress forms.

A material is a parallel array of spring-dashpot units.  Units with a
dashpot relax; units without one respond elastically and build the
long-time plateau of the relaxation kernel.  Stress can be evaluated
either by convolving the strain-rate history against the Prony-series
relaxation kernel, or locally in time through per-unit memory strains
advanced by an exponential-time-differencing update that is exact for
strain varying linearly over a step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensors import (
    IsotropicModuli,
    identity_packed,
    n_components,
    trace,
    vol_dev_split,
)


@dataclass(frozen=True)
class MaxwellUnit:
    """One spring (+ optional dashpot) constituent.

    `viscosity` is in Pa*s; `None` marks a pure-spring unit.
    """

    moduli: IsotropicModuli
    viscosity: float | None = None

    def __post_init__(self):
        if self.viscosity is not None and not np.all(np.asarray(self.viscosity) > 0.0):
            raise ValueError("viscosity must be positive when present")

    @property
    def is_viscous(self) -> bool:
        return self.viscosity is not None

    def relaxation_rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Volumetric and deviatoric decay rates (1/s) of this unit."""
        if not self.is_viscous:
            raise ValueError("elastic unit has no relaxation rate")
        eta = np.asarray(self.viscosity, dtype=float)
        return (np.asarray(self.moduli.volumetric_eigenvalue) / eta,
                np.asarray(self.moduli.deviatoric_eigenvalue) / eta)


@dataclass(frozen=True)
class Material:
    """Ordered unit list (viscous units first) plus mass density.

    `kind` is derived: all units viscous -> "EMM"; a mix -> "ESLS";
    no dashpots at all -> "elastic" (degenerate but useful baseline).
    Moduli, viscosities and `rho` may be scalars or per-node arrays for
    heterogeneous media.
    """

    units: tuple[MaxwellUnit, ...]
    rho: float | np.ndarray = 1.0
    frozen_dashpots: bool = False

    def __post_init__(self):
        if not self.units:
            raise ValueError("material needs at least one unit")
        object.__setattr__(self, "units", tuple(self.units))
        seen_elastic = False
        for i, u in enumerate(self.units):
            if u.is_viscous and seen_elastic:
                raise ValueError(
                    f"units must list viscous constituents first (unit {i})")
            seen_elastic = seen_elastic or not u.is_viscous
        if not np.all(np.asarray(self.rho) > 0.0):
            raise ValueError("density must be positive everywhere")

    @property
    def dim(self) -> int:
        return self.units[0].moduli.dim

    @property
    def n_viscous(self) -> int:
        if self.frozen_dashpots:
            return 0
        return sum(1 for u in self.units if u.is_viscous)

    @property
    def viscous_units(self) -> tuple[MaxwellUnit, ...]:
        return self.units[: self.n_viscous]

    @property
    def kind(self) -> str:
        nv = sum(1 for u in self.units if u.is_viscous)
        if nv == 0 or self.frozen_dashpots:
            return "elastic"
        return "EMM" if nv == len(self.units) else "ESLS"

    def shear_modulus_sum(self):
        """Instantaneous (unrelaxed) sum of unit shear moduli."""
        return sum(np.asarray(u.moduli.mu, dtype=float) for u in self.units)

    def unrelaxed_shear_speed(self):
        """sqrt(sum_j mu_j / rho): speed of shear fronts under G(0)."""
        return np.sqrt(self.shear_modulus_sum() / np.asarray(self.rho, dtype=float))


@dataclass(frozen=True)
class RelaxationKernel:
    """Prony-series pair acting on the volumetric/deviatoric subspaces.

    Each term is (amplitude Pa, decay rate 1/s); the constants are the
    elastic plateau reached as t -> infinity (zero for EMM).
    """

    vol_terms: tuple[tuple[float, float], ...]
    dev_terms: tuple[tuple[float, float], ...]
    vol_const: float = 0.0
    dev_const: float = 0.0

    def vol(self, t):
        """Volumetric kernel value g_V(t)."""
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(np.asarray(self.vol_const, dtype=float), t.shape).copy()
        for amp, rate in self.vol_terms:
            out = out + amp * np.exp(-rate * t)
        return out if out.shape else float(out)

    def dev(self, t):
        """Deviatoric kernel value g_D(t)."""
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(np.asarray(self.dev_const, dtype=float), t.shape).copy()
        for amp, rate in self.dev_terms:
            out = out + amp * np.exp(-rate * t)
        return out if out.shape else float(out)

    def vol_rate(self, t):
        """d g_V / dt."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for amp, rate in self.vol_terms:
            out = out - amp * rate * np.exp(-rate * t)
        return out if out.shape else float(out)

    def dev_rate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for amp, rate in self.dev_terms:
            out = out - amp * rate * np.exp(-rate * t)
        return out if out.shape else float(out)


def relaxation_kernel(material: Material) -> RelaxationKernel:
    """Prony representation of the material's relaxation tensor.

    Viscous unit j contributes amplitude d*lam_j + 2*mu_j at rate
    (d*lam_j + 2*mu_j)/eta_j on the volumetric subspace and amplitude
    2*mu_j at rate 2*mu_j/eta_j on the deviatoric one; elastic units
    contribute their eigenvalues to the plateau constants.  At t = 0
    the kernel equals the sum of all unit eigenvalues.
    """
    vol_terms, dev_terms = [], []
    vol_const, dev_const = 0.0, 0.0
    for u in material.units:
        kv = u.moduli.volumetric_eigenvalue
        kd = u.moduli.deviatoric_eigenvalue
        if u.is_viscous and not material.frozen_dashpots:
            rv, rd = u.relaxation_rates()
            vol_terms.append((kv, rv))
            dev_terms.append((kd, rd))
        else:
            vol_const = vol_const + kv
            dev_const = dev_const + kd
    return RelaxationKernel(tuple(vol_terms), tuple(dev_terms), vol_const, dev_const)


@dataclass
class MemoryState:
    """Per-viscous-unit memory strains on a common grid.

    The volumetric memory of unit j is spherical by construction and
    stored as its scalar multiplier of the identity (`vol[j]`); the
    deviatoric memory (`dev[j]`) is a packed trace-free tensor field.
    Both start at zero.
    """

    vol: list = field(default_factory=list)
    dev: list = field(default_factory=list)

    @classmethod
    def zeros(cls, material: Material, grid_shape: tuple = ()) -> "MemoryState":
        ncomp = n_components(material.dim)
        return cls(
            vol=[np.zeros(grid_shape) for _ in material.viscous_units],
            dev=[np.zeros(grid_shape + (ncomp,)) for _ in material.viscous_units],
        )

    def copy(self) -> "MemoryState":
        return MemoryState([v.copy() for v in self.vol], [d.copy() for d in self.dev])

    def full_strain(self, j: int, dim: int) -> np.ndarray:
        """Recombine phi_j = phi_j^V + phi_j^D as a packed tensor."""
        out = self.dev[j].copy()
        out[..., :dim] += self.vol[j][..., None]
        return out


def stress_internal(material: Material, strain: np.ndarray,
                    mem: MemoryState | None = None) -> np.ndarray:
    """Total stress from strain and memory variables (packed).

    sigma = sum_j { lam_j tr(e) I + 2 mu_j e
                    - (d lam_j + 2 mu_j) phi_j^V - 2 mu_j phi_j^D }.
    """
    strain = np.asarray(strain, dtype=float)
    d = material.dim
    if strain.shape[-1] != n_components(d):
        raise ValueError("strain components do not match material dimension")
    tr = trace(strain, d)[..., None]
    eye = identity_packed(d, like=strain)
    sigma = np.zeros_like(strain)
    for j, u in enumerate(material.units):
        lam = np.asarray(u.moduli.lam)[..., None]
        mu = np.asarray(u.moduli.mu)[..., None]
        sigma += lam * tr * eye + 2.0 * mu * strain
        if mem is not None and j < material.n_viscous:
            if mem.vol[j].shape != strain.shape[:-1]:
                raise ValueError("memory state grid does not match strain grid")
            kv = np.asarray(u.moduli.volumetric_eigenvalue)[..., None]
            sigma[..., :d] -= (kv * mem.vol[j][..., None]) * eye[..., :d]
            sigma -= 2.0 * mu * mem.dev[j]
    return sigma


def _etd_weights(rate, dt: float):
    """Decay factor and endpoint weights of the exact linear-drive update.

    For dy/dt = r*(g(t) - y) with g linear on the step,
    y(dt) = a*y0 + w0*g(0) + w1*g(dt), where a = exp(-r dt),
    phi1 = (1 - a)/(r dt), w0 = phi1 - a, w1 = 1 - phi1.
    """
    x = np.asarray(rate, dtype=float) * dt
    a = np.exp(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi1 = np.where(x > 1e-8, -np.expm1(-x) / np.where(x == 0.0, 1.0, x),
                        1.0 - x / 2.0 + x * x / 6.0)
    return a, phi1 - a, 1.0 - phi1


def memory_update(unit: MaxwellUnit, vol, dev, strain_old, strain_new,
                  dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Advance one unit's memory strains over a step of length dt.

    Integrating-factor update, exact when the driving strain varies
    linearly between the given endpoints; composing steps from zero
    memory reproduces the closed-form convolution solution for the
    piecewise-linear strain history.  Returns the new (vol, dev) pair;
    the deviatoric part stays trace-free because both its endpoints are.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not unit.is_viscous:
        raise ValueError("memory update applies to viscous units only")
    d = unit.moduli.dim
    rate_v, rate_d = unit.relaxation_rates()

    tr_old = trace(np.asarray(strain_old, dtype=float), d) / d
    tr_new = trace(np.asarray(strain_new, dtype=float), d) / d
    a, w0, w1 = _etd_weights(rate_v, dt)
    vol_new = a * vol + w0 * tr_old + w1 * tr_new

    _, dev_old = vol_dev_split(np.asarray(strain_old, dtype=float), d)
    _, dev_new = vol_dev_split(np.asarray(strain_new, dtype=float), d)
    a, w0, w1 = _etd_weights(rate_d, dt)
    dev_out = (np.asarray(a)[..., None] * dev
               + np.asarray(w0)[..., None] * dev_old
               + np.asarray(w1)[..., None] * dev_new)
    return vol_new, dev_out


def update_memory_state(material: Material, mem: MemoryState, strain_old,
                        strain_new, dt: float) -> MemoryState:
    """memory_update applied across all viscous units of a material."""
    if material.frozen_dashpots:
        return mem
    out = MemoryState()
    for j, u in enumerate(material.viscous_units):
        vol, dev = memory_update(u, mem.vol[j], mem.dev[j], strain_old, strain_new, dt)
        out.vol.append(vol)
        out.dev.append(dev)
    return out


def stress_convolution(kernel: RelaxationKernel, times: np.ndarray,
                       strains: np.ndarray, t: float, dim: int) -> np.ndarray:
    """Stress at time t from a sampled strain history (strain(0) = 0).

    Evaluates the integrated-by-parts form
    G(0) e(t) + integral_0^t dG/dt(t - s) e(s) ds
    per subspace with trapezoidal quadrature on the uniform samples.
    """
    times = np.asarray(times, dtype=float)
    strains = np.asarray(strains, dtype=float)
    if times.ndim != 1 or len(times) != strains.shape[0]:
        raise ValueError("times and strains disagree")
    if len(times) >= 2:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("history must be uniformly sampled")
    if t > times[-1] + 1e-12 * max(1.0, abs(times[-1])):
        raise ValueError("t beyond recorded history")
    k = int(np.argmin(np.abs(times - t)))
    if not np.isclose(times[k], t, rtol=1e-9, atol=1e-15):
        raise ValueError("t must coincide with a history sample")

    vols, devs = vol_dev_split(strains, dim)
    vol_now, dev_now = vols[k], devs[k]
    sigma = (kernel.vol(0.0) * vol_now + kernel.dev(0.0) * dev_now)
    if k > 0:
        lag = t - times[: k + 1]
        wv = kernel.vol_rate(lag)
        wd = kernel.dev_rate(lag)
        sigma = sigma + np.trapezoid(wv[:, None] * vols[: k + 1]
                                     + wd[:, None] * devs[: k + 1],
                                     x=times[: k + 1], axis=0)
    return sigma
