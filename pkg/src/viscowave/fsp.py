"""Finite-speed-of-propagation monitor.

Tracks the energy inside a ball that shrinks at the material's bound
speed and checks that a wavefield started outside the ball never enters
it: the shrinking-cone energy must stay at the noise floor and the
displacement inside must stay far below the exterior amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import Material
from .solver import Grid, RunResult, SimState, propagation_bound, state_energy


class ConePreconditionError(ValueError):
    """Initial data do not vanish on the monitored ball."""


@dataclass(frozen=True)
class Cone:
    """Ball shrinking at speed `speed` from radius `radius` at `start_time`."""

    center: tuple[float, ...]
    radius: float
    speed: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.radius <= 0 or self.speed <= 0:
            raise ValueError("radius and speed must be positive")

    @property
    def collapse_time(self) -> float:
        """Time at which the ball shrinks to a point."""
        return self.start_time + self.radius / self.speed

    def radius_at(self, t: float) -> float:
        return self.radius - self.speed * (t - self.start_time)

    def mask(self, grid: Grid, t: float) -> np.ndarray:
        """Boolean node mask of the ball at time t (node-center test)."""
        r = self.radius_at(t)
        if r <= 0:
            return np.zeros(grid.shape, dtype=bool)
        return grid.distance_from(self.center) <= r

    def contained_in(self, grid: Grid) -> bool:
        lo = [grid.origin[k] for k in range(grid.dim)]
        hi = [grid.origin[k] + (grid.shape[k] - 1) * grid.spacing
              for k in range(grid.dim)]
        return all(lo[k] <= self.center[k] - self.radius
                   and self.center[k] + self.radius <= hi[k]
                   for k in range(grid.dim))


@dataclass(frozen=True)
class EnergyTrace:
    """Sampled cone and total energy with the viscous dissipation rate."""

    times: np.ndarray
    cone_energy: np.ndarray
    total_energy: np.ndarray
    dissipation: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.cone_energy) == len(self.total_energy)
                == len(self.dissipation) == n):
            raise ValueError("trace columns disagree in length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def from_run(cls, result: RunResult) -> "EnergyTrace":
        return cls(result.trace_times, result.energy_cone,
                   result.energy_total, result.dissipation)


def alpha(material: Material, region_mask: np.ndarray | None = None) -> float:
    """Propagation speed bound: max over nodes of sqrt(sum_j ||C_j|| / rho)."""
    bound = np.asarray(propagation_bound(material))
    if region_mask is not None:
        if not np.any(region_mask):
            raise ValueError("region is empty")
        bound = np.broadcast_to(bound, region_mask.shape)[region_mask]
    return float(np.max(bound))


def cone_energy(state: SimState, material: Material, grid: Grid,
                cone: Cone) -> float:
    """Energy of the state inside the shrunk ball; 0 once it is empty."""
    mask = cone.mask(grid, state.t)
    if not np.any(mask):
        return 0.0
    return state_energy(material, grid, state, mask=mask)


@dataclass(frozen=True)
class FspReport:
    """Outcome of one shrinking-cone check."""

    passed: bool
    max_energy_ratio: float
    max_field_ratio: float
    max_interior_field: float
    times_checked: int
    cone: Cone
    tol_rel: float
    tol_abs: float
    tol_field: float

    def lines(self) -> list[str]:
        return [
            f"pass: {str(self.passed).lower()}",
            f"cone_center: {tuple(self.cone.center)}",
            f"cone_radius: {self.cone.radius}",
            f"cone_speed: {self.cone.speed}",
            f"times_checked: {self.times_checked}",
            f"max_cone_energy_ratio: {self.max_energy_ratio:.6e}",
            f"max_interior_field: {self.max_interior_field:.6e}",
            f"max_field_ratio: {self.max_field_ratio:.6e}",
            f"tol_rel: {self.tol_rel:.3e}",
            f"tol_abs: {self.tol_abs:.3e}",
            f"tol_field: {self.tol_field:.3e}",
        ]

    def __str__(self):
        return "\n".join(self.lines())


def run_with_cone(material, grid, boundaries, source, duration, cone: Cone,
                  **kwargs) -> RunResult:
    """`solver.run` with the cone-energy trace column enabled."""
    from .solver import run
    return run(material, grid, boundaries, source, duration,
               cone_mask_fn=lambda t: cone.mask(grid, t), **kwargs)


def _snapshot_cone_energies(result: RunResult, cone: Cone):
    """Cone energy recomputed from stored snapshots (u and v required).

    Only exact when no viscous memory is active (elastic or frozen
    material): the memory strains are not snapshotted.  The stored v is
    the half-step value, an O(dt) staggering slop that does not matter
    for a quiescence check.
    """
    if result.material.n_viscous > 0:
        raise ValueError(
            "snapshot-based cone energy needs a memory-free material; "
            "re-run with this cone recorded in the trace instead")
    if any(v is None for v in result.snapshots_v):
        raise ValueError("snapshot-based cone energy needs store_v=True")
    from .constitutive import MemoryState
    times, energies, totals = [], [], []
    for t, u, v in zip(result.snapshot_times, result.snapshots_u,
                       result.snapshots_v):
        state = SimState(u, v, MemoryState.zeros(result.material), t)
        mask = cone.mask(result.grid, t)
        e = state_energy(result.material, result.grid, state,
                         mask=mask) if np.any(mask) else 0.0
        times.append(t)
        energies.append(e)
        totals.append(state_energy(result.material, result.grid, state))
    return np.asarray(times), np.asarray(energies), np.asarray(totals)


def verify_fsp(result: RunResult, cone: Cone, tol_field: float = 1e-3,
               tol_rel: float = 1e-6, tol_abs: float = 0.0,
               trace_matches_cone: bool = True) -> FspReport:
    """Check the shrinking-ball quiescence statement on a finished run.

    Requires the run's initial data to vanish on the full ball.  For
    every sampled time before the ball collapses the cone energy must
    stay below ``tol_abs + tol_rel * total_energy`` and the largest
    |u| inside the shrunk ball below ``tol_field`` times the largest
    |u| outside it.

    When the run's recorded cone column belongs to a different cone
    (e.g. a slowed negative control), pass ``trace_matches_cone=False``
    and the cone energies are recomputed from the snapshots.
    """
    grid = result.grid
    mask0 = cone.mask(grid, cone.start_time)
    u0_index = int(np.argmin(np.abs(result.snapshot_times - cone.start_time)))
    u0 = result.snapshots_u[u0_index]
    if np.any(np.abs(u0[mask0]) > 0.0):
        raise ConePreconditionError(
            "initial data do not vanish on the monitored ball")

    if trace_matches_cone:
        e_times = result.trace_times
        e_cone_col = result.energy_cone
        e_tot_col = result.energy_total
    else:
        e_times, e_cone_col, e_tot_col = _snapshot_cone_energies(result, cone)

    max_energy_ratio = 0.0
    in_window = (e_times >= cone.start_time) & (e_times < cone.collapse_time)
    for e_cone, e_tot in zip(e_cone_col[in_window], e_tot_col[in_window]):
        bound = tol_abs + tol_rel * e_tot
        ratio = e_cone / bound if bound > 0 else (np.inf if e_cone > 0 else 0.0)
        max_energy_ratio = max(max_energy_ratio, ratio)

    max_field_ratio = 0.0
    max_interior = 0.0
    checked = 0
    for t, u in zip(result.snapshot_times, result.snapshots_u):
        if not (cone.start_time <= t < cone.collapse_time):
            continue
        mask = cone.mask(grid, t)
        if not np.any(mask):
            continue
        mag = np.sqrt(np.sum(u ** 2, axis=-1))
        interior = float(np.max(mag[mask]))
        exterior_nodes = mag[~mask]
        exterior = float(np.max(exterior_nodes)) if exterior_nodes.size else 0.0
        max_interior = max(max_interior, interior)
        if exterior > 0:
            max_field_ratio = max(max_field_ratio, interior / exterior)
        elif interior > 0:
            max_field_ratio = np.inf
        checked += 1

    passed = bool(max_energy_ratio <= 1.0 and max_field_ratio <= tol_field)
    return FspReport(
        passed=passed,
        max_energy_ratio=max_energy_ratio,
        max_field_ratio=max_field_ratio,
        max_interior_field=max_interior,
        times_checked=checked,
        cone=cone, tol_rel=tol_rel, tol_abs=tol_abs, tol_field=tol_field,
    )
