"""Shear-speed estimation and two-material residual discrimination.

Both experiments consume displacement snapshots of a single simulated
wavefield.  Speed maps come from arrival-time slopes (time of flight)
or from the gradient of the steady-state phase at the drive frequency.
Discrimination evaluates a candidate material's equation of motion on
the recorded field: where the field is active and the unrelaxed
modulus-to-density ratios differ, the residual must stand far above
the self-consistency floor; where the field never arrived, nothing can
be said and the region is flagged as unidentifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import Material, MemoryState, stress_internal, update_memory_state
from .solver import Grid, RunResult, SourceSpec, strain_field, stress_divergence


class SnapshotDataError(ValueError):
    """Snapshot series unusable for the requested estimate."""


@dataclass
class SpeedMap:
    """Per-node speed estimates, defined only where `mask` is true."""

    grid: Grid
    speeds: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.speeds.shape != tuple(self.grid.shape) or \
                self.mask.shape != tuple(self.grid.shape):
            raise ValueError("speed/mask arrays do not match the grid")
        self.speeds = np.where(self.mask, self.speeds, np.nan)

    def masked_values(self) -> np.ndarray:
        return self.speeds[self.mask]

    def region_median(self, region_mask: np.ndarray) -> float:
        sel = self.mask & region_mask
        if not np.any(sel):
            raise ValueError("no estimates inside the region")
        return float(np.median(self.speeds[sel]))


def _signal_stack(result: RunResult, polarization) -> tuple[np.ndarray, np.ndarray]:
    times = result.snapshot_times
    pol = np.asarray(polarization, dtype=float)
    pol = pol / np.linalg.norm(pol)
    sig = np.stack([u @ pol for u in result.snapshots_u], axis=-1)
    return times, sig


def _check_snapshots(times, frequency):
    if len(times) < 10:
        raise SnapshotDataError("need at least 10 snapshots")
    span = times[-1] - times[0]
    if span * frequency < 1.0:
        raise SnapshotDataError("snapshots must span at least one period")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-6):
        raise SnapshotDataError("snapshots must be uniformly spaced")


def _arrival_lags(sig: np.ndarray, ref: np.ndarray,
                  dt_snap: float) -> tuple[np.ndarray, np.ndarray]:
    """Cross-correlation delay of every node signal against `ref`.

    FFT correlation over all nodes at once with parabolic peak
    refinement; only nonnegative delays are considered.  Also returns
    the normalized peak correlation as a per-node quality measure.
    """
    nt = sig.shape[-1]
    nfft = 2 * nt
    spec = np.fft.rfft(sig, n=nfft, axis=-1)
    ref_spec = np.fft.rfft(ref, n=nfft)
    corr = np.fft.irfft(spec * np.conj(ref_spec), n=nfft, axis=-1)[..., :nt]
    idx = np.argmax(corr, axis=-1)
    norm = np.sqrt(np.sum(sig ** 2, axis=-1) * np.sum(ref ** 2)) + 1e-300
    quality = np.max(corr, axis=-1) / norm
    # parabolic subsample refinement where the peak has both neighbours
    i = np.clip(idx, 1, nt - 2)
    c0 = np.take_along_axis(corr, (i - 1)[..., None], axis=-1)[..., 0]
    c1 = np.take_along_axis(corr, i[..., None], axis=-1)[..., 0]
    c2 = np.take_along_axis(corr, (i + 1)[..., None], axis=-1)[..., 0]
    denom = c0 - 2.0 * c1 + c2
    shift = np.where(np.abs(denom) > 0,
                     0.5 * (c0 - c2) / np.where(denom == 0, 1.0, denom), 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    lag = (i + shift) * dt_snap
    return np.where(idx == 0, 0.0, lag), quality


def _ray_slope(field: np.ndarray, grid: Grid, source_center) -> np.ndarray:
    """Directional derivative of a scalar field along rays from a point."""
    from .solver import derivative
    coords = grid.node_coords()
    rel = [c - p for c, p in zip(coords, source_center)]
    dist = np.sqrt(sum(r ** 2 for r in rel))
    dist = np.where(dist == 0.0, np.inf, dist)
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        out += (rel[k] / dist) * derivative(field, k, grid.spacing, order=2)
    return out


def estimate_speed(result: RunResult, source: SourceSpec,
                   method: str = "time_of_flight",
                   amplitude_floor: float = 0.05,
                   frequency: float | None = None,
                   shear_fraction: float = 0.8,
                   smooth_cells: int = 9,
                   quality_floor: float = 0.25,
                   window: tuple[float, float] | None = None) -> SpeedMap:
    """Estimate the local propagation speed from displacement snapshots.

    time_of_flight cross-correlates each node signal against the node
    closest to the source footprint and inverts the arrival-time slope
    along rays from the source; the slope form stays local, so layered
    media are not averaged along the path.  phase_gradient extracts the
    complex amplitude at the drive frequency (over `window`, or the
    trailing whole periods) and uses speed = omega / |grad phase|.

    The confidence mask keeps nodes with sufficient signal only: peak
    amplitude above `amplitude_floor` times the run maximum, and for
    time of flight additionally shear-dominated motion (transverse
    fraction along the ray at least `shear_fraction`), a readable
    arrival slope, a fully recorded pulse (burst sources), a decent
    normalized correlation, and at least one rough wavelength of
    clearance from every grid face.
    """
    grid = result.grid
    freq = float(frequency if frequency is not None else source.frequency)
    times, sig = _signal_stack(result, source.polarization)
    _check_snapshots(times, freq)

    peak = np.max(np.abs(sig), axis=-1)
    mask = peak >= amplitude_floor * float(np.max(peak))
    if not np.any(mask):
        raise SnapshotDataError("signal is flat: nothing above the amplitude floor")

    if method == "time_of_flight":
        return _time_of_flight(result, source, times, sig, mask,
                               shear_fraction, smooth_cells, quality_floor)
    if method == "phase_gradient":
        return _phase_gradient(result, freq, times, sig, mask, window)
    raise ValueError(f"unknown method {method!r}")


def _time_of_flight(result: RunResult, source: SourceSpec, times, sig, mask,
                    shear_fraction, smooth_cells, quality_floor) -> SpeedMap:
    grid = result.grid
    dt_snap = times[1] - times[0]
    ref_index = tuple(int(np.argmin(np.abs(grid.axis_coords(k) - source.center[k])))
                      for k in range(grid.dim))
    ref = sig[ref_index]
    lags, quality = _arrival_lags(sig, ref, dt_snap)

    coords = grid.node_coords()
    rel = [c - p for c, p in zip(coords, source.center)]
    dist = np.sqrt(sum(r ** 2 for r in rel))
    dist_safe = np.where(dist == 0.0, np.inf, dist)

    # shear dominance: fraction of RMS motion transverse to the ray
    stack = np.stack(result.snapshots_u)
    radial = sum(stack[..., k] * (rel[k] / dist_safe)[None] for k in range(grid.dim))
    total_rms = np.sqrt(np.mean(np.sum(stack ** 2, axis=-1), axis=0))
    radial_rms = np.sqrt(np.mean(radial ** 2, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        trans_frac = np.sqrt(np.clip(
            1.0 - (radial_rms / np.where(total_rms > 0, total_rms, np.inf)) ** 2,
            0.0, 1.0))

    if smooth_cells > 1:
        from scipy.ndimage import uniform_filter
        lag_field = uniform_filter(lags, size=smooth_cells, mode="nearest")
    else:
        lag_field = lags
    slope = _ray_slope(lag_field, grid, source.center)

    usable = (mask
              & (dist >= 2.0 * source.width)
              & (trans_frac >= shear_fraction)
              & (slope * grid.spacing >= 0.05 * dt_snap)
              & (quality >= quality_floor))
    if source.n_cycles is not None:
        pulse = source.n_cycles / source.frequency
        usable &= lags + pulse <= times[-1] - times[0] + 1e-12

    if np.any(usable):
        rough = float(np.median(dist[usable] / np.maximum(lags[usable], 1e-12)))
        margin = rough / float(source.frequency)
        for ax in range(grid.dim):
            c_ax = coords[ax]
            lo = grid.origin[ax]
            hi = lo + (grid.shape[ax] - 1) * grid.spacing
            usable &= (c_ax - lo >= margin) & (hi - c_ax >= margin)

    with np.errstate(divide="ignore"):
        speeds = np.where(usable, 1.0 / np.where(slope > 0, slope, np.inf), np.nan)
    return SpeedMap(grid, speeds, usable)


def _phase_gradient(result: RunResult, freq, times, sig, mask, window) -> SpeedMap:
    grid = result.grid
    period = 1.0 / freq
    if window is None:
        n_periods = int(np.floor((times[-1] - times[0]) / period))
        window = (times[-1] - n_periods * period, times[-1])
    sel = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    if not np.any(sel):
        raise SnapshotDataError("empty phase-extraction window")
    ts = times[sel]
    phasor = np.exp(-2j * np.pi * freq * ts)
    amp = np.tensordot(sig[..., sel], phasor, axes=([-1], [0]))

    from .solver import derivative
    mod2 = np.abs(amp) ** 2
    phase_grad_sq = np.zeros(grid.shape)
    for k in range(grid.dim):
        grad_re = derivative(amp.real, k, grid.spacing, 2)
        grad_im = derivative(amp.imag, k, grid.spacing, 2)
        num = amp.real * grad_im - amp.imag * grad_re
        with np.errstate(divide="ignore", invalid="ignore"):
            phase_grad_sq += np.where(mod2 > 0, num / np.where(mod2 == 0, 1, mod2),
                                      0.0) ** 2
    usable = mask & (phase_grad_sq > 0)
    omega = 2.0 * np.pi * freq
    with np.errstate(divide="ignore"):
        speeds = np.where(usable, omega / np.sqrt(np.where(phase_grad_sq > 0,
                                                           phase_grad_sq, np.inf)),
                          np.nan)
    return SpeedMap(grid, speeds, usable)


# -- residual discrimination -------------------------------------------------


def _interior_mask(grid: Grid, ring: int = 4) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[axis] = slice(0, ring)
        mask[tuple(idx)] = False
        idx[axis] = slice(-ring, None)
        mask[tuple(idx)] = False
    return mask


def check_sampling(result: RunResult, band_fraction: float = 0.15,
                   power_fraction: float = 0.1):
    """Reject snapshot series that undersample the recorded motion.

    Candidate-independent gate for second time differences: if more
    than `power_fraction` of the strongest nodes' signal power sits
    above `band_fraction` of the snapshot sampling rate, centred
    second differences are truncation-dominated and the series is
    refused.  A zero field passes (nothing to differentiate).
    """
    times = result.snapshot_times
    mag = np.stack([np.sqrt(np.sum(u ** 2, axis=-1)) for u in result.snapshots_u])
    peak = np.max(mag, axis=0)
    top = float(np.max(peak))
    if top == 0.0:
        return
    probes = mag.reshape(len(times), -1)[:, (peak >= 0.2 * top).ravel()]
    if probes.shape[1] > 512:
        probes = probes[:, :: probes.shape[1] // 512 + 1]
    spec = np.abs(np.fft.rfft(probes - probes.mean(axis=0), axis=0)) ** 2
    freqs = np.fft.rfftfreq(len(times), d=float(times[1] - times[0]))
    fs = 1.0 / float(times[1] - times[0])
    high = freqs >= band_fraction * fs
    total = float(np.sum(spec))
    if total > 0 and float(np.sum(spec[high])) / total > power_fraction:
        raise SnapshotDataError(
            "snapshot spacing too coarse: the recorded motion has "
            "significant power near the snapshot Nyquist band")


def residual_field(result: RunResult, candidate: Material,
                   verify_sampling: bool = True) -> np.ndarray:
    """Time-RMS equation-of-motion residual of a candidate material.

    Rebuilds the candidate's memory strains from the recorded strain
    history (the same exact-for-linear-strain update the solver uses)
    and evaluates |rho'' u_tt - div sigma'| with centered second time
    differences at every interior snapshot.  Nodes in a boundary ring
    (stencil closures, Dirichlet rows) are reported as zero.

    Raises `SnapshotDataError` when the snapshot series undersamples
    the recorded motion (see `check_sampling`), which would leave the
    second differences truncation-dominated regardless of candidate.
    """
    times = result.snapshot_times
    if len(times) < 3:
        raise SnapshotDataError("need at least three snapshots")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-6):
        raise SnapshotDataError("snapshots must be uniformly spaced")
    if verify_sampling:
        check_sampling(result)
    dt_snap = float(steps[0])
    grid = result.grid
    if candidate.dim != grid.dim:
        raise ValueError("candidate material dimension does not match the grid")

    rho = np.asarray(candidate.rho, dtype=float)
    interior = _interior_mask(grid)
    mem = MemoryState.zeros(candidate, tuple(grid.shape))
    strains = [strain_field(result.snapshots_u[0], grid)]

    acc_sq = np.zeros(grid.shape)
    scale_sq = np.zeros(grid.shape)
    count = 0
    e_prev = strains[0]
    for k in range(1, len(times) - 1):
        e_k = strain_field(result.snapshots_u[k], grid)
        mem = update_memory_state(candidate, mem, e_prev, e_k, dt_snap)
        e_prev = e_k
        u_tt = (result.snapshots_u[k + 1] - 2.0 * result.snapshots_u[k]
                + result.snapshots_u[k - 1]) / dt_snap ** 2
        inertia = rho[..., None] * u_tt
        res = inertia - stress_divergence(stress_internal(candidate, e_k, mem),
                                          grid)
        acc_sq += np.sum(res ** 2, axis=-1)
        scale_sq += np.sum(inertia ** 2, axis=-1)
        count += 1
    if count == 0:
        raise SnapshotDataError("no interior snapshot times to evaluate")
    r = np.where(interior, np.sqrt(acc_sq / count), 0.0)
    return r


def shear_ratio_field(a: Material, b: Material, grid: Grid) -> np.ndarray:
    """Pointwise sum_j mu_j/rho - sum_j mu'_j/rho' on the grid."""
    ones = np.ones(grid.shape)
    va = np.asarray(a.shear_modulus_sum() / np.asarray(a.rho, dtype=float))
    vb = np.asarray(b.shear_modulus_sum() / np.asarray(b.rho, dtype=float))
    return va * ones - vb * ones


@dataclass
class DiscriminationReport:
    """Residual-based comparison of a candidate material against a run."""

    residual: np.ndarray
    floor: float
    support_mask: np.ndarray
    mismatch_mask: np.ndarray
    detected_mask: np.ndarray
    unidentifiable_mask: np.ndarray
    contingency: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        c = self.contingency
        out = [
            f"floor: {self.floor:.6e}",
            f"active_nodes: {c['active']}",
            f"active_mismatch_nodes: {c['active_mismatch']}",
            f"active_mismatch_detected: {c['active_mismatch_detected']}",
            f"active_match_nodes: {c['active_match']}",
            f"active_match_false_alarms: {c['active_match_detected']}",
            f"quiescent_mismatch_nodes: {c['quiescent_mismatch']}",
            f"quiescent_mismatch_detected: {c['quiescent_mismatch_detected']}",
            f"unidentifiable_flagged: {bool(np.any(self.unidentifiable_mask))}",
        ]
        if c["active_mismatch"]:
            out.append("mismatch_detection_rate: "
                       f"{c['active_mismatch_detected'] / c['active_mismatch']:.4f}")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def uniqueness_experiment(result: RunResult, candidate: Material,
                          active_fraction: float = 0.05,
                          significance: float = 10.0,
                          floor_quantile: float = 0.99) -> DiscriminationReport:
    """Cross-tabulate field support, modulus mismatch and residual size.

    A common wavefield cannot satisfy two materially different
    equations of motion wherever it is active, so the candidate's
    residual must be significant on active mismatched nodes; on
    matching nodes it stays at the self-consistency floor; and where
    the wavefield never arrived the mismatch is undetectable and the
    report flags those nodes as unidentifiable rather than claiming
    agreement.
    """
    grid = result.grid
    interior = _interior_mask(grid)
    r_cand = residual_field(result, candidate)
    r_self = residual_field(result, result.material)

    mag = np.stack([np.sqrt(np.sum(u ** 2, axis=-1)) for u in result.snapshots_u])
    peak = np.max(mag, axis=0)
    support = (peak >= active_fraction * float(np.max(peak))) & interior

    active_floor_samples = r_self[support]
    floor = float(np.quantile(active_floor_samples, floor_quantile)) \
        if active_floor_samples.size else 0.0
    floor = max(floor, 1e-300)
    detected = (r_cand >= significance * floor) & interior

    ratio_gap = np.abs(shear_ratio_field(result.material, candidate, grid))
    mismatch = ratio_gap > 1e-12 * max(1.0, float(np.max(ratio_gap)))
    mismatch &= interior

    quiescent = interior & ~support
    contingency = {
        "active": int(np.sum(support)),
        "active_mismatch": int(np.sum(support & mismatch)),
        "active_mismatch_detected": int(np.sum(support & mismatch & detected)),
        "active_match": int(np.sum(support & ~mismatch)),
        "active_match_detected": int(np.sum(support & ~mismatch & detected)),
        "quiescent_mismatch": int(np.sum(quiescent & mismatch)),
        "quiescent_mismatch_detected": int(np.sum(quiescent & mismatch & detected)),
    }
    return DiscriminationReport(
        residual=r_cand,
        floor=floor,
        support_mask=support,
        mismatch_mask=mismatch,
        detected_mask=detected,
        unidentifiable_mask=quiescent & mismatch,
        contingency=contingency,
    )
