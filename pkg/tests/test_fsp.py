"""Shrinking-cone propagation checks."""

import numpy as np
import pytest

from viscowave.constitutive import Material, MaxwellUnit, MemoryState
from viscowave.fsp import (
    Cone,
    ConePreconditionError,
    EnergyTrace,
    alpha,
    cone_energy,
    run_with_cone,
    verify_fsp,
)
from viscowave.solver import BoundaryMask, Grid, SimState, SourceSpec
from viscowave.tensors import IsotropicModuli


def elastic(lam=1.0, mu=1.0, rho=1.0, dim=2):
    return Material((MaxwellUnit(IsotropicModuli(lam, mu, dim)),), rho=rho)


class TestAlpha:
    def test_single_unit_value(self):
        # lam=2, mu=1, rho=1, d=3: ||Z|| = 8, alpha = sqrt 8
        m = elastic(lam=2.0, mu=1.0, rho=1.0, dim=3)
        assert alpha(m) == pytest.approx(np.sqrt(8.0), rel=1e-12)

    def test_density_scaling(self):
        assert alpha(elastic(rho=4.0)) == pytest.approx(0.5 * alpha(elastic(rho=1.0)))

    def test_two_identical_units_sqrt2(self):
        one = elastic()
        two = Material((MaxwellUnit(IsotropicModuli(1.0, 1.0, 2)),
                        MaxwellUnit(IsotropicModuli(1.0, 1.0, 2))))
        assert alpha(two) == pytest.approx(np.sqrt(2.0) * alpha(one), rel=1e-12)

    def test_region_restriction(self):
        rho = np.ones((12, 12))
        rho[6:, :] = 4.0
        m = Material((MaxwellUnit(IsotropicModuli(1.0, 1.0, 2)),), rho=rho)
        mask = np.zeros((12, 12), dtype=bool)
        mask[6:, :] = True
        assert alpha(m, mask) == pytest.approx(0.5 * alpha(elastic()), rel=1e-12)
        with pytest.raises(ValueError):
            alpha(m, np.zeros((12, 12), dtype=bool))


class TestConeGeometry:
    def test_validity_window(self):
        c = Cone(center=(0.5, 0.5), radius=0.2, speed=2.0)
        assert c.collapse_time == pytest.approx(0.1)
        assert c.radius_at(0.05) == pytest.approx(0.1)

    def test_mask_empties(self):
        g = Grid(2, (21, 21), 0.05)
        c = Cone(center=(0.5, 0.5), radius=0.2, speed=2.0)
        assert np.any(c.mask(g, 0.0))
        assert not np.any(c.mask(g, 0.2))

    def test_containment(self):
        g = Grid(2, (21, 21), 0.05)
        assert Cone((0.5, 0.5), 0.2, 1.0).contained_in(g)
        assert not Cone((0.1, 0.5), 0.2, 1.0).contained_in(g)


class TestConeEnergy:
    def test_zero_state(self):
        g = Grid(2, (16, 16), 0.1)
        m = elastic()
        state = SimState(np.zeros(g.shape + (2,)), np.zeros(g.shape + (2,)),
                         MemoryState.zeros(m, g.shape), 0.0)
        c = Cone((0.75, 0.75), 0.3, 1.0)
        assert cone_energy(state, m, g, c) == 0.0

    def test_empty_cone_zero(self):
        g = Grid(2, (16, 16), 0.1)
        m = elastic()
        state = SimState(np.ones(g.shape + (2,)), np.ones(g.shape + (2,)),
                         MemoryState.zeros(m, g.shape), 1.0)
        c = Cone((0.75, 0.75), 0.3, 1.0)  # collapse at t=0.3 < 1.0
        assert cone_energy(state, m, g, c) == 0.0

    def test_uniform_velocity_ball_volume(self):
        # u=0, v=e1: energy = rho/2 * area(ball), within O(h/R) quadrature
        g = Grid(2, (201, 201), 1.0 / 200)
        m = elastic(rho=1.0)
        v = np.zeros(g.shape + (2,))
        v[..., 0] = 1.0
        state = SimState(np.zeros(g.shape + (2,)), v,
                         MemoryState.zeros(m, g.shape), 0.0)
        R = 0.3
        c = Cone((0.5, 0.5), R, 1.0)
        got = cone_energy(state, m, g, c)
        expected = 0.5 * np.pi * R ** 2
        assert abs(got - expected) / expected <= 2 * g.spacing / R

    def test_nonnegative_random_states(self):
        rng = np.random.default_rng(0)
        g = Grid(2, (24, 24), 1.0 / 23)
        m = Material((MaxwellUnit(IsotropicModuli(1.0, 1.0, 2), 0.5),))
        for _ in range(5):
            mem = MemoryState.zeros(m, g.shape)
            mem.vol[0] = rng.standard_normal(g.shape) * 0.1
            state = SimState(rng.standard_normal(g.shape + (2,)),
                             rng.standard_normal(g.shape + (2,)), mem, 0.0)
            assert cone_energy(state, m, g, Cone((0.5, 0.5), 0.4, 1.0)) >= 0.0


class TestEnergyTrace:
    def test_validation(self):
        with pytest.raises(ValueError):
            EnergyTrace(np.array([0.0, 1.0]), np.zeros(2), np.zeros(2), np.zeros(1))
        with pytest.raises(ValueError):
            EnergyTrace(np.array([1.0, 0.5]), np.zeros(2), np.zeros(2), np.zeros(2))


def fsp_reference_run(n=201, duration=0.24, alpha_scale=1.0):
    """Reference geometry: elastic medium, source outside the ball."""
    m = elastic(lam=1.0, mu=1.0, rho=1.0)
    g = Grid(2, (n, n), 1.0 / (n - 1))
    a = alpha(m) * alpha_scale
    cone = Cone(center=(0.45, 0.5), radius=0.25, speed=a)
    src = SourceSpec(face="x_lo", frequency=5.0, amplitude=1e-3,
                     polarization=(0.0, 1.0), center=(0.0, 0.5), width=0.08,
                     ramp_cycles=1.0)
    bcs = BoundaryMask({"x_lo": "dirichlet", "x_hi": "traction",
                        "y_lo": "traction", "y_hi": "traction"})
    res = run_with_cone(m, g, bcs, src, duration, cone,
                        snapshot_every=max(1, (n - 1) // 40), store_v=True,
                        trace_every=4)
    return res, cone


@pytest.fixture(scope="module")
def reference():
    return fsp_reference_run(n=101, duration=0.30)


class TestVerifyFsp:

    def test_positive_control_passes(self, reference):
        res, cone = reference
        report = verify_fsp(res, cone, tol_field=1e-3, tol_rel=1e-6)
        assert report.passed, str(report)

    def test_negative_control_fails(self, reference):
        res, cone = reference
        slow = Cone(cone.center, cone.radius, cone.speed / 4.0)
        report = verify_fsp(res, slow, tol_field=1e-3, tol_rel=1e-6,
                            trace_matches_cone=False)
        assert not report.passed

    def test_zero_run_trivially_passes(self):
        m = elastic()
        g = Grid(2, (24, 24), 1.0 / 23)
        cone = Cone((0.5, 0.5), 0.3, alpha(m))
        res = run_with_cone(m, g, BoundaryMask.all_dirichlet(2), None, 0.05,
                            cone, store_v=True)
        report = verify_fsp(res, cone)
        assert report.passed
        assert report.max_interior_field == 0.0

    def test_precondition_enforced(self, reference):
        res, cone = reference
        bad = Cone((0.2, 0.5), 0.18, cone.speed, start_time=res.snapshot_times[-1])
        # by the final time the wave fills the left half: nonzero data in ball
        with pytest.raises(ConePreconditionError):
            verify_fsp(res, bad, trace_matches_cone=False)

    def test_report_renders(self, reference):
        res, cone = reference
        text = str(verify_fsp(res, cone))
        assert "pass:" in text and "max_cone_energy_ratio:" in text


class TestConeMonotonicity:
    def test_active_region_energy_nonincreasing(self):
        # Ball drawn around the already-insonified region mid-run: the
        # discrete cone energy must not grow while the ball shrinks.
        m = elastic()
        g = Grid(2, (101, 101), 1.0 / 100)
        src = SourceSpec(face="x_lo", frequency=5.0, amplitude=1e-3,
                         polarization=(0.0, 1.0), center=(0.0, 0.5), width=0.08,
                         ramp_cycles=1.0, n_cycles=2.0)
        bcs = BoundaryMask({"x_lo": "dirichlet", "x_hi": "traction",
                            "y_lo": "traction", "y_hi": "traction"})
        t_mid = 0.30
        cone = Cone(center=(0.3, 0.5), radius=0.28, speed=alpha(m),
                    start_time=t_mid)
        res = run_with_cone(m, g, bcs, src, 0.42, cone, trace_every=2)
        sel = (res.trace_times >= t_mid) & (res.trace_times < cone.collapse_time)
        e = res.energy_cone[sel]
        assert e[0] > 0.0
        slack = 1e-9 * float(np.max(res.energy_total))
        assert np.all(np.diff(e) <= slack)
