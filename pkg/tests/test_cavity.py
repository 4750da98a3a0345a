"""Round-trip composition and monodromy operator tests."""

import numpy as np
import pytest

import fiberlaser as fl
from fiberlaser.cavity import (default_config, modified_monodromy_apply,
                               monodromy_adjoint_apply, monodromy_apply,
                               round_trip)
from fiberlaser.fiber import StepPolicy, TrajectoryMismatchError
from fiberlaser.grid import Field, inner

from conftest import random_field


def degenerate_unitary_config():
    """gamma = 0, g0 = 0, l0 -> 0, l_OC = 1: the loop is a unitary linear map."""
    cfg = default_config()
    import dataclasses

    from fiberlaser.components import OutputCouplerParams, SaturableAbsorberParams
    from fiberlaser.fiber import FiberParams
    return dataclasses.replace(
        cfg,
        sa=SaturableAbsorberParams(l0=1e-15, p_sat_w=50.0),
        smf1=FiberParams(0.01, 0.0, 0.32),
        fa=FiberParams(0.025, 0.0, 0.22),
        smf2=FiberParams(0.01, 0.0, 0.11),
        oc=OutputCouplerParams(l_oc=1.0),
    )


class TestConfig:
    def test_lumped_dispersion_completes_round_trip_value(self, cfg):
        fiber_sum = 0.01 * 0.32 + 0.025 * 0.22 + 0.01 * 0.11
        assert cfg.beta_dcf_ps2 == pytest.approx(-1e-3 - fiber_sum, rel=1e-12)
        assert cfg.beta_dcf_ps2 == pytest.approx(-0.0108, rel=1e-12)

    def test_policy_override(self, cfg):
        c = cfg.with_policy(StepPolicy(5e-3, richardson=False))
        assert c.policy.h_m == 5e-3
        assert c.beta_rt_ps2 == cfg.beta_rt_ps2


class TestRoundTrip:
    def test_zero_fixed_point_exact(self, cfg):
        out = round_trip(cfg, Field.zeros(cfg.grid), record=False)
        assert np.all(out.psi_out.data == 0.0)

    def test_stage_outputs_chain(self, cfg, seed_pulse):
        rt = round_trip(cfg, seed_pulse, record=True, keep_stages=True)
        np.testing.assert_array_equal(rt.traj_smf1.psi_in.data,
                                      rt.stage_outputs["sa"].data)
        np.testing.assert_array_equal(rt.traj_fa.psi_in.data,
                                      rt.stage_outputs["smf1"].data)
        np.testing.assert_array_equal(rt.psi_out.data,
                                      rt.stage_outputs["oc"].data)

    def test_phase_equivariance(self, cfg, seed_pulse):
        phi = 0.77
        a = round_trip(cfg, seed_pulse.rotate(phi), record=False).psi_out
        b = round_trip(cfg, seed_pulse, record=False).psi_out.rotate(phi)
        assert np.max(np.abs(a.data - b.data)) < 1e-11 * np.max(np.abs(b.data))

    def test_shift_equivariance(self, cfg, seed_pulse):
        m = 29
        a = round_trip(cfg, seed_pulse.circular_shift(m), record=False).psi_out
        b = round_trip(cfg, seed_pulse, record=False).psi_out.circular_shift(m)
        assert np.max(np.abs(a.data - b.data)) < 1e-11 * np.max(np.abs(b.data))

    def test_wrong_grid_rejected(self, cfg):
        bad = Field.zeros(fl.FastTimeGrid(20.0, 1024))
        with pytest.raises(TrajectoryMismatchError):
            round_trip(cfg, bad)


class TestMonodromy:
    def test_linearity(self, cfg, seed_rt):
        u = random_field(cfg.grid, seed=80)
        v = random_field(cfg.grid, seed=81)
        a, b = 0.3, -2.1
        lhs = monodromy_apply(cfg, seed_rt, a * u + b * v)
        rhs = (a * monodromy_apply(cfg, seed_rt, u)
               + b * monodromy_apply(cfg, seed_rt, v))
        assert np.max(np.abs(lhs.data - rhs.data)) < 1e-12 * np.max(np.abs(rhs.data))

    def test_real_fields_stay_real(self, cfg, seed_rt):
        u = random_field(cfg.grid, seed=82)
        out = monodromy_apply(cfg, seed_rt, u)
        assert not out.is_complexified

    def test_needs_recorded_round_trip(self, cfg, seed_pulse):
        rt = round_trip(cfg, seed_pulse, record=False)
        with pytest.raises(TrajectoryMismatchError):
            monodromy_apply(cfg, rt, seed_pulse)

    def test_config_mismatch_rejected(self, cfg, seed_rt):
        other = cfg.with_policy(StepPolicy(5e-3, richardson=True))
        with pytest.raises(TrajectoryMismatchError):
            monodromy_apply(other, seed_rt, seed_rt.psi_in)

    def test_adjoint_pairing(self, cfg, seed_rt):
        u = random_field(cfg.grid, seed=83)
        v = random_field(cfg.grid, seed=84)
        lhs = inner(v, monodromy_apply(cfg, seed_rt, u))
        rhs = inner(monodromy_adjoint_apply(cfg, seed_rt, v), u)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_modified_at_zero_angle(self, cfg, seed_rt):
        u = random_field(cfg.grid, seed=85)
        a = modified_monodromy_apply(cfg, seed_rt, 0.0, u)
        b = monodromy_apply(cfg, seed_rt, u)
        np.testing.assert_array_equal(a.data, b.data)

    def test_equivariance_direction_maps_through(self, cfg, seed_pulse, seed_rt):
        # M(J psi) = J R(psi) exactly for the discrete Jacobian
        lhs = monodromy_apply(cfg, seed_rt, seed_pulse.j_rotate())
        rhs = seed_rt.psi_out.j_rotate()
        rel = np.linalg.norm(lhs.data - rhs.data) / np.linalg.norm(rhs.data)
        assert rel < 1e-12


class TestDegenerateUnitaryLoop:
    def test_adjoint_inverts_monodromy(self):
        cfg = degenerate_unitary_config()
        psi = random_field(cfg.grid, seed=86, scale=5.0)
        rt = round_trip(cfg, psi, record=True)
        u = random_field(cfg.grid, seed=87)
        back = monodromy_adjoint_apply(cfg, rt, monodromy_apply(cfg, rt, u))
        assert np.max(np.abs(back.data - u.data)) < 1e-11 * np.max(np.abs(u.data))
