"""Saturable absorber, dispersion compensation, and output coupler tests."""

import numpy as np
import pytest

from fiberlaser.components import (DispersionParams, OutputCouplerParams,
                                   SaturableAbsorberParams, dcf_adjoint,
                                   dcf_apply, oc_adjoint, oc_apply, sa_adjoint,
                                   sa_apply, sa_linearized)
from fiberlaser.grid import FastTimeGrid, Field, energy, forward_transform, inner

from conftest import random_field

GRID = FastTimeGrid(10.0, 512)
SA = SaturableAbsorberParams(l0=0.2, p_sat_w=50.0)
DCF = DispersionParams(beta_dcf_ps2=-0.0108)
OC = OutputCouplerParams(l_oc=np.sqrt(0.5))


class TestParamValidation:
    def test_sa_bounds(self):
        for l0 in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                SaturableAbsorberParams(l0=l0, p_sat_w=50.0)
        with pytest.raises(ValueError):
            SaturableAbsorberParams(l0=0.2, p_sat_w=0.0)

    def test_oc_bounds(self):
        for l in (0.0, 1.2, -0.5):
            with pytest.raises(ValueError):
                OutputCouplerParams(l_oc=l)
        OutputCouplerParams(l_oc=1.0)

    def test_dcf_finite(self):
        with pytest.raises(ValueError):
            DispersionParams(beta_dcf_ps2=float("nan"))


class TestSaturableAbsorber:
    def test_zero_fixed_point(self):
        out = sa_apply(SA, Field.zeros(GRID))
        assert np.all(out.data == 0.0)

    def test_half_saturated_loss(self):
        # ||psi||^2 == P_sat everywhere: transmission is exactly 1 - l0/2
        amp = np.sqrt(50.0)
        f = Field(GRID, np.stack([np.full(512, amp), np.zeros(512)]))
        out = sa_apply(SA, f)
        np.testing.assert_allclose(out.data[0], 0.9 * amp, rtol=1e-15)

    def test_matches_per_sample_extended_precision_oracle(self):
        f = random_field(GRID, seed=30, scale=8.0)
        out = sa_apply(SA, f)
        d = f.data.astype(np.longdouble)
        power = d[0] ** 2 + d[1] ** 2
        oracle = (1.0 - np.longdouble(0.2) / (1.0 + power / 50.0)) * d
        err = np.max(np.abs(out.data - oracle.astype(float)))
        assert err < 1e-14 * np.max(np.abs(oracle))

    def test_linearized_at_zero_base(self):
        u = random_field(GRID, seed=31)
        out = sa_linearized(SA, Field.zeros(GRID), u)
        np.testing.assert_allclose(out.data, 0.8 * u.data, rtol=1e-15)

    def test_linearized_matches_finite_difference(self):
        psi = random_field(GRID, seed=32, scale=6.0)
        u = random_field(GRID, seed=33)
        lin = sa_linearized(SA, psi, u)
        errs = []
        eps_list = [1e-3, 1e-4, 1e-5]
        for eps in eps_list:
            fd = (sa_apply(SA, psi + eps * u).data - sa_apply(SA, psi).data) / eps
            errs.append(np.linalg.norm(fd - lin.data))
        slope = np.polyfit(np.log(eps_list), np.log(errs), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.05)

    def test_phase_direction_equivariance(self):
        # d/dphi of SA(R(phi) psi) at 0 equals J SA(psi)
        psi = random_field(GRID, seed=34, scale=6.0)
        lhs = sa_linearized(SA, psi, psi.j_rotate())
        rhs = sa_apply(SA, psi).j_rotate()
        assert np.max(np.abs(lhs.data - rhs.data)) < 1e-12 * np.max(np.abs(rhs.data))

    def test_adjoint_is_same_map(self):
        psi = random_field(GRID, seed=35, scale=5.0)
        v = random_field(GRID, seed=36)
        np.testing.assert_array_equal(sa_adjoint(SA, psi, v).data,
                                      sa_linearized(SA, psi, v).data)

    def test_adjoint_pairing(self):
        psi = random_field(GRID, seed=37, scale=5.0)
        u = random_field(GRID, seed=38)
        v = random_field(GRID, seed=39)
        lhs = inner(v, sa_linearized(SA, psi, u))
        rhs = inner(sa_adjoint(SA, psi, v), u)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestDispersionCompensation:
    def test_zero_dispersion_is_identity(self):
        f = random_field(GRID, seed=40)
        out = dcf_apply(DispersionParams(0.0), f)
        assert np.max(np.abs(out.data - f.data)) < 1e-14 * np.max(np.abs(f.data))

    def test_unitary_per_bin(self):
        f = random_field(GRID, seed=41)
        a = forward_transform(f)
        b = forward_transform(dcf_apply(DCF, f))
        mag_in = np.abs(a.data[0] + 1j * a.data[1])
        mag_out = np.abs(b.data[0] + 1j * b.data[1])
        np.testing.assert_allclose(mag_out, mag_in, atol=1e-12 * mag_in.max())

    def test_adjoint_inverts(self):
        f = random_field(GRID, seed=42)
        back = dcf_adjoint(DCF, dcf_apply(DCF, f))
        assert np.max(np.abs(back.data - f.data)) < 1e-12 * np.max(np.abs(f.data))

    def test_adjoint_pairing(self):
        u = random_field(GRID, seed=43)
        v = random_field(GRID, seed=44)
        assert inner(v, dcf_apply(DCF, u)) == pytest.approx(
            inner(dcf_adjoint(DCF, v), u), rel=1e-12)


class TestOutputCoupler:
    def test_unit_transmission_is_identity(self):
        f = random_field(GRID, seed=45)
        np.testing.assert_array_equal(oc_apply(OutputCouplerParams(1.0), f).data, f.data)

    def test_energy_halves_at_50_percent(self):
        f = random_field(GRID, seed=46)
        assert energy(oc_apply(OC, f)) == pytest.approx(0.5 * energy(f), rel=1e-14)

    def test_adjoint_pairing(self):
        u = random_field(GRID, seed=47)
        v = random_field(GRID, seed=48)
        assert inner(v, oc_apply(OC, u)) == pytest.approx(
            inner(oc_adjoint(OC, v), u), rel=1e-14)


class TestEquivariance:
    """Every component commutes with phase rotation and integer shifts."""

    @pytest.mark.parametrize("apply_fn", [
        lambda f: sa_apply(SA, f),
        lambda f: dcf_apply(DCF, f),
        lambda f: oc_apply(OC, f),
    ], ids=["sa", "dcf", "oc"])
    def test_phase_and_shift(self, apply_fn):
        f = random_field(GRID, seed=49, scale=6.0)
        phi, m = 0.83, 41
        scale = np.max(np.abs(apply_fn(f).data))
        rot = apply_fn(f.rotate(phi)).data - apply_fn(f).rotate(phi).data
        assert np.max(np.abs(rot)) < 1e-12 * scale
        shf = apply_fn(f.circular_shift(m)).data - apply_fn(f).circular_shift(m).data
        assert np.max(np.abs(shf)) < 1e-12 * scale
