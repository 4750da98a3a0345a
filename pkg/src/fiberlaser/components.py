"""Discrete (one-shot) cavity components: saturable absorber, dispersion
compensation, output coupler, with their linearizations and adjoints.

Every map here commutes with global phase rotations and with integer circular
shifts, which is what pins the two unit eigenvalues of the modified round-trip
linearization.  The SA linearization is its own adjoint (a pointwise symmetric
2x2 matrix); the DCF adjoint flips the sign of the phase multiplier; the OC is
a scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, fft_any, ifft_any


@dataclass(frozen=True)
class SaturableAbsorberParams:
    """Fast saturable loss: transmission 1 - l0 / (1 + ||psi||^2 / P_sat)."""

    l0: float
    p_sat_w: float

    def __post_init__(self):
        if not 0.0 < self.l0 < 1.0:
            raise ValueError(f"unsaturated loss must lie in (0, 1), got {self.l0}")
        if not self.p_sat_w > 0:
            raise ValueError(f"saturation power must be positive, got {self.p_sat_w}")


@dataclass(frozen=True)
class DispersionParams:
    """Lumped quadratic phase exp(i omega^2 beta_DCF / 2) applied in frequency."""

    beta_dcf_ps2: float

    def __post_init__(self):
        if not np.isfinite(self.beta_dcf_ps2):
            raise ValueError("lumped dispersion must be finite")


@dataclass(frozen=True)
class OutputCouplerParams:
    """Amplitude transmission l_OC in (0, 1]; power loss is 1 - l_OC^2."""

    l_oc: float

    def __post_init__(self):
        if not 0.0 < self.l_oc <= 1.0:
            raise ValueError(f"coupler transmission must lie in (0, 1], got {self.l_oc}")


# -- saturable absorber --------------------------------------------------------

def _sa_power(data):
    return data[0] * data[0] + data[1] * data[1]


def sa_apply(p: SaturableAbsorberParams, psi: Field) -> Field:
    """Pointwise multiply by 1 - l0 / (1 + ||psi||^2 / P_sat)."""
    factor = 1.0 - p.l0 / (1.0 + _sa_power(psi.data) / p.p_sat_w)
    return Field(psi.grid, factor * psi.data)


def sa_loss(p: SaturableAbsorberParams, psi: Field) -> np.ndarray:
    """The saturated loss profile l(psi) = l0 / (1 + ||psi||^2 / P_sat)."""
    return p.l0 / (1.0 + _sa_power(psi.data) / p.p_sat_w)


def sa_linearized_data(p: SaturableAbsorberParams, psi_data: np.ndarray,
                       u_data: np.ndarray) -> np.ndarray:
    """Jacobian of the SA map at psi applied to u (array form, broadcastable).

    d/d(eps) [(1 - l(psi + eps u)) (psi + eps u)]
        = (1 - l(psi)) u + (2 l^2(psi) / (l0 P_sat)) psi (psi^T u).
    """
    loss = p.l0 / (1.0 + _sa_power(psi_data) / p.p_sat_w)
    coef = 2.0 * loss * loss / (p.l0 * p.p_sat_w)
    pair = np.einsum("cn,c...n->...n", psi_data, u_data)
    rank_one = psi_data[:, None, :] if u_data.ndim == 3 else psi_data
    return (1.0 - loss) * u_data + rank_one * (coef * pair)


def sa_linearized(p: SaturableAbsorberParams, psi_in: Field, u: Field) -> Field:
    """Linearized SA transfer at base pulse psi_in applied to u."""
    return Field(u.grid, sa_linearized_data(p, psi_in.data, u.data))


def sa_adjoint(p: SaturableAbsorberParams, psi_in: Field, v: Field) -> Field:
    """Adjoint of the linearized SA; the pointwise matrix is symmetric."""
    return sa_linearized(p, psi_in, v)


# -- dispersion compensation -----------------------------------------------------

def _dcf_tables(p: DispersionParams, grid, real_dtype):
    ang = real_dtype(0.5 * p.beta_dcf_ps2) * grid.omega.astype(real_dtype) ** 2
    c, s = np.cos(ang), np.sin(ang)
    norm = np.hypot(c, s)
    return c / norm, s / norm


def dcf_apply_data(p: DispersionParams, data: np.ndarray, grid,
                   sign: float = 1.0) -> np.ndarray:
    c, s = _dcf_tables(p, grid, np.real(data.flat[0]).dtype.type)
    s = sign * s
    F = fft_any(data)
    out = ifft_any(np.stack([c * F[0] - s * F[1], s * F[0] + c * F[1]]))
    return out if np.iscomplexobj(data) else out.real


def dcf_apply(p: DispersionParams, psi: Field) -> Field:
    """Rotate each frequency bin by omega^2 beta_DCF / 2 (unitary, linear)."""
    return Field(psi.grid, dcf_apply_data(p, psi.data, psi.grid))


def dcf_adjoint(p: DispersionParams, v: Field) -> Field:
    """Inverse rotation; equals the adjoint because the multiplier is unitary."""
    return Field(v.grid, dcf_apply_data(p, v.data, v.grid, sign=-1.0))


# -- output coupler ---------------------------------------------------------------

def oc_apply(p: OutputCouplerParams, psi: Field) -> Field:
    """Scale the field by the amplitude transmission l_OC."""
    return Field(psi.grid, p.l_oc * psi.data)


def oc_adjoint(p: OutputCouplerParams, v: Field) -> Field:
    return oc_apply(p, v)
