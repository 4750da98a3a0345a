"""Round-trip operator of the six-component laser loop and its linearization.

Component order is fixed: saturable absorber -> SMF1 -> fiber amplifier ->
SMF2 -> dispersion compensation -> output coupler.  A pulse psi0 is
periodically stationary when one round trip reproduces it up to a constant
phase, roundtrip(psi0) = R(theta) psi0.

The monodromy operator is the Jacobian of the round trip about a base pulse;
its action is computed by chaining the component Jacobians along the recorded
trajectories of one forward pass, so a single :func:`round_trip` call backs
arbitrarily many monodromy / adjoint applications (this is also where the
matrix-assembly batching hooks in).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import components as comp
from . import fiber
from .grid import FastTimeGrid, Field


@dataclass(frozen=True)
class LaserConfig:
    """All physical and numerical parameters of the loop.

    The dispersion compensation element is specified through the round-trip
    dispersion beta_rt_ps2; the lumped element makes up the difference with
    the fiber contributions.
    """

    grid: FastTimeGrid
    sa: comp.SaturableAbsorberParams
    smf1: fiber.FiberParams
    fa: fiber.FiberParams
    smf2: fiber.FiberParams
    beta_rt_ps2: float
    oc: comp.OutputCouplerParams
    policy: fiber.StepPolicy

    @property
    def beta_dcf_ps2(self) -> float:
        fiber_sum = (self.smf1.beta_ps2_per_m * self.smf1.length_m
                     + self.fa.beta_ps2_per_m * self.fa.length_m
                     + self.smf2.beta_ps2_per_m * self.smf2.length_m)
        return self.beta_rt_ps2 - fiber_sum

    @property
    def dcf(self) -> comp.DispersionParams:
        return comp.DispersionParams(self.beta_dcf_ps2)

    def with_policy(self, policy: fiber.StepPolicy) -> "LaserConfig":
        return replace(self, policy=policy)


def default_config(window_ps: float = 10.0, n: int = 512,
                   h_m: float = 1e-2, richardson: bool = True) -> LaserConfig:
    """Stretched-pulse laser defaults used throughout the test corpus."""
    return LaserConfig(
        grid=FastTimeGrid(window_ps, n),
        sa=comp.SaturableAbsorberParams(l0=0.2, p_sat_w=50.0),
        smf1=fiber.FiberParams(beta_ps2_per_m=0.01, gamma_per_w_m=2.0e-3,
                               length_m=0.32),
        fa=fiber.FiberParams(beta_ps2_per_m=0.025, gamma_per_w_m=4.4e-3,
                             length_m=0.22, g0_per_m=6.0, e_sat_pj=200.0,
                             omega_g_radps=50.0),
        smf2=fiber.FiberParams(beta_ps2_per_m=0.01, gamma_per_w_m=2.0e-3,
                               length_m=0.11),
        beta_rt_ps2=-1.0e-3,
        oc=comp.OutputCouplerParams(l_oc=np.sqrt(0.5)),
        policy=fiber.StepPolicy(h_m=h_m, richardson=richardson),
    )


@dataclass
class RoundTripOutput:
    """One forward pass: output pulse, per-component outputs, fiber trajectories."""

    config: LaserConfig
    psi_in: Field
    psi_out: Field
    traj_smf1: fiber.Trajectory
    traj_fa: fiber.Trajectory
    traj_smf2: fiber.Trajectory
    stage_outputs: dict[str, Field]
    recorded: bool

    @property
    def gain_integral_fa(self) -> float:
        """Accumulated int_0^L g dt through the amplifier (dimensionless)."""
        return self.traj_fa.G_total


def round_trip(cfg: LaserConfig, psi0: Field, record: bool = True,
               keep_stages: bool = True) -> RoundTripOutput:
    """Apply the six component maps in order, recording fiber trajectories.

    With ``record=False`` the trajectories cannot back monodromy or adjoint
    applications (cheaper; used by objective-only evaluations).
    ``keep_stages=False`` drops the per-component outputs kept for plots.
    """
    if psi0.grid != cfg.grid:
        raise fiber.TrajectoryMismatchError("input pulse grid does not match the config")
    p1 = comp.sa_apply(cfg.sa, psi0)
    p2, t_smf1 = fiber.propagate_nonlinear(cfg.smf1, p1, cfg.policy, record)
    p3, t_fa = fiber.propagate_nonlinear(cfg.fa, p2, cfg.policy, record)
    p4, t_smf2 = fiber.propagate_nonlinear(cfg.smf2, p3, cfg.policy, record)
    p5 = comp.dcf_apply(cfg.dcf, p4)
    p6 = comp.oc_apply(cfg.oc, p5)
    stages = {}
    if keep_stages:
        stages = {"sa": p1, "smf1": p2, "fa": p3, "smf2": p4, "dcf": p5, "oc": p6}
    return RoundTripOutput(cfg, psi0.copy(), p6, t_smf1, t_fa, t_smf2, stages, record)


def _require_recorded(cfg: LaserConfig, rt: RoundTripOutput, u: np.ndarray) -> None:
    if not rt.recorded:
        raise fiber.TrajectoryMismatchError(
            "round trip was run with record=False; no linearization data")
    if rt.config != cfg:
        raise fiber.TrajectoryMismatchError("round-trip output belongs to a different config")
    if u.shape[-1] != cfg.grid.n or u.shape[0] != 2:
        raise ValueError(f"expected (2, ..., {cfg.grid.n}) initial data, got {u.shape}")


def monodromy_apply_batch(cfg: LaserConfig, rt: RoundTripOutput,
                          u0: np.ndarray) -> np.ndarray:
    """Jacobian of the round trip applied to a batch (2, B, N)."""
    _require_recorded(cfg, rt, u0)
    u = comp.sa_linearized_data(cfg.sa, rt.psi_in.data, u0)
    u = fiber.propagate_linearized_batch(cfg.smf1, rt.traj_smf1, u, cfg.policy)
    u = fiber.propagate_linearized_batch(cfg.fa, rt.traj_fa, u, cfg.policy)
    u = fiber.propagate_linearized_batch(cfg.smf2, rt.traj_smf2, u, cfg.policy)
    u = comp.dcf_apply_data(cfg.dcf, u, cfg.grid)
    return cfg.oc.l_oc * u


def monodromy_adjoint_apply_batch(cfg: LaserConfig, rt: RoundTripOutput,
                                  v0: np.ndarray) -> np.ndarray:
    """Transpose of :func:`monodromy_apply_batch` on a batch (2, B, N)."""
    _require_recorded(cfg, rt, v0)
    v = cfg.oc.l_oc * v0
    v = comp.dcf_apply_data(cfg.dcf, v, cfg.grid, sign=-1.0)
    v = fiber.propagate_adjoint_batch(cfg.smf2, rt.traj_smf2, v, cfg.policy)
    v = fiber.propagate_adjoint_batch(cfg.fa, rt.traj_fa, v, cfg.policy)
    v = fiber.propagate_adjoint_batch(cfg.smf1, rt.traj_smf1, v, cfg.policy)
    return comp.sa_linearized_data(cfg.sa, rt.psi_in.data, v)


def monodromy_apply(cfg: LaserConfig, rt: RoundTripOutput, u0: Field) -> Field:
    """Apply the monodromy operator (round-trip Jacobian at rt.psi_in) to u0."""
    out = monodromy_apply_batch(cfg, rt, u0.data[:, None, :])
    return Field(u0.grid, out[:, 0, :])


def monodromy_adjoint_apply(cfg: LaserConfig, rt: RoundTripOutput, v0: Field) -> Field:
    """Apply the adjoint of the monodromy operator to v0."""
    out = monodromy_adjoint_apply_batch(cfg, rt, v0.data[:, None, :])
    return Field(v0.grid, out[:, 0, :])


def modified_monodromy_apply(cfg: LaserConfig, rt: RoundTripOutput, theta: float,
                             u0: Field) -> Field:
    """R(-theta) composed with the monodromy: the operator whose spectrum
    determines stability of a pulse with round-trip phase theta."""
    return monodromy_apply(cfg, rt, u0).rotate(-theta)
