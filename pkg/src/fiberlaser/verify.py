"""Validation instruments: convergence-order studies, spectral (Fornberg)
differentiation of the round trip, finite-difference gradient checks, and
adjoint pairing audits.

The spectral differentiation check is the strongest one: because every
operation in the complexified round trip is analytic in the perturbation
parameter, the directional derivative equals (1/(rM)) sum_m F_m w^{-m} with
F_m the round trip evaluated on a tiny circle of radius r in the complex
perturbation plane, and that estimate must coincide with the linearized
solver to near round-off at a well-chosen r.  A plain complex-step derivative
is not available here; the FFT leaks round-off into the imaginary part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .cavity import (LaserConfig, RoundTripOutput, monodromy_adjoint_apply,
                     monodromy_apply, round_trip)
from . import components as comp
from . import fiber
from .fiber import FiberPropagationError
from .grid import Field, inner
from .optimize import evaluate_poincare, unnormalized_value

#: conversion from the package's natural L2 norm unit, sqrt(pJ), to sqrt(J);
#: absolute propagation errors are reported in sqrt(J) like the field norms
#: they derive from (1 pJ = 1e-12 J).
SQRT_PJ_TO_SQRT_J = 1e-6


def l2_error(f: Field, g: Field) -> float:
    """Absolute L2 error between two fields, in sqrt(J)."""
    diff = f.data - g.data
    val = math.sqrt(f.grid.dx * float(np.sum(np.abs(diff) ** 2)))
    return val * SQRT_PJ_TO_SQRT_J


def relative_l2_error(f: Field, g: Field) -> float:
    """L2 error of f against g normalized by sqrt(energy(g))."""
    ref = math.sqrt(g.grid.dx * float(np.sum(np.abs(g.data) ** 2)))
    return l2_error(f, g) / (ref * SQRT_PJ_TO_SQRT_J)


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > 0)
    if keep.sum() < 3:
        raise ValueError("need at least three valid points for a slope fit")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


# -- convergence studies -------------------------------------------------------

@dataclass
class ConvergenceStudy:
    target: str
    dt_values: np.ndarray
    abs_errors: np.ndarray  # sqrt(J); NaN where the solver failed
    dt_ref: float
    slope: float


def _policy(cfg: LaserConfig, h: float) -> LaserConfig:
    return cfg.with_policy(fiber.StepPolicy(h_m=h, richardson=cfg.policy.richardson))


def _as_float64(f: Field) -> Field:
    return Field(f.grid, f.data.astype(np.float64))


def _theta_between(rpsi: Field, psi: Field) -> float:
    g = inner(rpsi, psi)
    h = inner(rpsi, psi.j_rotate())
    return math.atan2(h, g) % (2.0 * math.pi)


def convergence_study(cfg: LaserConfig, psi0: Field, target: str,
                      dt_list, dt_ref: float,
                      u0: Field | None = None, v0: Field | None = None,
                      extended_reference: bool = True) -> ConvergenceStudy:
    """Error against a dt_ref reference for one of the three propagators.

    target "R": the nonlinear round trip itself.  target "M": the linearized
    round trip about the trajectory recomputed at each dt, applied to u0
    (default J psi0).  target "Mstar": the adjoint, applied to v0 (default
    the round-trip residual of psi0 at the reference step).

    By default the reference run uses 80-bit arithmetic so that it represents
    the dt_ref scheme's mathematical value: in double precision the frozen
    FFT rounding pattern drifts linearly over the reference's ~5e4 transform
    round trips and would contribute comparably to the finest study point's
    own truncation error.
    """
    dt_list = sorted(dt_list, reverse=True)
    if not dt_ref < min(dt_list) / 5.0:
        raise ValueError("reference step must be at least 5x finer than every study step")
    if target not in ("R", "M", "Mstar"):
        raise ValueError(f"unknown target {target!r}")

    need_lin = target in ("M", "Mstar")
    ref_cfg = _policy(cfg, dt_ref)
    ref_dtype = np.longdouble if extended_reference else np.float64
    psi_ref = Field(psi0.grid, psi0.data.astype(ref_dtype))
    rt_ref = round_trip(ref_cfg, psi_ref, record=need_lin, keep_stages=False)

    if target == "M" and u0 is None:
        u0 = psi0.j_rotate()
    if target == "Mstar" and v0 is None:
        out = _as_float64(rt_ref.psi_out)
        v0 = out - psi0.rotate(_theta_between(out, psi0))

    if target == "R":
        ref = rt_ref.psi_out
    elif target == "M":
        ref = monodromy_apply(ref_cfg, rt_ref,
                              Field(psi0.grid, u0.data.astype(ref_dtype)))
    else:
        ref = monodromy_adjoint_apply(ref_cfg, rt_ref,
                                      Field(psi0.grid, v0.data.astype(ref_dtype)))
    ref = _as_float64(ref)
    del rt_ref

    errors = []
    for dt in dt_list:
        c = _policy(cfg, dt)
        try:
            rt = round_trip(c, psi0, record=need_lin, keep_stages=False)
            if target == "R":
                approx = rt.psi_out
            elif target == "M":
                approx = monodromy_apply(c, rt, u0)
            else:
                approx = monodromy_adjoint_apply(c, rt, v0)
            errors.append(l2_error(approx, ref))
        except FiberPropagationError:
            errors.append(math.nan)
    dt_arr = np.array(dt_list)
    err_arr = np.array(errors)
    slope = fit_loglog_slope(dt_arr, err_arr)
    return ConvergenceStudy(target, dt_arr, err_arr, dt_ref, slope)


# -- spectral differentiation of the round trip --------------------------------

@dataclass
class FornbergCheck:
    r: float
    m_samples: int
    estimate: Field           # complexified directional-derivative estimate
    error: float              # against the linearized solver, sqrt(J)


def fornberg_derivative(cfg: LaserConfig, psi0: Field, u0: Field,
                        r: float, m_samples: int = 4) -> Field:
    """Directional derivative of the round trip via a complex-circle average.

    Evaluates the complexified round trip at psi0 + z u0 for M points
    z = r w^m on the circle (w = e^{2 pi i / M}) and returns the first
    Fourier coefficient divided by r.
    """
    if m_samples < 4:
        raise ValueError("need at least four circle samples")
    if r <= 0:
        raise ValueError("radius must be positive")
    w = cmath.exp(2j * math.pi / m_samples)
    acc = np.zeros((2, cfg.grid.n), dtype=np.complex128)
    for m in range(m_samples):
        z = r * w**m
        probe = Field(cfg.grid, psi0.data + z * u0.data)
        try:
            out = round_trip(cfg, probe, record=False, keep_stages=False).psi_out
        except FiberPropagationError as exc:
            raise FiberPropagationError(
                f"complexified round trip diverged at r={r:g} (radius too large)"
            ) from exc
        acc += out.data * w ** (-m)
    return Field(cfg.grid, acc / (r * m_samples))


def fornberg_check(cfg: LaserConfig, rt: RoundTripOutput, u0: Field,
                   r: float, m_samples: int = 4) -> FornbergCheck:
    """Compare the circle-average derivative with the linearized solver."""
    est = fornberg_derivative(cfg, rt.psi_in, u0, r, m_samples)
    lin = monodromy_apply(cfg, rt, u0)
    return FornbergCheck(r, m_samples, est, l2_error(est, lin))


# -- gradient finite-difference check -------------------------------------------

@dataclass
class GradientCheck:
    eps_values: np.ndarray
    rel_errors: np.ndarray
    directional: float
    slope: float


def gradient_fd_check(cfg: LaserConfig, psi0: Field, u0: Field,
                      eps_list) -> GradientCheck:
    """Relative error of finite differences of the mismatch functional against
    the adjoint-state directional derivative, with its log-log slope.

    psi0 must not be a stationary point and u0 must not be orthogonal to the
    gradient, otherwise round-off dominates the quotient.
    """
    ev = evaluate_poincare(cfg, psi0)
    grad_f = ev.energy * ev.gradient + (2.0 * ev.objective) * psi0  # d of E_val
    directional = inner(grad_f, u0)
    if abs(directional) < 1e-14 * grad_f.norm() * u0.norm():
        raise ValueError("direction is numerically orthogonal to the gradient")
    f0 = ev.E_val
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    rel = []
    for e in eps:
        probe = Field(cfg.grid, psi0.data + e * u0.data)
        fd = (unnormalized_value(cfg, probe) - f0) / e
        rel.append(abs(fd - directional) / abs(directional))
    rel = np.array(rel)
    return GradientCheck(eps, rel, directional, fit_loglog_slope(eps, rel))


# -- adjoint pairing audits ------------------------------------------------------

def _random_field(grid, rng) -> Field:
    return Field(grid, rng.standard_normal((2, grid.n)))


def adjoint_pairing_audit(cfg: LaserConfig, rt: RoundTripOutput,
                          trials: int = 20, seed: int = 0) -> float:
    """max over random (u, v) of |<v, M u> - <M* v, u>| / (||u|| ||v||)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = _random_field(cfg.grid, rng)
        v = _random_field(cfg.grid, rng)
        lhs = inner(v, monodromy_apply(cfg, rt, u))
        rhs = inner(monodromy_adjoint_apply(cfg, rt, v), u)
        worst = max(worst, abs(lhs - rhs) / (u.norm() * v.norm()))
    return worst


def component_pairing_audit(cfg: LaserConfig, rt: RoundTripOutput,
                            trials: int = 5, seed: int = 0) -> dict[str, float]:
    """Per-component pairing defects, to localize a failing adjoint."""
    rng = np.random.default_rng(seed)
    grid = cfg.grid
    psi0 = rt.psi_in

    def defect(fwd, adj):
        worst = 0.0
        for _ in range(trials):
            u = _random_field(grid, rng)
            v = _random_field(grid, rng)
            lhs = inner(v, fwd(u))
            rhs = inner(adj(v), u)
            worst = max(worst, abs(lhs - rhs) / (u.norm() * v.norm()))
        return worst

    return {
        "sa": defect(lambda u: comp.sa_linearized(cfg.sa, psi0, u),
                     lambda v: comp.sa_adjoint(cfg.sa, psi0, v)),
        "smf1": defect(lambda u: fiber.propagate_linearized(cfg.smf1, rt.traj_smf1, u, cfg.policy),
                       lambda v: fiber.propagate_adjoint(cfg.smf1, rt.traj_smf1, v, cfg.policy)),
        "fa": defect(lambda u: fiber.propagate_linearized(cfg.fa, rt.traj_fa, u, cfg.policy),
                     lambda v: fiber.propagate_adjoint(cfg.fa, rt.traj_fa, v, cfg.policy)),
        "smf2": defect(lambda u: fiber.propagate_linearized(cfg.smf2, rt.traj_smf2, u, cfg.policy),
                       lambda v: fiber.propagate_adjoint(cfg.smf2, rt.traj_smf2, v, cfg.policy)),
        "dcf": defect(lambda u: comp.dcf_apply(cfg.dcf, u),
                      lambda v: comp.dcf_adjoint(cfg.dcf, v)),
        "oc": defect(lambda u: comp.oc_apply(cfg.oc, u),
                     lambda v: comp.oc_adjoint(cfg.oc, v)),
    }
