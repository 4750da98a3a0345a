"""Two-stage discovery of periodically stationary pulses.

Stage one evolves a Gaussian seed for a number of round trips to land in the
basin of a pulse.  Stage two runs BFGS on the 2N real field coordinates,
minimizing the normalized round-trip mismatch

    objective(psi) = (1/2) ||roundtrip(psi) - R(theta*) psi||^2 / E(psi),

where the optimal phase theta* has the closed form tan(theta*) = H/G with
G + iH = <roundtrip(psi), psi> (complex pairing).  The mismatch is always
evaluated as the norm of the explicit residual, never as F - sqrt(G^2 + H^2);
the latter cancels catastrophically once the objective drops below ~1e-14.

The gradient comes from one adjoint round trip:

    grad = [ M*(v0) - R(-theta*) v0 - 2*objective*psi ] / E(psi),

with v0 the residual and M* the adjoint monodromy at psi (the theta-derivative
drops out because theta* is stationary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import (LaserConfig, RoundTripOutput, monodromy_adjoint_apply,
                     round_trip)
from .fiber import FiberPropagationError
from .grid import FastTimeGrid, Field, gaussian_field, inner

MIN_SEED_ENERGY_PJ = 1e-12


class DegenerateInputError(ValueError):
    """The (near-)zero pulse is a spurious minimum; refuse to start there."""


def gaussian_seed(peak_power_w: float, fwhm_ps: float, grid: FastTimeGrid) -> Field:
    """Seed pulse sqrt(P0) exp(-(x/sigma)^2) with sigma = FWHM / (2 sqrt(log 2)).

    The width convention follows the seeding recipe literally; note that
    2 sigma sqrt(log 2) is the FWHM of the amplitude profile (the FWHM of the
    power profile is a factor sqrt(2) smaller).
    """
    if peak_power_w <= 0 or fwhm_ps <= 0:
        raise ValueError("seed peak power and width must be positive")
    sigma = fwhm_ps / (2.0 * math.sqrt(math.log(2.0)))
    return gaussian_field(grid, peak_power_w, sigma)


def evolve_stage(cfg: LaserConfig, seed: Field, n_roundtrips: int) -> Field:
    """Propagate the seed for n round trips (the evolutionary stage)."""
    if n_roundtrips < 0:
        raise ValueError("round-trip count must be non-negative")
    psi = seed
    for _ in range(n_roundtrips):
        psi = round_trip(cfg, psi, record=False, keep_stages=False).psi_out
    return psi


@dataclass
class PoincareEvaluation:
    """Objective, optimal phase, residual and gradient at one pulse."""

    F_val: float
    G_val: float
    H_val: float
    theta: float
    E_val: float          # (1/2) ||residual||^2, pJ
    energy: float         # E(psi0), pJ
    objective: float      # E_val / energy, dimensionless
    residual: Field       # v0 = roundtrip(psi0) - R(theta) psi0
    gradient: Field | None = None

    @property
    def grad_norm(self) -> float:
        return self.gradient.norm() if self.gradient is not None else math.nan


def _theta_opt(G: float, H: float) -> float:
    return math.atan2(H, G) % (2.0 * math.pi)


def _value_eval(cfg: LaserConfig, psi0: Field, record: bool):
    rt = round_trip(cfg, psi0, record=record, keep_stages=False)
    rpsi = rt.psi_out
    e0 = psi0.energy()
    G = inner(rpsi, psi0)
    H = inner(rpsi, psi0.j_rotate())
    theta = _theta_opt(G, H)
    v0 = rpsi - psi0.rotate(theta)
    e_val = 0.5 * v0.energy()
    F_val = 0.5 * (rpsi.energy() + e0)
    ev = PoincareEvaluation(F_val, G, H, theta, e_val, e0, e_val / e0, v0)
    return ev, rt


def _attach_gradient(cfg: LaserConfig, rt: RoundTripOutput,
                     ev: PoincareEvaluation, psi0: Field) -> None:
    adj = monodromy_adjoint_apply(cfg, rt, ev.residual)
    grad_f = adj - ev.residual.rotate(-ev.theta)
    ev.gradient = (1.0 / ev.energy) * (grad_f - (2.0 * ev.objective) * psi0)


def evaluate_poincare(cfg: LaserConfig, psi0: Field) -> PoincareEvaluation:
    """Objective, optimal phase theta, residual, and adjoint-state gradient."""
    if psi0.energy() < MIN_SEED_ENERGY_PJ:
        raise DegenerateInputError("phase of the zero pulse is undefined")
    ev, rt = _value_eval(cfg, psi0, record=True)
    _attach_gradient(cfg, rt, ev, psi0)
    return ev


def poincare_value(cfg: LaserConfig, psi0: Field) -> float:
    """Objective only (no trajectories, no adjoint); for line-search probes."""
    ev, _ = _value_eval(cfg, psi0, record=False)
    return ev.objective


def unnormalized_value(cfg: LaserConfig, psi0: Field) -> float:
    """The un-normalized mismatch (1/2)||roundtrip(psi) - R(theta*) psi||^2."""
    ev, _ = _value_eval(cfg, psi0, record=False)
    return ev.E_val


@dataclass
class TracePoint:
    iteration: int
    objective: float
    grad_norm: float
    theta: float
    peak_power_w: float
    rms_width_ps: float


@dataclass
class OptimizerReport:
    """Outcome of one BFGS run."""

    converged: bool
    reason: str
    iterations: int
    objective: float
    grad_norm: float
    theta: float
    psi_opt: Field
    trace: list[TracePoint] = field(default_factory=list)


def pulse_metrics(psi: Field) -> dict[str, float]:
    """Reporting metrics: peak power (W), RMS width (ps), energy (pJ)."""
    return {
        "peak_power_w": psi.peak_power(),
        "rms_width_ps": psi.rms_width(),
        "energy_pj": psi.energy(),
    }


class _LineSearchFailure(Exception):
    pass


def _wolfe_search(eval_fn, x, p, f0, g0, c1=1e-4, c2=0.9, alpha0=1.0,
                  max_evals=25):
    """Strong Wolfe line search (bracket and zoom) along p from x.

    eval_fn(x) -> (f, g, payload) with the directional objective phi(a) =
    f(x + a p).  Returns (alpha, f, g, payload).  Every probe evaluates the
    gradient too; the accepted probe's data seeds the next BFGS update.
    """
    slope0 = float(np.dot(g0, p))
    if slope0 >= 0:
        raise _LineSearchFailure("search direction is not a descent direction")

    def phi(alpha):
        f, g, payload = eval_fn(x + alpha * p)
        return f, float(np.dot(g, p)), (g, payload)

    def zoom(lo, f_lo, d_lo, hi, f_hi, budget):
        for _ in range(budget):
            # quadratic model from (lo, f_lo, d_lo) and (hi, f_hi)
            denom = 2.0 * (f_hi - f_lo - d_lo * (hi - lo))
            alpha = lo - d_lo * (hi - lo) ** 2 / denom if denom != 0 else 0.5 * (lo + hi)
            width = abs(hi - lo)
            if not np.isfinite(alpha) or not (min(lo, hi) + 0.1 * width
                                              < alpha < max(lo, hi) - 0.1 * width):
                alpha = 0.5 * (lo + hi)
            f, d, data = phi(alpha)
            if not np.isfinite(f) or f > f0 + c1 * alpha * slope0 or f >= f_lo:
                hi, f_hi = alpha, f
            else:
                if abs(d) <= -c2 * slope0:
                    return alpha, f, data
                if d * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, d_lo = alpha, f, d
        # bracket exhausted: the low point satisfies Armijo, settle for it
        if lo == 0.0:
            raise _LineSearchFailure("no admissible step along the search direction")
        f, d, data = phi(lo)
        return lo, f, data

    alpha_prev, f_prev, d_prev = 0.0, f0, slope0
    alpha = alpha0
    for i in range(max_evals):
        try:
            f, d, data = phi(alpha)
        except FiberPropagationError:
            alpha = 0.5 * (alpha_prev + alpha)
            continue
        if not np.isfinite(f) or f > f0 + c1 * alpha * slope0 or (f >= f_prev and i > 0):
            return zoom(alpha_prev, f_prev, d_prev, alpha, f, max_evals - i)
        if abs(d) <= -c2 * slope0:
            return alpha, f, data
        if d >= 0:
            return zoom(alpha, f, d, alpha_prev, f_prev, max_evals - i)
        alpha_prev, f_prev, d_prev = alpha, f, d
        alpha *= 2.0
    raise _LineSearchFailure("no Wolfe point within the evaluation budget")


def optimize(cfg: LaserConfig, psi_init: Field, obj_tol: float = 1e-20,
             grad_tol: float = 1e-11, max_iters: int = 200) -> OptimizerReport:
    """BFGS over the 2N field coordinates with adjoint-state gradients.

    Identity initial inverse Hessian, rescaled by s.y/y.y after the first
    step, with a strong-Wolfe line search.  Stops when the objective falls to
    obj_tol, the L2 gradient norm falls to grad_tol, the iteration budget runs
    out, or the line search stalls.  Accepted steps never increase the
    objective.
    """
    if psi_init.energy() < MIN_SEED_ENERGY_PJ:
        raise DegenerateInputError(
            f"seed energy below {MIN_SEED_ENERGY_PJ} pJ; the zero pulse is a "
            "spurious minimum of the un-normalized mismatch")
    grid = psi_init.grid
    dx = grid.dx
    dim = 2 * grid.n

    def full_eval(x: np.ndarray):
        psi = Field.from_coords(grid, x)
        ev, rt = _value_eval(cfg, psi, record=True)
        _attach_gradient(cfg, rt, ev, psi)
        # coordinate gradient of the L2 functional carries the dx weight
        return ev.objective, dx * ev.gradient.to_coords(), (ev, psi)

    x = psi_init.to_coords()
    f, g, (ev, psi) = full_eval(x)
    hinv = np.eye(dim)
    first_step = True
    trace = [TracePoint(0, ev.objective, ev.grad_norm, ev.theta,
                        psi.peak_power(), psi.rms_width())]

    iterations = 0
    reason = "max_iters"
    converged = False
    for _ in range(max_iters):
        if ev.objective <= obj_tol:
            converged, reason = True, "objective"
            break
        if ev.grad_norm <= grad_tol:
            converged, reason = True, "gradient"
            break

        p = -hinv @ g
        if float(np.dot(g, p)) >= 0.0:  # stale curvature; restart from identity
            hinv = np.eye(dim)
            first_step = True
            p = -g
        try:
            alpha, f_new, (g_new, (ev_new, psi)) = _wolfe_search(
                full_eval, x, p, f, g)
        except _LineSearchFailure:
            reason = "line_search_failed"
            break

        x_new = x + alpha * p
        s = alpha * p
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            if first_step:
                hinv *= sy / float(np.dot(y, y))
                first_step = False
            rho = 1.0 / sy
            hs = hinv @ y
            # H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            hinv -= rho * np.outer(s, hs)
            hinv -= rho * np.outer(hinv @ y, s)
            hinv += rho * np.outer(s, s)
        x, f, g, ev = x_new, f_new, g_new, ev_new
        iterations += 1
        trace.append(TracePoint(iterations, ev.objective, ev.grad_norm, ev.theta,
                                psi.peak_power(), psi.rms_width()))
    else:
        if ev.objective <= obj_tol:
            converged, reason = True, "objective"
        elif ev.grad_norm <= grad_tol:
            converged, reason = True, "gradient"

    return OptimizerReport(converged, reason, iterations, ev.objective,
                           ev.grad_norm, ev.theta, Field.from_coords(grid, x),
                           trace)


def continuation_sweep(configs: list[LaserConfig], psi_init: Field,
                       obj_tol: float = 1e-20, grad_tol: float = 1e-11,
                       max_iters: int = 200) -> list[OptimizerReport]:
    """Optimize along a parameter path, warm-starting each step.

    Each configuration is optimized starting from the previous optimum (the
    evolutionary stage is skipped).  A non-converged step ends the sweep; the
    reports collected so far, including the failing one, are returned.
    """
    reports: list[OptimizerReport] = []
    psi = psi_init
    for cfg in configs:
        rep = optimize(cfg, psi, obj_tol=obj_tol, grad_tol=grad_tol,
                       max_iters=max_iters)
        reports.append(rep)
        if not rep.converged:
            break
        psi = rep.psi_opt
    return reports
