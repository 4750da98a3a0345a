"""Symmetric split-step Fourier solvers for pulse propagation in fiber.

A fiber segment evolves the envelope by a dispersive/band-limited-gain part
(diagonal in frequency) and a Kerr rotation (diagonal in fast time).  One
step of size h applies

    psi <- A_half(t + h/2, t + h) o Kerr(h) o A_half(t, t + h/2)

where each A half-step multiplies the spectrum by exp(G*a(omega)) R(b(omega) h/2)
with a(omega) = (1 - omega^2/Omega_g^2)/2, b(omega) = beta omega^2 / 2, and G the
gain integral over the half interval, approximated to third order by
(h/2) (g + (h/4) g2) with g2 = dg/dt.  The scheme is locally third-order
accurate; Richardson extrapolation over step sizes h, h/2, h/4 with weights
(1, -12, 32)/21 gives global fourth order.

The linearized solver is the exact Jacobian of this discrete map, obtained by
differentiating each stage about the recorded trajectory, and the adjoint
solver is its exact transpose with respect to the dx-weighted inner product.
Those two exactness properties are what the directional-derivative and
pairing checks in :mod:`fiberlaser.verify` measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import FastTimeGrid, Field, fft_any as _fft, ifft_any as _ifft

RICHARDSON_WEIGHTS = (1.0 / 21.0, -12.0 / 21.0, 32.0 / 21.0)  # for runs at h, h/2, h/4


class FiberPropagationError(RuntimeError):
    """Raised when a split-step run produces a non-finite field."""


class TrajectoryMismatchError(ValueError):
    """Trajectory does not match the requested parameters/policy."""


@dataclass(frozen=True)
class FiberParams:
    """Physical parameters of one fiber segment.

    A passive segment has g0_per_m = 0; an amplifying segment additionally
    needs the saturation energy (pJ) and the gain bandwidth (rad/ps).
    """

    beta_ps2_per_m: float
    gamma_per_w_m: float
    length_m: float
    g0_per_m: float = 0.0
    e_sat_pj: float | None = None
    omega_g_radps: float | None = None

    def __post_init__(self):
        if not self.length_m > 0:
            raise ValueError(f"segment length must be positive, got {self.length_m}")
        if self.g0_per_m < 0:
            raise ValueError("unsaturated gain must be non-negative")
        if self.g0_per_m > 0:
            if not (self.e_sat_pj and self.e_sat_pj > 0):
                raise ValueError("amplifying fiber needs a positive saturation energy")
            if not (self.omega_g_radps and self.omega_g_radps > 0):
                raise ValueError("amplifying fiber needs a positive gain bandwidth")

    @property
    def has_gain(self) -> bool:
        return self.g0_per_m > 0


@dataclass(frozen=True)
class StepPolicy:
    """Base step size (m) and whether to Richardson-extrapolate.

    The step is snapped down so an integer number of steps covers each
    segment exactly: n = ceil(L/h), h_adj = L/n.
    """

    h_m: float = 1e-2
    richardson: bool = True

    def __post_init__(self):
        if not self.h_m > 0:
            raise ValueError("step size must be positive")

    def steps_for(self, length_m: float) -> tuple[int, float]:
        """(step count, adjusted step) for a segment of the given length."""
        n = max(1, math.ceil(length_m / self.h_m - 1e-9))
        return n, length_m / n

    def grid_levels(self, length_m: float) -> list[tuple[int, float]]:
        """Richardson grid levels [(n, h)] coarsest first."""
        n, h = self.steps_for(length_m)
        if not self.richardson:
            return [(n, h)]
        return [(n, h), (2 * n, h / 2), (4 * n, h / 4)]

    @property
    def weights(self) -> tuple[float, ...]:
        return RICHARDSON_WEIGHTS if self.richardson else (1.0,)


# -- low-level helpers --------------------------------------------------------

def _sumsq(data):
    # bilinear pointwise square ||psi||^2 (no conjugation; analytic)
    return data[0] * data[0] + data[1] * data[1]


def _rot(c, s, data):
    # apply [[c, -s], [s, c]] across the leading component axis
    return np.stack([c * data[0] - s * data[1], s * data[0] + c * data[1]])


def _pair(dx, f, g):
    # dx * sum f^T g with f of shape (2, N) and g of shape (2, ..., N)
    return dx * np.einsum("cn,c...n->...", f, g)


class _SegmentTables:
    """Per-(segment, step-size) constants reused across all steps."""

    def __init__(self, params: FiberParams, grid: FastTimeGrid, h: float,
                 real_dtype=np.float64):
        omega = grid.omega.astype(real_dtype)
        b = real_dtype(0.5 * params.beta_ps2_per_m) * omega**2
        self.cb = np.cos(b * (h / 2))
        self.sb = np.sin(b * (h / 2))
        # renormalize so the rotation is unitary to the last bit; otherwise the
        # per-bin magnitude bias accumulates linearly over long runs
        norm = np.hypot(self.cb, self.sb)
        self.cb /= norm
        self.sb /= norm
        self.a = None
        if params.has_gain:
            self.a = real_dtype(0.5) * (1.0 - (omega / params.omega_g_radps) ** 2)
        self.h = h
        self.dx = grid.dx
        self.cspec = grid.dx / grid.n  # Parseval weight for raw-FFT spectra
        self.flip = np.concatenate(([0], np.arange(grid.n - 1, 0, -1)))
        self.gamma = params.gamma_per_w_m
        self.g0 = params.g0_per_m
        self.e_sat = params.e_sat_pj


def _gain_scalars(tab: _SegmentTables, psi, F):
    """(g, g2, kpp) for the field psi with raw spectrum F.

    kpp is the filtered quadratic <psi, K psi> = int a(omega) ||psi_hat||^2 domega;
    the dispersive part of dE/dt vanishes identically (antisymmetric operator),
    so g2 reduces to the filtered term.
    """
    e = tab.dx * np.sum(psi * psi)
    g = tab.g0 / (1.0 + e / tab.e_sat)
    if np.iscomplexobj(psi):
        # bilinear pairing pairs omega with -omega (analytic continuation)
        kpp = tab.cspec * np.sum(tab.a * (F[:, tab.flip] * F).sum(axis=0))
    else:
        kpp = tab.cspec * np.sum(tab.a * (F.real**2 + F.imag**2).sum(axis=0))
    alpha1 = -2.0 * g * g / (tab.g0 * tab.e_sat)
    g2 = alpha1 * g * kpp
    return g, g2, kpp


def _half_step_G(tab: _SegmentTables, g, g2):
    return (tab.h / 2.0) * (g + (tab.h / 4.0) * g2)


def _apply_A(tab: _SegmentTables, F, G):
    """Multiply a raw spectrum by exp(G a(omega)) R(b(omega) h/2)."""
    out = _rot(tab.cb, tab.sb, F)
    if tab.a is not None and G is not None:
        out = np.exp(G * tab.a) * out
    return out


def _apply_A_adjoint(tab: _SegmentTables, F, G):
    out = _rot(tab.cb, -tab.sb, F)
    if tab.a is not None and G is not None:
        out = np.exp(G * tab.a) * out
    return out


def _ifft_like(spec, complexified: bool):
    out = _ifft(spec)
    return out if complexified else out.real


def _grad_G_coeffs(tab: _SegmentTables, g, kpp):
    """Coefficients (c_psi, c_kpsi) of grad G = c_psi psi + c_kpsi K psi."""
    alpha1 = -2.0 * g * g / (tab.g0 * tab.e_sat)
    alpha2 = 2.0 * g * alpha1
    alpha3 = (-2.0 * g / (tab.g0 * tab.e_sat)) * (3.0 * g * kpp) * alpha1
    h = tab.h
    return (h / 2.0) * (alpha1 + (h / 4.0) * alpha3), (h / 2.0) * (h / 4.0) * alpha2


# -- trajectory ---------------------------------------------------------------

@dataclass
class SegmentRun:
    """One uniform-step split-step run through a segment (one Richardson level)."""

    h: float
    n_steps: int
    psi_end: np.ndarray                 # (2, N) state at t = L
    psi_steps: np.ndarray | None        # (n_steps, 2, N) state at each step start
    g_first: np.ndarray | None          # per-step gain scalars, first half
    g2_first: np.ndarray | None
    G_first: np.ndarray | None
    kpp_first: np.ndarray | None
    g_mid: np.ndarray | None            # per-step gain scalars, second half
    g2_mid: np.ndarray | None
    G_mid: np.ndarray | None
    kpp_mid: np.ndarray | None
    G_total: float = 0.0


@dataclass
class Trajectory:
    """Recorded forward pass through one fiber segment.

    Holds one :class:`SegmentRun` per Richardson level (coarsest first) plus
    the combined output and gain integral.  The linearized and adjoint
    propagators replay these runs; they raise if handed a different
    params/policy pair than the one that produced the trajectory.
    """

    params: FiberParams
    policy: StepPolicy
    grid: FastTimeGrid
    psi_in: Field
    psi_out: Field
    runs: list[SegmentRun] = field(default_factory=list)
    recorded: bool = True

    @property
    def G_total(self) -> float:
        """Richardson-combined gain integral over the segment (dimensionless)."""
        w = self.policy.weights
        total = sum(wi * run.G_total for wi, run in zip(w, self.runs))
        return total if np.iscomplexobj(self.psi_in.data) else float(np.real(total))

    def snapshots(self):
        """(t_m, Field) pairs along the coarsest run, for evolution dumps."""
        run = self.runs[0]
        if run.psi_steps is None:
            raise TrajectoryMismatchError("trajectory was not recorded")
        for k in range(run.n_steps):
            yield k * run.h, Field(self.grid, run.psi_steps[k])
        yield run.n_steps * run.h, Field(self.grid, run.psi_end)


# -- public single-step operations (spec-level building blocks) ---------------

def gain(params: FiberParams, psi: Field) -> float:
    """Saturable gain g0 / (1 + E/E_sat) in 1/m."""
    if not params.has_gain:
        return 0.0
    return params.g0_per_m / (1.0 + psi.energy() / params.e_sat_pj)


def gain_rate_g2(params: FiberParams, psi: Field) -> float:
    """d/dt of the saturable gain along the segment flow, in 1/m^2."""
    if not params.has_gain:
        return 0.0
    tab = _SegmentTables(params, psi.grid, 1.0)
    F = _fft(psi.data)
    _, g2, _ = _gain_scalars(tab, psi.data, F)
    return g2 if psi.is_complexified else float(g2)


def kerr_step(params: FiberParams, psi: Field, h: float) -> Field:
    """Exact Kerr solution psi <- R(gamma ||psi||^2 h) psi (pointwise)."""
    phi = params.gamma_per_w_m * h * _sumsq(psi.data)
    return Field(psi.grid, _rot(np.cos(phi), np.sin(phi), psi.data))


def linear_half_step(params: FiberParams, psi: Field, G_half: float, h: float) -> Field:
    """Frequency-domain half step exp(G_half a(omega)) R(b(omega) h/2)."""
    tab = _SegmentTables(params, psi.grid, h)
    F = _fft(psi.data)
    out = _ifft_like(_apply_A(tab, F, G_half if params.has_gain else None),
                     psi.is_complexified)
    return Field(psi.grid, out)


# -- nonlinear propagation -----------------------------------------------------

def _run_segment(params: FiberParams, grid: FastTimeGrid, psi0: np.ndarray,
                 h: float, n_steps: int, record: bool) -> SegmentRun:
    complexified = np.iscomplexobj(psi0)
    scalar_dtype = psi0.dtype
    tab = _SegmentTables(params, grid, h, real_dtype=np.real(psi0.flat[0]).dtype.type)
    gamma = params.gamma_per_w_m
    gain_on = params.has_gain

    psi = np.array(psi0, copy=True)
    if record:
        psi_steps = np.empty((n_steps, 2, grid.n), dtype=psi.dtype)
        sc = {name: np.zeros(n_steps, dtype=scalar_dtype)
              for name in ("g_first", "g2_first", "G_first", "kpp_first",
                           "g_mid", "g2_mid", "G_mid", "kpp_mid")}
    G_total = 0.0

    # the isfinite guard below is the error report; silence the overflow
    # chatter a diverging field produces on the way there
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            if record:
                psi_steps[k] = psi
            F = _fft(psi)
            if gain_on:
                g1, g21, kpp1 = _gain_scalars(tab, psi, F)
                G1 = _half_step_G(tab, g1, g21)
            else:
                G1 = None
            psi_a = _ifft_like(_apply_A(tab, F, G1), complexified)

            if gamma != 0.0:
                phi = gamma * h * _sumsq(psi_a)
                psi_b = _rot(np.cos(phi), np.sin(phi), psi_a)
            else:
                psi_b = psi_a

            Fb = _fft(psi_b)
            if gain_on:
                # the Kerr stage preserves energy, so psi_b stands in for the
                # midpoint field when evaluating g and g2 for the second half
                gb, g2b, kppb = _gain_scalars(tab, psi_b, Fb)
                G2 = _half_step_G(tab, gb, g2b)
                G_total += G1 + G2
            else:
                G2 = None
            psi = _ifft_like(_apply_A(tab, Fb, G2), complexified)

            if not np.all(np.isfinite(psi)):
                raise FiberPropagationError(
                    f"non-finite field after step {k + 1}/{n_steps} (h={h:g} m)")
            if record and gain_on:
                sc["g_first"][k], sc["g2_first"][k] = g1, g21
                sc["G_first"][k], sc["kpp_first"][k] = G1, kpp1
                sc["g_mid"][k], sc["g2_mid"][k] = gb, g2b
                sc["G_mid"][k], sc["kpp_mid"][k] = G2, kppb

    if record:
        if not gain_on:
            sc = {name: None for name in sc}
        return SegmentRun(h, n_steps, psi, psi_steps, sc["g_first"], sc["g2_first"],
                          sc["G_first"], sc["kpp_first"], sc["g_mid"], sc["g2_mid"],
                          sc["G_mid"], sc["kpp_mid"], G_total)
    return SegmentRun(h, n_steps, psi, None, None, None, None, None,
                      None, None, None, None, G_total)


def propagate_nonlinear(params: FiberParams, psi_in: Field, policy: StepPolicy,
                        record: bool = True) -> tuple[Field, Trajectory]:
    """Propagate through one segment; optionally record the trajectory.

    Returns the (Richardson-combined) output field and the trajectory holding
    all per-level runs.  With ``record=False`` only the outputs and gain
    integrals are kept and the trajectory cannot back linearized/adjoint runs.
    """
    levels = policy.grid_levels(params.length_m)
    runs = [_run_segment(params, psi_in.grid, psi_in.data, h, n, record)
            for n, h in levels]
    out = sum(w * run.psi_end for w, run in zip(policy.weights, runs))
    psi_out = Field(psi_in.grid, out)
    traj = Trajectory(params, policy, psi_in.grid, psi_in.copy(), psi_out,
                      runs, recorded=record)
    return psi_out, traj


# -- linearized propagation ----------------------------------------------------

def _replay_step(tab: _SegmentTables, run: SegmentRun, k: int, complexified: bool):
    """Recompute the within-step fields (psi_t, F_t, psi_a, psi_b, F_b) at step k."""
    psi_t = run.psi_steps[k]
    F_t = _fft(psi_t)
    G1 = run.G_first[k] if run.G_first is not None else None
    psi_a = _ifft_like(_apply_A(tab, F_t, G1), complexified)
    if tab.gamma != 0.0:
        phi = tab.gamma * tab.h * _sumsq(psi_a)
        cphi, sphi = np.cos(phi), np.sin(phi)
        psi_b = _rot(cphi, sphi, psi_a)
    else:
        cphi = sphi = None
        psi_b = psi_a
    F_b = _fft(psi_b)
    return psi_t, F_t, psi_a, cphi, sphi, psi_b, F_b


def _lin_A_stage(tab, u, psi, F_psi, G, g, kpp, complexified):
    """Jacobian of one A half-step about base field psi (raw spectrum F_psi)."""
    U = _fft(u)
    if G is not None:
        c_psi, c_kpsi = _grad_G_coeffs(tab, g, kpp)
        kpsi = _ifft_like(tab.a * F_psi, np.iscomplexobj(psi))
        s1 = _pair(tab.dx, psi, u)
        s2 = _pair(tab.dx, kpsi, u)
        dG = c_psi * s1 + c_kpsi * s2
        U = U + (tab.a * F_psi)[:, None, :] * np.asarray(dG)[None, :, None]
        out = np.exp(G * tab.a) * _rot(tab.cb, tab.sb, U)
    else:
        out = _rot(tab.cb, tab.sb, U)
    return _ifft_like(out, complexified)


def _adj_A_stage(tab, v, psi, F_psi, G, g, kpp, complexified):
    """Transpose of :func:`_lin_A_stage` (same base data)."""
    V = _fft(v)
    w = _ifft_like(_apply_A_adjoint(tab, V, G), complexified)
    if G is None:
        return w
    c_psi, c_kpsi = _grad_G_coeffs(tab, g, kpp)
    kpsi = _ifft_like(tab.a * F_psi, np.iscomplexobj(psi))
    s = _pair(tab.dx, kpsi, w)
    grad_G = c_psi * psi + c_kpsi * kpsi
    return w + grad_G[:, None, :] * np.asarray(s)[None, :, None]


def _run_linearized(params: FiberParams, grid: FastTimeGrid, run: SegmentRun,
                    u0: np.ndarray) -> np.ndarray:
    """Propagate a batch (2, B, N) through the Jacobian of one recorded run."""
    tab = _SegmentTables(params, grid, run.h,
                         real_dtype=np.real(run.psi_end.flat[0]).dtype.type)
    complexified = np.iscomplexobj(u0) or np.iscomplexobj(run.psi_end)
    gain_on = params.has_gain
    u = np.array(u0, copy=True)
    twog_h = 2.0 * tab.gamma * tab.h

    for k in range(run.n_steps):
        psi_t, F_t, psi_a, cphi, sphi, psi_b, F_b = _replay_step(tab, run, k, complexified)
        if gain_on:
            u = _lin_A_stage(tab, u, psi_t, F_t, run.G_first[k], run.g_first[k],
                             run.kpp_first[k], complexified)
        else:
            u = _lin_A_stage(tab, u, psi_t, F_t, None, None, None, complexified)
        if tab.gamma != 0.0:
            # d/d(eps) of R(gamma ||psi_a + eps u||^2 h)(psi_a + eps u)
            q = twog_h * np.einsum("cn,cbn->bn", psi_a, u)
            jpsi = np.stack([-psi_a[1], psi_a[0]])
            u = _rot(cphi, sphi, u + jpsi[:, None, :] * q[None, :, :])
        if gain_on:
            u = _lin_A_stage(tab, u, psi_b, F_b, run.G_mid[k], run.g_mid[k],
                             run.kpp_mid[k], complexified)
        else:
            u = _lin_A_stage(tab, u, psi_b, F_b, None, None, None, complexified)
    return u


def _run_adjoint(params: FiberParams, grid: FastTimeGrid, run: SegmentRun,
                 v0: np.ndarray) -> np.ndarray:
    """Propagate a batch (2, B, N) through the transpose of one recorded run."""
    tab = _SegmentTables(params, grid, run.h,
                         real_dtype=np.real(run.psi_end.flat[0]).dtype.type)
    complexified = np.iscomplexobj(v0) or np.iscomplexobj(run.psi_end)
    gain_on = params.has_gain
    v = np.array(v0, copy=True)
    twog_h = 2.0 * tab.gamma * tab.h

    for k in reversed(range(run.n_steps)):
        psi_t, F_t, psi_a, cphi, sphi, psi_b, F_b = _replay_step(tab, run, k, complexified)
        if gain_on:
            v = _adj_A_stage(tab, v, psi_b, F_b, run.G_mid[k], run.g_mid[k],
                             run.kpp_mid[k], complexified)
        else:
            v = _adj_A_stage(tab, v, psi_b, F_b, None, None, None, complexified)
        if tab.gamma != 0.0:
            w = _rot(cphi, -sphi, v)
            # (psi psi^T J)^T contribution: psi_a^T (J w) pointwise
            t = psi_a[0][None, :] * (-w[1]) + psi_a[1][None, :] * w[0]
            v = w - psi_a[:, None, :] * (twog_h * t)[None, :, :]
        if gain_on:
            v = _adj_A_stage(tab, v, psi_t, F_t, run.G_first[k], run.g_first[k],
                             run.kpp_first[k], complexified)
        else:
            v = _adj_A_stage(tab, v, psi_t, F_t, None, None, None, complexified)
    return v


def _check_trajectory(params: FiberParams, traj: Trajectory, policy: StepPolicy) -> None:
    if not traj.recorded or traj.runs[0].psi_steps is None:
        raise TrajectoryMismatchError("trajectory was not recorded; rerun with record=True")
    if traj.params != params:
        raise TrajectoryMismatchError("trajectory was produced with different fiber parameters")
    if traj.policy != policy:
        raise TrajectoryMismatchError("trajectory was produced with a different step policy")


def propagate_linearized_batch(params: FiberParams, traj: Trajectory,
                               u0: np.ndarray, policy: StepPolicy) -> np.ndarray:
    """Batched linearized propagation of (2, B, N) initial data."""
    _check_trajectory(params, traj, policy)
    out = None
    for w, run in zip(policy.weights, traj.runs):
        term = w * _run_linearized(params, traj.grid, run, u0)
        out = term if out is None else out + term
    return out


def propagate_adjoint_batch(params: FiberParams, traj: Trajectory,
                            v0: np.ndarray, policy: StepPolicy) -> np.ndarray:
    """Batched adjoint propagation of (2, B, N) initial data."""
    _check_trajectory(params, traj, policy)
    out = None
    for w, run in zip(policy.weights, traj.runs):
        term = w * _run_adjoint(params, traj.grid, run, v0)
        out = term if out is None else out + term
    return out


def propagate_linearized(params: FiberParams, traj: Trajectory, u_in: Field,
                         policy: StepPolicy) -> Field:
    """Apply the linearized segment map (Jacobian along the trajectory) to u_in."""
    out = propagate_linearized_batch(params, traj, u_in.data[:, None, :], policy)
    return Field(u_in.grid, out[:, 0, :])


def propagate_adjoint(params: FiberParams, traj: Trajectory, v_in: Field,
                      policy: StepPolicy) -> Field:
    """Apply the adjoint of the linearized segment map to v_in."""
    out = propagate_adjoint_batch(params, traj, v_in.data[:, None, :], policy)
    return Field(v_in.grid, out[:, 0, :])
