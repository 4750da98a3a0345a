"""Acceptance suite: every primary criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  The expensive artifacts (optimized pulse, monodromy matrix,
spectrum) come from session fixtures shared with the module tests.
"""

import dataclasses
import json
import math

import numpy as np
import pytest

import fiberlaser as fl
from fiberlaser.cavity import default_config, round_trip
from fiberlaser.cli import main
from fiberlaser.fiber import kerr_step
from fiberlaser.grid import field_to_csv, forward_transform
from fiberlaser.optimize import continuation_sweep, optimize, poincare_value
from fiberlaser.spectrum import (ESSENTIAL, assemble_matrix, classify,
                                 eigendecompose, essential_curve,
                                 unit_pair_match)
from fiberlaser.verify import (adjoint_pairing_audit, convergence_study,
                               fornberg_check, gradient_fd_check)

from conftest import random_field

DT_LIST = [1e-2, 5e-3, 2e-3, 1e-3]
DT_REF = 1e-4

# reported discrete eigenvalues of the default configuration
REAL_EIGS = [0.8987, 0.7773]
COMPLEX_EIGS = [0.6040 + 0.6393j, 0.7711 + 0.4587j,
                0.4961 + 0.7397j, 0.5335 + 0.7379j]


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


class TestOrderFourConvergence:
    @pytest.mark.parametrize("target", ["R", "M", "Mstar"])
    def test_slope(self, cfg, seed_pulse, target):
        study = convergence_study(cfg, seed_pulse, target, DT_LIST, DT_REF)
        ok = 3.9 <= study.slope <= 4.1
        report(f"order-4 {target}", ok, f"slope={study.slope:.3f}")


class TestPeriodicPulseDiscovery:
    def test_seed_objective_scale(self, cfg, seed_pulse):
        obj = poincare_value(cfg, seed_pulse)
        ok = 8e-3 / 3 <= obj <= 8e-3 * 3
        report("seed objective", ok, f"obj={obj:.2e} vs 8e-3 within x3")

    def test_optimizer_reaches_tolerance(self, opt_report):
        ok = (opt_report.converged and opt_report.objective <= 1e-20
              and opt_report.iterations <= 60)
        report("pulse discovery", ok,
               f"obj={opt_report.objective:.2e} in {opt_report.iterations} iters")


class TestUnitEigenpair:
    def test_two_unit_eigenvalues(self, spectrum_report):
        lam = spectrum_report.eigenvalues
        dists = np.sort(np.abs(lam - 1.0))[:2]
        ok = bool(np.all(dists <= 1e-8))
        report("unit eigenvalues", ok,
               f"|lambda-1| = {dists[0]:.2e}, {dists[1]:.2e}")

    def test_eigenvectors_match_invariance_modes(self, spectrum_report, opt_pulse):
        match = unit_pair_match(spectrum_report, opt_pulse)
        ok = match["phase"] <= 1e-6 and match["translation"] <= 1e-6
        report("unit eigenvectors", ok,
               f"phase={match['phase']:.2e}, translation={match['translation']:.2e}")


class TestDiscreteSpectrum:
    def test_real_eigenvalues(self, spectrum_report):
        lam = spectrum_report.eigenvalues
        errs = [np.min(np.abs(lam - t)) for t in REAL_EIGS]
        ok = all(e <= 1e-2 for e in errs)
        report("real eigenvalues", ok,
               ", ".join(f"{t}:{e:.1e}" for t, e in zip(REAL_EIGS, errs)))

    def test_complex_eigenvalues(self, spectrum_report):
        lam = spectrum_report.eigenvalues
        errs = [np.min(np.abs(lam - t)) for t in COMPLEX_EIGS]
        ok = all(e <= 2e-2 for e in errs)
        report("complex eigenvalues", ok,
               ", ".join(f"{e:.1e}" for e in errs))

    def test_twelve_discrete(self, spectrum_report):
        n = spectrum_report.discrete_count
        report("discrete count", n == 12, f"count={n}")


class TestEssentialSpectrum:
    def test_adjacent_eigenvalues_lie_on_curve(self, spectrum_report):
        lam = spectrum_report.eigenvalues
        pts = spectrum_report.curve.points()
        worst = 0.0
        for i, tag in enumerate(spectrum_report.classes):
            if tag == ESSENTIAL:
                d = float(np.min(np.abs(pts - lam[i])))
                worst = max(worst, d - spectrum_report.dist_tol_used[i])
        report("essential adjacency", worst <= 0.0,
               f"max distance excess {worst:.2e}")

    def test_edge_magnitude_identity(self, cfg, opt_rt, opt_eval):
        curve = essential_curve(cfg, opt_rt.gain_integral_fa, opt_eval.theta)
        want = cfg.oc.l_oc * (1.0 - cfg.sa.l0) * math.exp(0.5 * opt_rt.gain_integral_fa)
        ok = curve.edge_magnitude == want
        report("essential edge", ok, f"|lambda(0)|={curve.edge_magnitude:.6f}")


class TestFornberg:
    def test_derivative_at_optimal_radius_and_u_shape(self, cfg, opt_rt, opt_pulse):
        u0 = opt_pulse.j_rotate()
        best = fornberg_check(cfg, opt_rt, u0, r=2.0**-10)
        big = fornberg_check(cfg, opt_rt, u0, r=1e-1)
        tiny = fornberg_check(cfg, opt_rt, u0, r=2.0**-30)
        ok = (best.error <= 1e-12 and big.error > best.error
              and tiny.error > best.error)
        report("spectral derivative", ok,
               f"err(2^-10)={best.error:.2e}, err(0.1)={big.error:.2e}, "
               f"err(2^-30)={tiny.error:.2e}")


class TestGradientCheck:
    def test_finite_difference_slope(self, cfg):
        psi0 = fl.gaussian_seed(200.0, 0.05, cfg.grid)
        chk = gradient_fd_check(cfg, psi0, psi0, np.logspace(-5, -1, 9))
        ok = 0.9 <= chk.slope <= 1.1
        report("gradient check", ok, f"slope={chk.slope:.3f}")


class TestPropertySuite:
    def test_adjoint_pairing(self, cfg, opt_rt):
        defect = adjoint_pairing_audit(cfg, opt_rt, trials=20, seed=0)
        report("adjoint pairing", defect <= 1e-10, f"defect={defect:.2e}")

    def test_phase_and_shift_equivariance(self, cfg, seed_pulse):
        phi, m = 0.9, 33
        base = round_trip(cfg, seed_pulse, record=False).psi_out
        scale = np.max(np.abs(base.data))
        rot = round_trip(cfg, seed_pulse.rotate(phi), record=False).psi_out
        err_rot = np.max(np.abs(rot.data - base.rotate(phi).data)) / scale
        shf = round_trip(cfg, seed_pulse.circular_shift(m), record=False).psi_out
        err_shf = np.max(np.abs(shf.data - base.circular_shift(m).data)) / scale
        ok = err_rot <= 1e-11 and err_shf <= 1e-11
        report("equivariance", ok, f"rot={err_rot:.2e}, shift={err_shf:.2e}")

    def test_kerr_power_conservation(self, cfg, seed_pulse):
        out = kerr_step(cfg.fa, seed_pulse, 1e-2)
        p_in = seed_pulse.data[0] ** 2 + seed_pulse.data[1] ** 2
        p_out = out.data[0] ** 2 + out.data[1] ** 2
        err = np.max(np.abs(p_out - p_in)) / np.max(p_in)
        report("kerr conservation", err <= 1e-13, f"pointwise rel={err:.2e}")

    def test_parseval(self, cfg):
        f = random_field(cfg.grid, seed=100)
        F = forward_transform(f)
        err = abs(F.spectral_energy() - f.energy()) / f.energy()
        report("parseval", err <= 1e-12, f"rel={err:.2e}")

    def test_zero_fixed_point(self, cfg):
        out = round_trip(cfg, fl.Field.zeros(cfg.grid), record=False).psi_out
        ok = bool(np.all(out.data == 0.0))
        report("zero fixed point", ok, "exact")

    def test_conjugate_pairing(self, spectrum_report):
        lam = spectrum_report.eigenvalues
        d = np.abs(lam[:, None] - np.conj(lam)[None, :]).min(axis=1)
        report("conjugate pairing", float(d.max()) <= 1e-10,
               f"max defect={d.max():.2e}")


class TestContinuation:
    def _sweep(self, cfg, opt_pulse, key, values):
        configs = []
        for v in values:
            fa = dataclasses.replace(cfg.fa, **{key: float(v)})
            configs.append(dataclasses.replace(cfg, fa=fa))
        return continuation_sweep(configs, opt_pulse)

    def test_gain_sweep(self, cfg, opt_pulse):
        values = np.linspace(6.0, 7.0, 11)
        reps = self._sweep(cfg, opt_pulse, "g0_per_m", values)
        peaks = [r.psi_opt.peak_power() for r in reps]
        ok = (len(reps) == 11 and all(r.converged for r in reps)
              and all(b >= a - 1e-9 for a, b in zip(peaks, peaks[1:]))
              and abs(peaks[0] - 382.0) <= 0.05 * 382.0
              and abs(peaks[-1] - 493.0) <= 0.05 * 493.0)
        report("continuation g0", ok,
               f"peaks {peaks[0]:.1f} -> {peaks[-1]:.1f} W over {len(reps)} steps")

    def test_saturation_energy_sweep(self, cfg, opt_pulse):
        values = np.linspace(200.0, 260.0, 13)
        reps = self._sweep(cfg, opt_pulse, "e_sat_pj", values)
        peaks = [r.psi_opt.peak_power() for r in reps]
        ok = (len(reps) == 13 and all(r.converged for r in reps)
              and all(b >= a - 1e-9 for a, b in zip(peaks, peaks[1:]))
              and abs(peaks[0] - 382.0) <= 0.05 * 382.0
              and abs(peaks[-1] - 461.0) <= 0.05 * 461.0)
        report("continuation e_sat", ok,
               f"peaks {peaks[0]:.1f} -> {peaks[-1]:.1f} W over {len(reps)} steps")


class TestWindowDoubling:
    def test_discrete_eigenvalues_stable(self, spectrum_report):
        big = default_config(window_ps=20.0, n=1024)
        seed = fl.gaussian_seed(400.0, 0.3, big.grid)
        psi0 = fl.evolve_stage(big, seed, 10)
        rep = optimize(big, psi0)
        assert rep.converged, rep.reason
        ev = fl.evaluate_poincare(big, rep.psi_opt)
        rt = round_trip(big, rep.psi_opt, record=True)
        matrix = assemble_matrix(big, rt, ev.theta, tasks=2)
        srep = eigendecompose(matrix, top_k=4)
        curve = essential_curve(big, rt.gain_integral_fa, ev.theta)
        srep = classify(srep, curve)
        coarse = spectrum_report.discrete_eigenvalues()
        fine = srep.discrete_eigenvalues()
        moves = [float(np.min(np.abs(fine - z))) for z in coarse]
        ok = max(moves) < 1e-3
        report("window doubling", ok,
               f"max eigenvalue move {max(moves):.2e} "
               f"({len(coarse)} -> {len(fine)} discrete)")


class TestCliWorkflows:
    def test_cmd_optimize_defaults(self, tmp_path):
        out = tmp_path / "opt"
        rc = main(["optimize", "--out-dir", str(out)])
        summary = json.loads((out / "summary.json").read_text())
        ok = (rc == 0 and summary["objective"] <= 1e-20
              and 0.0 <= summary["theta_rad"] < 2 * math.pi
              and summary["iterations"] <= 60)
        report("cmd optimize", ok,
               f"obj={summary['objective']:.2e}, iters={summary['iterations']}")

    def test_cmd_spectrum_files(self, tmp_path, cfg, opt_pulse):
        pulse_csv = tmp_path / "pulse.csv"
        field_to_csv(opt_pulse, pulse_csv, digits=17)
        out = tmp_path / "spec"
        rc = main(["spectrum", "--out-dir", str(out), "--pulse", str(pulse_csv),
                   "--tasks", "2", "--top-k-eigenvectors", "4"])
        rows = (out / "eigenvalues.csv").read_text().strip().splitlines()[1:]
        near_unit = 0
        for row in rows:
            _, re_s, im_s, *_ = row.split(",")
            if abs(complex(float(re_s), float(im_s)) - 1.0) <= 1e-8:
                near_unit += 1
        ok = rc == 0 and len(rows) == 2 * cfg.grid.n and near_unit == 2
        report("cmd spectrum", ok,
               f"rows={len(rows)}, unit rows={near_unit}")

    def test_cmd_verify_convergence(self, tmp_path):
        out = tmp_path / "ver"
        rc = main(["verify", "--target", "R", "--out-dir", str(out)])
        summary = json.loads((out / "summary.json").read_text())
        ok = rc == 0 and 3.9 <= summary["slope"] <= 4.1
        report("cmd verify R", ok, f"slope={summary['slope']:.3f}")
