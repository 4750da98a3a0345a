"""Command-line orchestration of the evolve / optimize / spectrum /
continuation / verification workflows.

Every command reads one configuration file (missing keys take the defaults),
writes its artifacts into --out-dir, and finishes by writing manifest.json
listing every emitted file with a checksum.  Exit codes: 0 success, 2
configuration error, 3 solver failure, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import cavity, spectrum, verify
from .config import (ConfigError, Settings, default_settings, emit_config,
                     parse_settings, settings_with)
from .fiber import FiberPropagationError, StepPolicy
from .grid import Field, field_from_csv, forward_transform, spectrum_to_csv
from .optimize import (continuation_sweep, evaluate_poincare, evolve_stage,
                       gaussian_seed, optimize, pulse_metrics)
from .runio import (TRACE_HEADER, RunWriter, trace_rows, write_evolution_file,
                    write_spectrum_files)

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_NO_CONVERGENCE = 4


def _load_settings(args) -> Settings:
    settings = parse_settings(args.config) if args.config else default_settings()
    if getattr(args, "steps_per_meter", None):
        h = 1.0 / args.steps_per_meter
        settings = settings_with(settings, step_h_m=h)
    return settings


def _writer(args, settings: Settings, command: str) -> RunWriter:
    buf = io.StringIO()
    for key, value in settings.values:
        buf.write(f"{key} = {value}\n")
    writer = RunWriter(Path(args.out_dir), command, buf.getvalue(),
                       seed=getattr(args, "seed", None))
    path = writer.out_dir / "config.txt"
    emit_config(settings, path)
    writer.register(path)
    return writer


def _seed_pulse(args, settings: Settings) -> Field:
    if getattr(args, "pulse", None):
        return field_from_csv(settings.config.grid, args.pulse)
    cfg = settings.config
    seed = gaussian_seed(settings.seed_peak_power_w, settings.seed_fwhm_ps, cfg.grid)
    n = args.roundtrips if args.roundtrips is not None else settings.seed_roundtrips
    return evolve_stage(cfg, seed, n)


def cmd_evolve(args) -> int:
    settings = _load_settings(args)
    cfg = settings.config
    writer = _writer(args, settings, "evolve")
    seed = gaussian_seed(settings.seed_peak_power_w, settings.seed_fwhm_ps, cfg.grid)
    n = args.roundtrips if args.roundtrips is not None else settings.seed_roundtrips
    writer.write_field("pulse_in.csv", seed)
    rows = []
    psi = seed
    for k in range(n):
        psi = cavity.round_trip(cfg, psi, record=False, keep_stages=False).psi_out
        rows.append((k + 1, psi.energy(), psi.peak_power(), psi.rms_width()))
    writer.write_csv("evolve_trace.csv",
                     ["roundtrip", "energy_pj", "peak_power_w", "rms_width_ps"], rows)
    rt = cavity.round_trip(cfg, psi, record=False, keep_stages=True)
    write_evolution_file(writer, psi, rt.stage_outputs)
    writer.write_field("pulse_out.csv", psi)
    spec_path = writer.out_dir / "spectrum_out.csv"
    spectrum_to_csv(forward_transform(psi), spec_path, digits=17)
    writer.register(spec_path)
    ev = evaluate_poincare(cfg, psi)
    writer.write_json("summary.json", {
        "roundtrips": n,
        "objective": ev.objective,
        "theta_rad": ev.theta,
        **pulse_metrics(psi),
    })
    writer.finalize()
    print(f"evolved {n} round trips: objective {ev.objective:.6g}, "
          f"peak {psi.peak_power():.6g} W")
    return 0


def cmd_optimize(args) -> int:
    settings = _load_settings(args)
    cfg = settings.config
    writer = _writer(args, settings, "optimize")
    psi_init = _seed_pulse(args, settings)
    writer.write_field("pulse_seed.csv", psi_init)
    report = optimize(cfg, psi_init)
    writer.write_field("pulse_opt.csv", report.psi_opt)
    writer.write_csv("trace.csv", TRACE_HEADER, trace_rows(report.trace))
    writer.write_json("summary.json", {
        "converged": report.converged,
        "reason": report.reason,
        "iterations": report.iterations,
        "objective": report.objective,
        "grad_norm": report.grad_norm,
        "theta_rad": report.theta,
        **pulse_metrics(report.psi_opt),
    })
    writer.finalize()
    print(f"{'converged' if report.converged else 'stopped'} ({report.reason}) "
          f"in {report.iterations} iterations: objective {report.objective:.6g}, "
          f"theta {report.theta:.6g} rad")
    return 0 if report.converged else EXIT_NO_CONVERGENCE


def cmd_spectrum(args) -> int:
    settings = _load_settings(args)
    cfg = settings.config
    writer = _writer(args, settings, "spectrum")
    if getattr(args, "pulse", None):
        psi = field_from_csv(cfg.grid, args.pulse)
        iterations = 0
    else:
        report = optimize(cfg, _seed_pulse(args, settings))
        if not report.converged:
            print("optimization did not converge; spectrum not computed", file=sys.stderr)
            return EXIT_NO_CONVERGENCE
        psi = report.psi_opt
        iterations = report.iterations
    ev = evaluate_poincare(cfg, psi)
    rt = cavity.round_trip(cfg, psi, record=True)
    matrix = spectrum.assemble_matrix(cfg, rt, ev.theta, tasks=args.tasks)
    rep = spectrum.eigendecompose(matrix, top_k=args.top_k_eigenvectors)
    curve = spectrum.essential_curve(cfg, rt.gain_integral_fa, ev.theta)
    rep = spectrum.classify(rep, curve)
    writer.write_field("pulse_opt.csv", psi)
    write_spectrum_files(writer, rep)
    discrete = rep.discrete_eigenvalues()
    writer.write_json("summary.json", {
        "objective": ev.objective,
        "theta_rad": ev.theta,
        "iterations": iterations,
        "gain_integral_fa": rt.gain_integral_fa,
        "stability_margin": rep.stability_margin,
        "discrete_count": rep.discrete_count,
        "discrete_eigenvalues": [[z.real, z.imag] for z in discrete],
        **pulse_metrics(psi),
    })
    writer.finalize()
    print(f"{rep.discrete_count} discrete eigenvalues, stability margin "
          f"{rep.stability_margin:.6g}")
    return 0


def cmd_continue(args) -> int:
    settings = _load_settings(args)
    writer = _writer(args, settings, "continue")
    start = settings.value_dict()[args.param]
    values = np.linspace(start, args.stop, args.steps + 1)
    configs = [settings_with(settings, **{args.param: float(v)}).config
               for v in values]
    reports = continuation_sweep(configs, _seed_pulse(args, settings))
    rows = []
    for value, rep in zip(values, reports):
        m = pulse_metrics(rep.psi_opt)
        rows.append((args.param, value, int(rep.converged), rep.iterations,
                     rep.objective, rep.theta,
                     m["peak_power_w"], m["rms_width_ps"], m["energy_pj"]))
    all_ok = len(reports) == len(values) and all(r.converged for r in reports)
    writer.write_csv("sweep.csv",
                     ["param", "value", "converged", "iterations", "objective",
                      "theta_rad", "peak_power_w", "rms_width_ps", "energy_pj"],
                     rows)
    writer.write_field("pulse_final.csv", reports[-1].psi_opt)
    writer.write_json("summary.json", {
        "param": args.param,
        "values": [float(v) for v in values[:len(rows)]],
        "converged": all_ok,
        "steps_completed": len(rows),
    })
    writer.finalize()
    print(f"sweep {args.param}: {len(rows)}/{len(values)} steps "
          f"{'converged' if all_ok else 'completed before failure'}")
    return 0 if all_ok else EXIT_NO_CONVERGENCE


def cmd_verify(args) -> int:
    settings = _load_settings(args)
    cfg = settings.config
    writer = _writer(args, settings, f"verify-{args.target}")
    summary: dict = {"target": args.target}

    if args.target in ("R", "M", "Mstar"):
        psi0 = _seed_pulse(args, settings)
        study = verify.convergence_study(cfg, psi0, args.target,
                                         dt_list=[1e-2, 5e-3, 2e-3, 1e-3],
                                         dt_ref=1e-4)
        writer.write_csv("convergence.csv", ["dt_m", "abs_error"],
                         zip(study.dt_values, study.abs_errors))
        summary["slope"] = study.slope
    elif args.target == "fornberg":
        psi0 = _seed_pulse(args, settings)
        rt = cavity.round_trip(cfg, psi0, record=True)
        u0 = psi0.j_rotate()
        radii = [2.0**-k for k in range(2, 31, 2)]
        rows = []
        best = (math.inf, None)
        for r in radii:
            try:
                chk = verify.fornberg_check(cfg, rt, u0, r)
                rows.append((r, chk.error))
                best = min(best, (chk.error, r))
            except FiberPropagationError:
                rows.append((r, math.nan))
        writer.write_csv("fornberg.csv", ["r", "error"], rows)
        summary["min_error"] = best[0]
        summary["best_radius"] = best[1]
    elif args.target == "gradient":
        psi0 = gaussian_seed(200.0, 0.05, cfg.grid)
        chk = verify.gradient_fd_check(cfg, psi0, psi0,
                                       eps_list=np.logspace(-5, -1, 9))
        writer.write_csv("gradient_fd.csv", ["epsilon", "rel_error"],
                         zip(chk.eps_values, chk.rel_errors))
        summary["slope"] = chk.slope
    elif args.target == "pairing":
        psi0 = _seed_pulse(args, settings)
        rt = cavity.round_trip(cfg, psi0, record=True)
        defect = verify.adjoint_pairing_audit(cfg, rt, trials=20, seed=args.seed or 0)
        summary["max_pairing_defect"] = defect
        summary["per_component"] = verify.component_pairing_audit(
            cfg, rt, seed=args.seed or 0)
    else:
        raise ConfigError(f"unknown verify target {args.target!r}")

    writer.write_json("summary.json", summary)
    writer.finalize()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberlaser",
        description="Periodically stationary pulses of a lumped fiber-laser "
                    "model and their monodromy spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pulse=False):
        p.add_argument("--config", help="configuration file (defaults when omitted)")
        p.add_argument("--out-dir", required=True, help="run directory for artifacts")
        p.add_argument("--steps-per-meter", type=float, default=None,
                       help="override the base step as 1/steps m")
        p.add_argument("--roundtrips", type=int, default=None,
                       help="evolution-stage round trips (default from config)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for audits")
        if pulse:
            p.add_argument("--pulse", help="warm-start pulse CSV (skips seeding)")

    common(sub.add_parser("evolve", help="propagate the Gaussian seed"))
    common(sub.add_parser("optimize", help="two-stage periodic-pulse search"),
           pulse=True)
    p_spec = sub.add_parser("spectrum", help="monodromy matrix and spectrum")
    common(p_spec, pulse=True)
    p_spec.add_argument("--top-k-eigenvectors", type=int, default=8)
    p_spec.add_argument("--tasks", type=int, default=os.cpu_count(),
                        help="thread pool size for matrix columns")
    p_cont = sub.add_parser("continue", help="parameter continuation sweep")
    common(p_cont, pulse=True)
    p_cont.add_argument("--param", required=True, help="configuration key to sweep")
    p_cont.add_argument("--stop", type=float, required=True, help="final value")
    p_cont.add_argument("--steps", type=int, required=True, help="number of increments")
    p_ver = sub.add_parser("verify", help="convergence / derivative / adjoint checks")
    common(p_ver, pulse=True)
    p_ver.add_argument("--target", required=True,
                       choices=["R", "M", "Mstar", "fornberg", "gradient", "pairing"])
    return parser


HANDLERS = {
    "evolve": cmd_evolve,
    "optimize": cmd_optimize,
    "spectrum": cmd_spectrum,
    "continue": cmd_continue,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FiberPropagationError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
