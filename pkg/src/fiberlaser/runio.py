"""Run directories, manifests, and the CSV schemas consumed by the figure
scripts.

Every file a command emits goes through one :class:`RunWriter`, which records
paths and SHA-256 checksums and writes the manifest last, so a run directory
never contains files the manifest does not list.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grid import Field, field_to_csv
from .spectrum import EssentialSpectrumCurve, SpectrumReport

FLOAT_DIGITS = 17  # restart fidelity; display summaries round to 6


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"%.{FLOAT_DIGITS}g" % float(x)


@dataclass
class RunWriter:
    """Collects artifacts for one command invocation."""

    out_dir: Path
    command: str
    config_text: str
    seed: int | None = None
    artifacts: dict[str, str] = field(default_factory=dict)
    _start: float = field(default_factory=time.time)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def register(self, path: Path) -> None:
        """Record a file written outside the writer helpers."""
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.artifacts[path.name] = digest

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.register(path)
        return path

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_json(self, name: str, payload: dict) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_field(self, name: str, f: Field) -> Path:
        path = self.out_dir / name
        field_to_csv(f, path, digits=FLOAT_DIGITS)
        self.register(path)
        return path

    def finalize(self) -> Path:
        manifest = {
            "tool": "fiberlaser",
            "version": __version__,
            "command": self.command,
            "platform": platform.platform(),
            "seed": self.seed,
            "wall_clock_s": round(time.time() - self._start, 3),
            "config": self.config_text,
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


# -- schema helpers ------------------------------------------------------------

def trace_rows(trace):
    for pt in trace:
        yield (pt.iteration, pt.objective, pt.grad_norm, pt.theta,
               pt.peak_power_w, pt.rms_width_ps)


TRACE_HEADER = ["iter", "objective", "grad_norm", "theta_rad",
                "peak_power_w", "rms_width_ps"]


def write_spectrum_files(writer: RunWriter, report: SpectrumReport) -> None:
    rows = [(i, lam.real, lam.imag, abs(lam), report.classes[i])
            for i, lam in enumerate(report.eigenvalues)]
    writer.write_csv("eigenvalues.csv", ["index", "re", "im", "abs", "class"], rows)

    curve = report.curve
    crows = [(om, lp.real, lp.imag, lm.real, lm.imag)
             for om, lp, lm in zip(curve.omega, curve.lambda_plus, curve.lambda_minus)]
    writer.write_csv("essential_curve.csv",
                     ["omega_radps", "re_plus", "im_plus", "re_minus", "im_minus"],
                     crows)

    for i, vec in enumerate(report.eigenvectors):
        amp = np.sqrt(np.abs(vec.data[0]) ** 2 + np.abs(vec.data[1]) ** 2)
        rows = [(x, vec.data[0, j].real, vec.data[0, j].imag,
                 vec.data[1, j].real, vec.data[1, j].imag, amp[j])
                for j, x in enumerate(vec.grid.x)]
        writer.write_csv(f"eigenfunction_{i:02d}.csv",
                         ["x_ps", "re1", "im1", "re2", "im2", "amplitude"], rows)


def write_evolution_file(writer: RunWriter, psi_in: Field, stages: dict[str, Field]) -> None:
    """Instantaneous power at each component output (the evolution figure input)."""
    names = ["sa", "smf1", "fa", "smf2", "dcf", "oc"]
    header = ["x_ps", "power_in_w"] + [f"power_{n}_w" for n in names]
    power = {n: stages[n].data[0] ** 2 + stages[n].data[1] ** 2 for n in names}
    pin = psi_in.data[0] ** 2 + psi_in.data[1] ** 2
    rows = [(x, pin[j], *(power[n][j] for n in names))
            for j, x in enumerate(psi_in.grid.x)]
    writer.write_csv("evolution.csv", header, rows)
