"""The four figure kinds: spectrum, evolution, eigenfunction, loglog."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .readers import read_table  # noqa: E402

CLASS_STYLE = {
    "unit-pair": dict(color="tab:green", marker="*", s=140, zorder=5,
                      label="unit pair"),
    "discrete": dict(color="tab:blue", marker="o", s=45, zorder=4,
                     facecolors="none", label="discrete"),
    "essential-adjacent": dict(color="tab:gray", marker=".", s=12, zorder=3,
                               label="essential-adjacent"),
}


def plot_spectrum(eigenvalues_csv, curve_csv, out_path, title=None) -> None:
    """Eigenvalue scatter, analytic essential spirals, and the unit circle."""
    eig = read_table(eigenvalues_csv, ["index", "re", "im", "abs", "class"])
    curve = read_table(curve_csv, ["omega_radps", "re_plus", "im_plus",
                                   "re_minus", "im_minus"])
    fig, ax = plt.subplots(figsize=(6.2, 6.0))
    phi = np.linspace(0, 2 * np.pi, 400)
    ax.plot(np.cos(phi), np.sin(phi), ":", color="k", lw=0.8, label="unit circle")
    order = np.argsort(curve["omega_radps"])
    for re_c, im_c in (("re_plus", "im_plus"), ("re_minus", "im_minus")):
        ax.plot(curve[re_c][order], curve[im_c][order], "-", color="tab:red",
                lw=1.2, label="essential spectrum"
                if re_c == "re_plus" else None)
    for tag, style in CLASS_STYLE.items():
        sel = eig["class"] == tag
        if np.any(sel):
            ax.scatter(eig["re"][sel], eig["im"][sel], **style)
    ax.set_xlabel("Re $\\lambda$")
    ax.set_ylabel("Im $\\lambda$")
    ax.set_aspect("equal")
    ax.legend(loc="lower left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_evolution(evolution_csv, out_path, title=None) -> None:
    """Instantaneous power at each component output across the window."""
    table = read_table(evolution_csv, ["x_ps"])
    power_cols = [c for c in table if c.startswith("power_")]
    if not power_cols:
        from . import SchemaError

        raise SchemaError(f"{evolution_csv}: no power_* columns")
    fig, ax = plt.subplots(figsize=(6.8, 4.2))
    for col in power_cols:
        label = col.removeprefix("power_").removesuffix("_w")
        ax.plot(table["x_ps"], table[col], lw=1.1, label=label)
    ax.set_xlabel("fast time x (ps)")
    ax.set_ylabel("instantaneous power (W)")
    ax.legend(fontsize=8, ncol=2)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_eigenfunction(eigenfunction_csv, out_path, theory_csv=None,
                       title=None) -> None:
    """Amplitude profile of an eigenfunction, optionally overlaying a
    reference (e.g. the theoretical invariance mode)."""
    table = read_table(eigenfunction_csv,
                       ["x_ps", "re1", "im1", "re2", "im2", "amplitude"])
    fig, ax = plt.subplots(figsize=(6.2, 4.2))
    ax.plot(table["x_ps"], table["amplitude"], "o", ms=2.4, color="tab:blue",
            label="numerical")
    if theory_csv is not None:
        ref = read_table(theory_csv,
                         ["x_ps", "re1", "im1", "re2", "im2", "amplitude"])
        ax.plot(ref["x_ps"], ref["amplitude"], "-", color="k", lw=1.0,
                label="theoretical")
    ax.set_xlabel("fast time x (ps)")
    ax.set_ylabel("amplitude $\\|u(x)\\|$")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_loglog(csv_path, out_path, title=None) -> float:
    """Log-log error plot with a fitted-slope annotation.

    Accepts any two-column schema (dt_m/abs_error, r/error, epsilon/rel_error).
    Returns the fitted slope.
    """
    table = read_table(csv_path, [])
    numeric = [c for c in table if c != "class"]
    if len(numeric) < 2:
        from . import SchemaError

        raise SchemaError(f"{csv_path}: need two numeric columns")
    xname, yname = numeric[:2]
    x, y = table[xname], table[yname]
    keep = np.isfinite(y) & (y > 0) & (x > 0)
    if keep.sum() < 2:
        from . import SchemaError

        raise SchemaError(f"{csv_path}: fewer than two positive points")
    slope = float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    ax.loglog(x[keep], y[keep], "o-", color="tab:blue")
    ax.set_xlabel(xname)
    ax.set_ylabel(yname)
    ax.annotate(f"slope {slope:.2f}", xy=(0.05, 0.08), xycoords="axes fraction")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return slope
