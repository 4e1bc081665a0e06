"""SVG renderings drawn from the CSV outputs.

Plots read only the CSV files, so any emitted table can be re-plotted later.
Output is deterministic: fixed SVG id salt and no date metadata.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .studies import Table  # noqa: E402

_RC = {"svg.hashsalt": "painleve", "svg.fonttype": "path", "figure.dpi": 100}

REGIME_CODES = {"slipping": 0, "lift_off": 1, "inconsistent": 2, "indeterminate": 3, "boundary": 4}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_trajectory(csv_path, svg_path) -> Path:
    t = Table.from_csv(csv_path)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 6))
        for ax, name in zip(axes, ("y", "w", "v")):
            ax.plot(t["t"], t[name], lw=1)
            ax.set_ylabel(name)
        axes[-1].set_xlabel("t")
        return _save(fig, svg_path)


def plot_two_rod(green_csv, blue_csv, svg_path) -> Path:
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
        for path, color in ((green_csv, "tab:green"), (blue_csv, "tab:blue")):
            t = Table.from_csv(path)
            axes[0].plot(t["t"], t["w"], color=color, lw=1)
            axes[1].plot(t["t"], t["v"], color=color, lw=1)
        axes[0].set_ylabel("w")
        axes[1].set_ylabel("v")
        axes[1].set_xlabel("t")
        return _save(fig, svg_path)


def plot_sweep(csv_path, svg_path, xlabel: str = "abscissa") -> Path:
    t = Table.from_csv(csv_path)
    x = t["abscissa"]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(x, t["e_closed_form"], "k-", lw=1.5, label="e")
        ax.plot(x, t["e_numeric"], "r.", ms=3, label="e (stick ODE)")
        top = np.nanmax(t["e_closed_form"]) * 1.3 if np.any(np.isfinite(t["e_closed_form"])) else 1
        for name, style in (("e_small_delta", "b--"), ("e_large_delta", "g--")):
            y = np.where(np.isfinite(t[name]) & (t[name] <= top), t[name], np.nan)
            ax.plot(x, y, style, lw=1, label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("e")
        ax.set_ylim(bottom=0.0)
        ax.legend(fontsize=8)
        return _save(fig, svg_path)


def plot_phase_map(raster_csv, overlay_csv, svg_path) -> Path:
    r = Table.from_csv(raster_csv)
    o = Table.from_csv(overlay_csv)
    ths = np.unique(r["theta"])
    phs = np.unique(r["phi"])
    codes = np.array([REGIME_CODES[s] for s in r["regime"]], dtype=float)
    grid = codes.reshape(len(ths), len(phs)).T
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        ax.pcolormesh(ths, phs, grid, shading="nearest", cmap="Pastel1", vmin=0, vmax=8)
        curves = o["curve"]
        for name, style in (("theta_1", "k-"), ("theta_2", "k-"), ("b0_upper", "k--"),
                            ("b0_lower", "k--")):
            m = curves == name
            ax.plot(o["theta"][m], o["phi"][m], style, lw=1)
        m = curves == "P"
        ax.plot(o["theta"][m], o["phi"][m], "ko", ms=4)
        ax.set_xlabel("theta")
        ax.set_ylabel("phi")
        ax.set_ylim(phs.min(), phs.max())
        return _save(fig, svg_path)


def plot_kappa1(orbits_csv, overlay_csv, svg_path) -> Path:
    r = Table.from_csv(orbits_csv)
    o = Table.from_csv(overlay_csv)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        orbit, direction = r["orbit"], r["direction"]
        for k in np.unique(orbit):
            for d, style in (("forward", "-"), ("backward", ":")):
                m = (orbit == k) & (direction == d)
                ax.plot(r["w1"][m], r["y1"][m], style, color="0.3", lw=0.8)
        if len(o):
            curves = o["curve"]
            for name, color in (("gamma1_u", "tab:red"), ("gamma1_s", "tab:blue")):
                m = curves == name
                ax.plot(o["w1"][m], o["y1"][m], color=color, lw=1.2)
            for name, marker in (("C1", "ko"), ("w1_star", "k^")):
                m = curves == name
                ax.plot(o["w1"][m], o["y1"][m], marker, ms=4)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("w1")
        ax.set_ylabel("y1_hat")
        return _save(fig, svg_path)


def plot_convergence(csv_path, svg_path) -> Path:
    t = Table.from_csv(csv_path)
    eps = t["epsilon"]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
        for name in ("err_e", "err_theta", "abs_v"):
            axes[0].loglog(eps, t[name], "o-", ms=3, label=name)
        axes[0].set_xlabel("epsilon")
        axes[0].legend(fontsize=8)
        axes[1].loglog(eps, t["duration"], "o-", ms=3, label="T")
        axes[1].loglog(eps, eps * np.log(1 / eps), "k--", lw=0.8, label="eps ln(1/eps)")
        axes[1].set_xlabel("epsilon")
        axes[1].legend(fontsize=8)
        return _save(fig, svg_path)
