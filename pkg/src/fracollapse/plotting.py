"""Headless SVG line plots of diagnostics series.

Output is deterministic: the SVG hash salt is fixed and the date metadata
is dropped, so identical data renders to identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "fracollapse",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


def line_plot(path, x, series: dict, *, xlabel="t", ylabel="", title="", logy=False, marker=None) -> Path:
    """One panel; ``series`` maps legend label to y values sharing ``x``."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for label, y in series.items():
            y = np.asarray(y, dtype=float)
            ok = np.isfinite(y)
            if logy:
                ok &= y > 0
            ax.plot(np.asarray(x, dtype=float)[ok], y[ok], label=label, marker=marker)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def trajectory_plots(out_dir, records, e_ref=None) -> dict:
    """hs(t), relative energy drift and (if present) virial(t)."""
    out_dir = Path(out_dir)
    t = np.array([r.t for r in records])
    hs = np.array([r.hs for r in records])
    e = np.array([r.energy for r in records])
    e0 = e[0] if e_ref is None else e_ref
    paths = {
        "plot_hs": line_plot(out_dir / "hs.svg", t, {"hs": hs}, ylabel="Ḣ^s seminorm", logy=True),
        "plot_energy": line_plot(
            out_dir / "energy_drift.svg", t, {"drift": np.abs(e - e0) / max(abs(e0), 1e-300)},
            ylabel="|E(t) - E(0)| / |E(0)|", logy=True,
        ),
    }
    if any(r.virial is not None for r in records):
        vir = np.array([np.nan if r.virial is None else r.virial for r in records])
        paths["plot_virial"] = line_plot(out_dir / "virial.svg", t, {"virial": vir}, ylabel="localized virial")
    return paths
