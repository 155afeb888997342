"""Figure rendering for sweep, timing and beam-demo reports.

Figures are rendered headless (Agg) straight to files, next to the CSV
output they illustrate.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_METHOD_STYLE = {
    "music2d": ("tab:blue", "o"),
    "music3d": ("tab:blue", "o"),
    "modified": ("tab:orange", "s"),
    "proposed": ("tab:green", "^"),
}


def mae_plot(summaries, path, xlabel):
    "MAE versus the swept variable, one error-bar curve per method."
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    methods = sorted({row.method for row in summaries})
    for method in methods:
        rows = sorted((r for r in summaries if r.method == method),
                      key=lambda r: r.sweep_value)
        x = [r.sweep_value for r in rows]
        y = [r.mae_m for r in rows]
        err = [2.0 * r.mae_stderr for r in rows]
        color, marker = _METHOD_STYLE.get(method, ("tab:gray", "x"))
        ax.errorbar(x, y, yerr=err, label=method, color=color, marker=marker,
                    capsize=3)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("MAE [m]")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def beam_plot(angles_rad, curves, path):
    "Beam-gain curves in dB over azimuth; ``curves`` maps label -> gains."
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    deg = np.degrees(angles_rad)
    for label, gain in curves.items():
        ax.plot(deg, 10.0 * np.log10(np.maximum(gain, 1e-12)), label=label)
    ax.axhline(-3.0, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("azimuth [deg]")
    ax.set_ylabel("normalized gain [dB]")
    ax.set_ylim(-40, 2)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def timing_plot(rows, path):
    "Bar chart of spectrum-evaluation time per method ((method, mean, std))."
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [r[0] for r in rows]
    means = [r[1] for r in rows]
    stds = [r[2] for r in rows]
    colors = [_METHOD_STYLE.get(m, ("tab:gray",))[0] for m in labels]
    ax.bar(labels, means, yerr=stds, color=colors, capsize=4)
    ax.set_yscale("log")
    ax.set_ylabel("spectrum evaluation time [us]")
    ax.grid(True, axis="y", which="both", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
