"""Deterministic SVG figures for sweeps and training traces.

Output is byte-stable for identical inputs: no timestamp metadata, a fixed
SVG id salt, and text kept as ``<text>`` elements instead of embedded glyph
paths.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import MalformedCsv  # noqa: E402
from .io import read_metrics_csv  # noqa: E402
from .metrics import records_to_arrays  # noqa: E402

_RC = {
    "svg.hashsalt": "fisheripm",
    "svg.fonttype": "none",
    "path.simplify": False,
    "figure.figsize": (5.0, 3.5),
    "font.size": 9,
}

#: (column, y label, file stem) for each trace panel
TRACE_PANELS = (
    ("e_hat", "E (mean difference)", "e_hat"),
    ("omega_hat", "Omega (second moment)", "omega_hat"),
    ("lam", "lambda (multiplier)", "lambda"),
    ("loss", "critic objective", "loss"),
    ("chi2_kde_proxy", "chi2 KDE proxy", "chi2_kde_proxy"),
    ("chi2_oracle", "oracle chi2", "chi2_oracle"),
)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return str(path)


def emit_plots(csv_path, out_dir, prefix=""):
    """One SVG per populated metrics column; returns the written paths.

    Raises :class:`~fisheripm.errors.MalformedCsv` (and writes nothing) when
    the CSV is missing, malformed or has no data rows.
    """
    records = read_metrics_csv(csv_path)
    cols = records_to_arrays(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(_RC):
        for col, label, stem in TRACE_PANELS:
            y = cols[col]
            keep = np.isfinite(y)
            if not keep.any():
                continue
            fig, ax = plt.subplots()
            ax.plot(cols["iter"][keep], y[keep], lw=1.0,
                    marker="o" if keep.sum() < 50 else None, ms=3)
            if col == "omega_hat":
                ax.axhline(1.0, color="k", lw=0.6, ls="--")
            ax.set_xlabel("iteration")
            ax.set_ylabel(label)
            paths.append(_save(fig, out_dir / f"{prefix}{stem}.svg"))
    return paths


def plot_fig2(rows, out_dir):
    """Estimate vs oracle over the shift grid, and error vs training size."""
    if not rows:
        raise MalformedCsv("no sweep rows to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    shifts = sorted({r["shift"] for r in rows})
    ns = sorted({r["n_train"] for r in rows})
    paths = []
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        oracle = [np.mean([r["oracle"] for r in rows if r["shift"] == s]) for s in shifts]
        ax.plot(shifts, oracle, "k-", lw=1.5, label="oracle chi2")
        for n in ns:
            est = [np.mean([r["estimate"] for r in rows if r["shift"] == s and r["n_train"] == n])
                   for s in shifts]
            ax.plot(shifts, est, "o--", ms=3, lw=0.8, label=f"estimate n={n:g}")
        ax.set_xlabel("mean shift")
        ax.set_ylabel("distance")
        ax.legend(frameon=False)
        paths.append(_save(fig, out_dir / "fig2_estimate.svg"))

        fig, ax = plt.subplots()
        for s in shifts:
            if s == 0:
                continue
            err = [np.mean([r["abs_error"] for r in rows if r["shift"] == s and r["n_train"] == n])
                   for n in ns]
            ax.loglog(ns, err, "o-", ms=3, lw=0.8, label=f"shift {s:g}")
        ax.set_xlabel("training samples per distribution")
        ax.set_ylabel("absolute error")
        ax.legend(frameon=False)
        paths.append(_save(fig, out_dir / "fig2_error.svg"))
    return paths


def plot_samples(data, generated, out_path, centers=None):
    with plt.rc_context({**_RC, "figure.figsize": (4.0, 4.0)}):
        fig, ax = plt.subplots()
        ax.scatter(data[:, 0], data[:, 1], s=1, c="0.6", label="data")
        ax.scatter(generated[:, 0], generated[:, 1], s=1, c="C3", label="generated")
        if centers is not None:
            ax.scatter(centers[:, 0], centers[:, 1], marker="x", c="k", s=20)
        ax.set_aspect("equal")
        ax.legend(frameon=False, markerscale=5)
        return _save(fig, out_path)
