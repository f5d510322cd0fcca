"""Matplotlib figures written next to the CSV output of the report commands."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, ax, path, title, xlabel, ylabel):
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    # fixed metadata so repeated runs give identical files
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_series(path, series, title="", xlabel="n", ylabel="ratio", hlines=()):
    """series: {label: [(x, y), ...]} with float-convertible values."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in series.items():
        if not pts:
            continue
        xs = [float(x) for x, _ in pts]
        ys = [float(y) for _, y in pts]
        ax.plot(xs, ys, marker="o", ms=3, lw=1, label=str(label))
    for y in hlines:
        ax.axhline(float(y), color="grey", lw=0.8, ls="--")
    return _finish(fig, ax, path, title, xlabel, ylabel)


def plot_trace(path, construction):
    rows = construction.trace
    series = {
        "ratio": [(r.n, r.ratio) for r in rows],
        "alpha - 1/l°(n)": [(r.n, r.lower_bound) for r in rows],
    }
    return plot_series(path, series, title=f"alpha = {construction.alpha}", hlines=[construction.alpha])


def plot_scan(path, report):
    """Ratio sequences along each residue class, one line per sample and class (first samples only)."""
    series = {}
    for v in report.verdicts[:8]:
        for k, seq in v.classes.items():
            series[f"{v.label} I_{k}"] = [(i, a / b) for i, a, b in seq]
    return plot_series(path, series, title="spectrum scan", xlabel="i", hlines=report.X)
