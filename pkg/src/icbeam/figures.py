"""Figure rendering for experiment results.

Renders the standard report plots next to a CSV output file: mean sum
rate and energy efficiency versus SNR for sweeps, the accuracy
percentage versus SNR for accuracy studies, and per-trial metric
trajectories for convergence dumps. Files are written as PNG with the
CSV path's stem plus a suffix; every function returns the paths it
wrote.
"""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file output only, no display backend needed
import matplotlib.pyplot as plt

_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "axes.grid": True,
    "grid.alpha": 0.4,
    "lines.linewidth": 1.6,
    "lines.markersize": 5.0,
    "font.size": 10,
}
_MARKERS = ("o", "s", "^", "d", "v", "*")


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _label(algorithm: str, sigma2: float, many_sigma2: bool) -> str:
    name = {"proposed": "robust", "max_sinr": "max-SINR", "min_leakage": "min-leakage"}.get(
        algorithm, algorithm
    )
    return f"{name}, err var {sigma2:g}" if many_sigma2 else name


def render_sweep_figures(rows, csv_path) -> list:
    """Mean sum rate and energy efficiency vs SNR, one line per
    (algorithm, sigma2). `rows` are ResultRow records."""
    csv_path = Path(csv_path)
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[(r.algorithm, r.sigma2)][r.snr_db].append(r)
    many_sigma2 = len({s2 for _, s2 in groups}) > 1
    written = []
    for attr, suffix, ylabel in (
        ("sum_rate_bits", "sum_rate", "mean sum rate (b/s/Hz)"),
        ("energy_efficiency", "energy_efficiency", "energy efficiency (b/s/Hz per unit power)"),
    ):
        with plt.rc_context(_STYLE):
            fig, ax = plt.subplots()
            for i, ((algorithm, sigma2), by_snr) in enumerate(sorted(groups.items())):
                snrs = sorted(by_snr)
                means = [
                    sum(getattr(r, attr) for r in by_snr[s]) / len(by_snr[s]) for s in snrs
                ]
                ax.plot(snrs, means, marker=_MARKERS[i % len(_MARKERS)],
                        label=_label(algorithm, sigma2, many_sigma2))
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel(ylabel)
            if attr == "energy_efficiency":
                ax.set_yscale("log")
            ax.legend()
            written.append(_save(fig, csv_path.with_name(csv_path.stem + f"_{suffix}.png")))
    return written


def render_accuracy_figure(rows, csv_path) -> list:
    """Accuracy percentage vs SNR, one line per sigma2. `rows` are
    AccuracyRow records."""
    csv_path = Path(csv_path)
    by_sigma2 = defaultdict(list)
    for r in rows:
        by_sigma2[r.sigma2].append(r)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for i, sigma2 in enumerate(sorted(by_sigma2)):
            pts = sorted(by_sigma2[sigma2], key=lambda r: r.snr_db)
            ax.plot(
                [p.snr_db for p in pts],
                [p.alpha_pct for p in pts],
                marker=_MARKERS[i % len(_MARKERS)],
                label=f"err var {sigma2:g}",
            )
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("mean-SINR approximation gap (%)")
        ax.legend()
        return [_save(fig, csv_path.with_name(csv_path.stem + "_alpha.png"))]


def render_converge_figure(rows, csv_path) -> list:
    """Metric trajectory per trial over half-steps. `rows` are
    (trial, half_step, metric) tuples."""
    csv_path = Path(csv_path)
    traces = defaultdict(list)
    for trial, half_step, value in rows:
        traces[trial].append((half_step, value))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for trial in sorted(traces):
            pts = sorted(traces[trial])
            ax.plot([p[0] for p in pts], [p[1] for p in pts], alpha=0.7, label=f"trial {trial}")
        ax.set_xlabel("half-step")
        ax.set_ylabel("metric")
        if len(traces) <= 10:
            ax.legend()
        return [_save(fig, csv_path.with_name(csv_path.stem + "_metric.png"))]
