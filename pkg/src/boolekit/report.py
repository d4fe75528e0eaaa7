"""Matplotlib rendering for the CLI report paths.

Every figure function returns a Figure; save_figure writes it as PNG and
closes it. The Agg backend is forced so the CLI works headless. Figures are
companions to the delimited output, never a replacement: every number shown
here is also in a CSV or JSON file next to the image.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (7.2, 4.6),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "font.size": 9.5,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.axisbelow": True,
    "legend.framealpha": 0.9,
}


def save_figure(fig, path) -> None:
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def facet_heatmap(scenario, facets):
    """Coefficient matrix of the derived facets, one row per inequality."""
    from .polytope import facet_csv_header

    header = facet_csv_header(scenario)
    data = np.array(
        [[float(v) for v in ineq.coefficient_vector()] for ineq in facets]
    )
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(
            figsize=(1.2 + 0.75 * len(header), 1.0 + 0.33 * max(len(facets), 1))
        )
        bound = max(1.0, float(np.abs(data).max())) if data.size else 1.0
        im = ax.imshow(data, cmap="RdBu_r", vmin=-bound, vmax=bound, aspect="auto")
        ax.set_xticks(range(len(header)), header, rotation=45, ha="right")
        ax.set_yticks(range(len(facets)), [f"facet {i}" for i in range(len(facets))])
        for r in range(data.shape[0]):
            for c in range(data.shape[1]):
                ax.text(c, r, f"{data[r, c]:g}", ha="center", va="center", fontsize=8)
        ax.grid(False)
        fig.colorbar(im, ax=ax, shrink=0.85, label="coefficient")
        ax.set_title("facets: constant + coefficients · coordinates ≥ 0")
    return fig


def verdict_figure(scenario, verdict):
    """Witness weights (feasible) or certificate coefficients (infeasible)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if verdict.witness is not None:
            weights = [float(w) for w in verdict.witness.weights]
            n = scenario.n
            labels = [
                "".join("+" if (m >> (n - 1 - i)) & 1 == 0 else "-" for i in range(n))
                for m in range(len(weights))
            ]
            ax.bar(range(len(weights)), weights, color="#2c7fb8")
            ax.set_xticks(range(len(weights)), labels, rotation=90 if n > 4 else 0)
            ax.set_xlabel("deterministic assignment")
            ax.set_ylabel("witness weight")
            ax.set_title("feasible: witness joint distribution")
        elif verdict.certificate is not None:
            items = sorted(verdict.certificate.coefficients.items())
            values = [float(v) for _, v in items]
            names = [
                f"c{cid}:" + "".join("+" if o > 0 else "-" for o in out)
                for (cid, out), _ in items
            ]
            colors = ["#d7301f" if v < 0 else "#2c7fb8" for v in values]
            ax.bar(range(len(values)), values, color=colors)
            ax.set_xticks(range(len(values)), names, rotation=90)
            ax.axhline(0.0, color="k", lw=0.8)
            ax.set_ylabel("certificate coefficient")
            ax.set_title(
                "infeasible: separating functional "
                f"(constant {float(verdict.certificate.constant):g})"
            )
        else:
            ax.text(
                0.5,
                0.5,
                f"status: {verdict.status}\nmax discrepancy "
                f"{float(verdict.consistency.max_discrepancy):g}",
                ha="center",
                va="center",
                transform=ax.transAxes,
            )
            ax.set_axis_off()
    return fig


def estimates_figure(scenario, estimates, *, statistic=None, bound=None):
    """Estimated correlators with error bars; optional statistic annotation."""
    labels = scenario.labels
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        keys = sorted(estimates.pairs)
        names = [f"K({labels[i]},{labels[j]})" for i, j in keys]
        values = [estimates.pairs[k].value for k in keys]
        errors = [estimates.pairs[k].stderr for k in keys]
        ax.bar(range(len(keys)), values, yerr=errors, capsize=4, color="#41ab5d")
        ax.set_xticks(range(len(keys)), names)
        ax.set_ylim(-1.15, 1.15)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_ylabel("estimated correlator")
        title = "pair correlator estimates"
        if statistic is not None:
            title += f"; sum = {float(statistic):+.4f}"
            if bound is not None:
                title += f" (joint-explainable bound {bound:+g})"
        ax.set_title(title)
    return fig


def triple_histogram(summary, runs):
    """Distribution of the per-run statistic from the triple protocol."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        values = sorted(summary.histogram)
        counts = [summary.histogram[v] for v in values]
        ax.bar(values, counts, width=0.6, color="#807dba")
        ax.set_xticks([-3, -1, 1, 3])
        ax.set_xlabel("per-run statistic Q1Q2 + Q1Q3 + Q2Q3")
        ax.set_ylabel("runs")
        ax.set_title(
            f"triple protocol, {runs} runs: average = "
            f"{float(summary.lg_statistic):+.5f} (min {summary.min_statistic})"
        )
    return fig


def interference_figure(report, contexts, *, counts=None, runs=None):
    """Distributions of the three contexts plus the additivity deficit."""
    slit1, slit2, both = contexts
    s = report.positions
    with plt.rc_context(_STYLE):
        fig, (top, bottom) = plt.subplots(
            2, 1, sharex=True, figsize=(7.2, 6.2), height_ratios=[2, 1]
        )
        top.plot(s, slit1.distribution, label="slit 1 only", color="#fe9929")
        top.plot(s, slit2.distribution, label="slit 2 only", color="#8c6bb1")
        top.plot(s, both.distribution, label="both open", color="#2b8cbe")
        top.plot(
            s,
            (slit1.distribution + slit2.distribution) / 2.0,
            "--",
            color="k",
            lw=1.0,
            label="single-slit average",
        )
        if counts is not None and runs:
            top.step(
                s,
                counts / float(runs),
                where="mid",
                color="#238b45",
                lw=0.9,
                alpha=0.8,
                label=f"sampled, {runs} hits",
            )
        top.set_ylabel("bin probability")
        top.legend(loc="upper right", fontsize=8)
        top.set_title(
            f"max |deficit| = {report.max_abs_deficit:.4g}; additive: "
            f"{report.classical_additive}"
        )
        bottom.plot(s, report.deficits, color="#d7301f")
        bottom.axhline(0.0, color="k", lw=0.8)
        bottom.set_xlabel("screen position s")
        bottom.set_ylabel("deficit")
    return fig
