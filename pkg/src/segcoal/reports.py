"""Machine-readable reports and rendered figures.

Every JSON artifact carries the schema tag and the seed that produced it,
and serialises with sorted keys so identical configurations yield byte
identical output.  CSV always starts with a header row.  Figures are
rendered with the Agg backend next to the delimited files when an output
directory is given; the CSV remains the primary, plot-tool-friendly form.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

SCHEMA = "segcoal/1"


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def dimension_figure(rows: list[dict], path: Path) -> None:
    """Empirical dimension with error bars against the analytic line."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ts = [row["t"] for row in rows]
    ax.errorbar(
        ts,
        [row["empirical"] for row in rows],
        yerr=[1.96 * row["stderr"] for row in rows],
        fmt="o",
        capsize=3,
        label="empirical (conditioned on survival)",
    )
    ax.plot(ts, [row["analytic"] for row in rows], "k--", label="analytic")
    ax.set_xlabel("t")
    ax.set_ylabel("dust dimension")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def simulate_figure(dust_measures, block_counts, path: Path) -> None:
    """Replicate histograms of dust measure and block count."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.hist(dust_measures, bins=40, color="tab:blue")
    ax1.set_xlabel("dust measure")
    ax1.set_ylabel("replicates")
    ax2.hist(block_counts, bins=40, color="tab:orange")
    ax2.set_xlabel("block count")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def gwve_figure(levels, formula_means, sim_means, sim_se, path: Path) -> None:
    """Mean survivor counts: exact formula, with simulation overlay if present."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(levels, formula_means, "k--", label="exact mean")
    if sim_means is not None:
        ax.errorbar(levels, sim_means, yerr=[3 * e for e in sim_se], fmt="o", capsize=3,
                    label="simulated (3 SE)")
    ax.set_xlabel("level n")
    ax.set_ylabel("E[B_n]")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
