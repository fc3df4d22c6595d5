"""SVG plots of scenario results. All plotted data is also written to CSV files."""
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from fdrpath.rpath import PathComparison  # noqa: E402

# fixed element ids, so that identical data give identical files
matplotlib.rcParams["svg.hashsalt"] = "fdrpath"

_SVG_METADATA = {"Date": None, "Creator": None}


def _save(fig, filename: Union[str, Path]) -> None:
    fig.savefig(filename, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def plot_path_comparison(comparison: PathComparison, filename: Union[str, Path]) -> None:
    """Scatter plot of the FDR estimates of two paths, position by position."""

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], color="grey", linewidth=0.8, linestyle="--")
    ax.scatter(comparison.fdr_b, comparison.fdr_a, s=4, alpha=0.6)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel(f"{comparison.label_b} FDR")
    ax.set_ylabel(f"{comparison.label_a} FDR")
    ax.set_title(f"sup |diff| = {comparison.sup_norm:.4f}")
    fig.tight_layout()
    _save(fig, filename)


def plot_pi0_estimates(
    pi0: pd.DataFrame, true_pi0: Optional[float], filename: Union[str, Path]
) -> None:
    """
    Box plots of the null proportion estimates per setting.

    Parameters
    ----------
    pi0 : DataFrame
        Table with the columns setting, pi0_quantile and, optionally, pi0_em.
    true_pi0 : float, optional
        True null proportion, drawn as a horizontal line.
    filename : str or Path
        Output file.

    """

    settings = list(dict.fromkeys(pi0["setting"]))
    columns = [c for c in ("pi0_quantile", "pi0_em") if c in pi0.columns]
    fig, ax = plt.subplots(figsize=(max(5, len(settings)), 4))
    width = 0.8 / max(1, len(columns))
    for j, column in enumerate(columns):
        data = [pi0.loc[pi0["setting"] == s, column].dropna().to_numpy() for s in settings]
        positions = np.arange(len(settings)) + (j - (len(columns) - 1) / 2) * width
        boxes = ax.boxplot(data, positions=positions, widths=width * 0.9, patch_artist=True)
        for patch in boxes["boxes"]:
            patch.set_facecolor(f"C{j}")
        ax.plot([], [], color=f"C{j}", label=column)
    if true_pi0 is not None:
        ax.axhline(true_pi0, color="grey", linestyle="--", linewidth=0.8)
    ax.set_xticks(np.arange(len(settings)))
    ax.set_xticklabels(settings, rotation=45)
    ax.set_ylabel("estimated pi0")
    ax.legend()
    fig.tight_layout()
    _save(fig, filename)
