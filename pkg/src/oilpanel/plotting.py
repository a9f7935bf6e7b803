"""Static SVG of treated versus synthetic outcome paths."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .indicators import BY_LABEL  # noqa: E402
from .synth import SynthResult  # noqa: E402


def plot_synth(result: SynthResult, path: str | Path) -> Path:
    """Write a two-curve plot with a dashed rule at the event year.

    SVG ids and metadata are pinned so reruns are byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "oilpanel", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(result.years, result.treated, color="black", lw=1.5, label=result.study.name)
        ax.plot(result.years, result.synthetic, color="black", lw=1.2, ls="--",
                label=f"synthetic {result.study.name}")
        ax.axvline(result.study.event_year, color="grey", lw=1.0, ls=":")
        spec = BY_LABEL.get(result.outcome)
        ax.set_ylabel(spec.title if spec else result.outcome)
        ax.set_xlabel("year")
        ax.legend(frameon=False, loc="best")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
