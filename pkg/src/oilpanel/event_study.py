"""Event study with 3-year relative-time bins.

    Y_crt = a_c + sum_b delta_b * E_bct + g_rt + e_ct

Relative years -1..-3 are the omitted reference.  By default relative years
at or before -10 are pooled into that reference too, since no bin earlier
than -7..-9 is estimated; ``pre_mode="strict"`` gives them their own bins and
``pre_mode="drop"`` removes those treated rows instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel import PanelDataset, StudyConfig, StudySample, build_study_sample
from .regress import RegressionFit, Term, build_fe_design, ols_fit

OMITTED = "omitted"
BASELINE_POOL = "baseline-pool"
PRE_MODES = ("pool", "drop", "strict")


def assign_bin(relative_year: int, width: int = 3, pre_bins: int = 2, strict: bool = False) -> str:
    """Bin label for a treated row's relative year.

    >>> assign_bin(-2), assign_bin(0), assign_bin(-15)
    ('omitted', '+0..+2', 'baseline-pool')
    """
    r = int(relative_year)
    if r >= 0:
        k = r // width
        return f"+{k * width}..+{k * width + width - 1}"
    m = (-r - 1) // width
    if m == 0:
        return OMITTED
    if m > pre_bins and not strict:
        return BASELINE_POOL
    return f"-{m * width + 1}..-{m * width + width}"


def bin_sort_key(label: str) -> int:
    """Start of the bin in relative years (pre bins are negative)."""
    head = label.split("..")[0]
    return int(head)


@dataclass(frozen=True)
class EventStudyResult:
    study: StudyConfig
    bins: tuple[Term, ...]
    r2: float
    n: int
    fit: RegressionFit
    sample: StudySample
    pre_mode: str = "pool"

    def get(self, label: str) -> Term | None:
        for b in self.bins:
            if b.label == label:
                return b
        return None

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.bins]


def bin_columns(
    sample: StudySample, width: int = 3, pre_bins: int = 2, strict: bool = False
) -> dict[str, np.ndarray]:
    rows = sample.rows
    treated = rows["treated"].to_numpy() == 1
    labels = [
        assign_bin(r, width, pre_bins, strict) if t else None
        for r, t in zip(rows["relative_year"].to_numpy(), treated)
    ]
    realized = sorted(
        {lab for lab in labels if lab not in (None, OMITTED, BASELINE_POOL)}, key=bin_sort_key
    )
    cols = {}
    for lab in realized:
        cols[lab] = np.array([1.0 if x == lab else 0.0 for x in labels])
    return cols


def event_study_estimate(
    dataset: PanelDataset,
    study: StudyConfig,
    outcome: str,
    *,
    width: int = 3,
    pre_bins: int = 2,
    pre_mode: str = "pool",
    cluster: bool = False,
) -> EventStudyResult:
    if pre_mode not in PRE_MODES:
        raise ValueError(f"pre_mode must be one of {PRE_MODES}")
    sample = build_study_sample(dataset, study.replace(outcome=outcome))
    if pre_mode == "drop":
        rows = sample.rows
        far = (rows["treated"] == 1) & (rows["relative_year"] < -width * (pre_bins + 1))
        sample = StudySample(sample.config, rows.loc[~far].reset_index(drop=True), sample.missing_countries)
    cols = bin_columns(sample, width, pre_bins, strict=pre_mode == "strict")
    control = sample.rows["treated"].to_numpy() == 0
    for lab, col in cols.items():
        if col[control].any():
            raise AssertionError(f"bin {lab} is non-zero for a control row")
    design = build_fe_design(sample, cols)
    fit = ols_fit(design, sample.rows["value"].to_numpy(), cluster=cluster)
    terms = tuple(fit.term(lab) for lab in cols if fit.has(lab))
    return EventStudyResult(study, terms, fit.r2, fit.n, fit, sample, pre_mode)
