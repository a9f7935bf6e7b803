"""Two-way fixed-effects difference-in-differences per (study, outcome).

    Y_crt = a_c + delta * Post_ct + g_rt + e_ct

``Post`` is one for the treated country strictly after the event year.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .indicators import DID_OUTCOMES
from .panel import PanelDataset, PanelError, StudyConfig, StudySample, build_study_sample
from .regress import RegressionError, RegressionFit, build_fe_design, ols_fit, stars

POST = "post"
ARAB_SPRING_END = 2010
ARAB_SPRING_STUDIES = ("yemen", "oman", "syria")


def post_indicator(year: int, event_year: int) -> int:
    return int(year > event_year)


@dataclass(frozen=True)
class DidSpec:
    study: StudyConfig
    outcome: str
    end_year_override: int | None = None

    def __post_init__(self):
        if self.end_year_override is not None and self.end_year_override < self.study.event_year:
            raise PanelError(
                f"end year {self.end_year_override} precedes event year {self.study.event_year}"
            )

    def config(self) -> StudyConfig:
        cfg = self.study.replace(outcome=self.outcome)
        if self.end_year_override is not None:
            cfg = cfg.replace(end_year=self.end_year_override)
        return cfg


@dataclass(frozen=True)
class DidResult:
    spec: DidSpec
    delta: float
    se: float
    t: float
    p: float
    r2: float
    n: int
    fit: RegressionFit
    sample: StudySample

    @property
    def stars(self) -> str:
        return stars(self.p)


class PostCollinear(RegressionError):
    """The Post column carried no identifying variation and was dropped."""


def post_column(sample: StudySample) -> np.ndarray:
    rows = sample.rows
    ev = sample.config.event_year
    return ((rows["treated"] == 1) & (rows["year"] > ev)).to_numpy(dtype=float)


def did_estimate(
    dataset: PanelDataset,
    spec: DidSpec,
    *,
    cluster: bool = False,
    reverse_reference: bool = False,
    post_override: np.ndarray | None = None,
) -> DidResult:
    sample = build_study_sample(dataset, spec.config())
    post = post_column(sample) if post_override is None else np.asarray(post_override, float)
    design = build_fe_design(sample, {POST: post}, reverse_reference=reverse_reference)
    fit = ols_fit(design, sample.rows["value"].to_numpy(), cluster=cluster)
    if not fit.has(POST):
        raise PostCollinear(f"{spec.study.study_id}/{spec.outcome}: Post dropped as collinear")
    term = fit.term(POST)
    return DidResult(spec, term.estimate, term.se, term.t, term.p, fit.r2, fit.n, fit, sample)


@dataclass(frozen=True)
class DidCell:
    study_id: str
    variant: str  # "main" or "arab-spring"
    outcome: str
    result: DidResult | None
    reason: str = ""

    @property
    def available(self) -> bool:
        return self.result is not None


def did_rows(studies) -> list[tuple[StudyConfig, str, int | None]]:
    rows = []
    for s in studies:
        rows.append((s, "main", None))
        if s.study_id in ARAB_SPRING_STUDIES:
            rows.append((s, "arab-spring", ARAB_SPRING_END))
    return rows


def did_table(
    dataset: PanelDataset,
    studies,
    outcomes=DID_OUTCOMES,
    *,
    cluster: bool = False,
) -> list[DidCell]:
    """All (study row, outcome) cells; unavailable cells carry a reason."""
    cells = []
    for study, variant, end in did_rows(studies):
        for outcome in outcomes:
            spec = DidSpec(study, outcome, end)
            try:
                res = did_estimate(dataset, spec, cluster=cluster)
            except (PanelError, RegressionError) as exc:
                cells.append(DidCell(study.study_id, variant, outcome, None, str(exc)))
                continue
            cells.append(DidCell(study.study_id, variant, outcome, res))
    return cells
