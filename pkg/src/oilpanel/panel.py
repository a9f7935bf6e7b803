"""Panel data model, the eleven discovery studies, and sample construction."""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from . import countries as C
from .indicators import BY_LABEL

START_YEAR = 1960
END_YEAR = 2014
CSV_COLUMNS = ["country", "region", "year", "indicator", "value"]


class PanelError(ValueError):
    pass


@dataclass(frozen=True)
class PanelDataset:
    """Long-format country x year x indicator observations.

    ``frame`` holds one row per observation with columns
    ``country, region, year, indicator, value``; missing values are NaN.
    Construct through :meth:`from_frame` or :meth:`read_csv` so invariants
    are checked and the row order is canonical.
    """

    frame: pd.DataFrame
    start_year: int = START_YEAR
    end_year: int = END_YEAR

    @classmethod
    def from_frame(
        cls, df: pd.DataFrame, start_year: int = START_YEAR, end_year: int = END_YEAR
    ) -> "PanelDataset":
        missing = [c for c in CSV_COLUMNS if c not in df.columns]
        if missing:
            raise PanelError(f"panel frame lacks columns {missing}")
        df = df[CSV_COLUMNS].copy()
        df["country"] = df["country"].astype(str)
        df["region"] = df["region"].astype(str)
        df["indicator"] = df["indicator"].astype(str)
        df["year"] = df["year"].astype(int)
        df["value"] = pd.to_numeric(df["value"], errors="raise").astype(float)
        df = df.sort_values(["indicator", "country", "year"], kind="mergesort")
        df = df.reset_index(drop=True)
        ds = cls(df, start_year, end_year)
        ds.validate()
        return ds

    @classmethod
    def from_records(cls, records: Iterable[tuple], **kw) -> "PanelDataset":
        return cls.from_frame(pd.DataFrame(list(records), columns=CSV_COLUMNS), **kw)

    def validate(self) -> None:
        df = self.frame
        dup = df.duplicated(["country", "year", "indicator"])
        if dup.any():
            first = df.loc[dup].iloc[0]
            raise PanelError(
                "duplicate observation for "
                f"({first.country}, {first.year}, {first.indicator})"
            )
        regions = df.groupby("country")["region"].nunique()
        if (regions > 1).any():
            bad = sorted(regions[regions > 1].index)
            raise PanelError(f"countries with more than one region label: {bad}")
        out = (df["year"] < self.start_year) | (df["year"] > self.end_year)
        if out.any():
            raise PanelError(
                f"years outside {self.start_year}..{self.end_year}: "
                f"{sorted(df.loc[out, 'year'].unique())[:5]}"
            )

    # -- serialization ---------------------------------------------------

    @classmethod
    def read_csv(cls, path_or_buf, **kw) -> "PanelDataset":
        df = pd.read_csv(
            path_or_buf,
            dtype={"country": str, "region": str, "indicator": str},
            keep_default_na=False,
            na_values={"value": [""]},
            float_precision="round_trip",
        )
        return cls.from_frame(df, **kw)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        out = self.frame.copy()
        out["value"] = [_fmt_value(v) for v in out["value"]]
        out.to_csv(buf, index=False, lineterminator="\n")
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="\n")

    # -- access ----------------------------------------------------------

    @property
    def countries(self) -> list[str]:
        return sorted(self.frame["country"].unique())

    @property
    def indicators(self) -> list[str]:
        return sorted(self.frame["indicator"].unique())

    def region_map(self) -> dict[str, str]:
        return dict(self.frame.groupby("country")["region"].first())

    def series(self, indicator: str, countries: Iterable[str] | None = None) -> pd.DataFrame:
        """Non-missing rows of one indicator as ``country, region, year, value``."""
        df = self.frame[self.frame["indicator"] == indicator]
        if countries is not None:
            df = df[df["country"].isin(list(countries))]
        df = df.dropna(subset=["value"])
        return df[["country", "region", "year", "value"]].reset_index(drop=True)

    def wide(self, indicator: str) -> pd.DataFrame:
        """year x country table of one indicator (NaN where missing)."""
        df = self.frame[self.frame["indicator"] == indicator]
        return df.pivot(index="year", columns="country", values="value").sort_index()


def _fmt_value(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


@dataclass(frozen=True)
class StudyConfig:
    """One treated country with its control pool and event year."""

    study_id: str
    treated: str
    controls: tuple[str, ...]
    event_year: int
    start_year: int = START_YEAR
    end_year: int = END_YEAR
    outcome: str = "le-total"
    region_of: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.controls:
            raise PanelError(f"{self.study_id}: empty control list")
        if self.treated in self.controls:
            raise PanelError(f"{self.study_id}: treated country listed as a control")
        if not self.start_year <= self.event_year <= self.end_year:
            raise PanelError(
                f"{self.study_id}: event year {self.event_year} outside "
                f"{self.start_year}..{self.end_year}"
            )
        treated_codes = {s[1] for s in _STUDY_TABLE}
        clash = treated_codes.intersection(self.controls)
        if clash:
            raise PanelError(f"{self.study_id}: treated countries used as controls: {sorted(clash)}")
        if not self.region_of:
            regions = {c: C.region_of(c) for c in (self.treated, *self.controls)}
            object.__setattr__(self, "region_of", regions)

    @property
    def name(self) -> str:
        return C.name_of(self.treated)

    @property
    def units(self) -> tuple[str, ...]:
        return (self.treated, *self.controls)

    def replace(self, **changes) -> "StudyConfig":
        return dataclasses.replace(self, **changes)


# study id, treated, event year, pool
_STUDY_TABLE = [
    ("oman", "OMN", 1966, "mena"),
    ("netherlands", "NLD", 1966, "europe"),
    ("syria", "SYR", 1968, "mena"),
    ("malaysia", "MYS", 1971, "east-asia"),
    ("ecuador", "ECU", 1972, "latin-america"),
    ("norway", "NOR", 1972, "europe"),
    ("new-zealand", "NZL", 1976, "europe"),
    ("uk", "GBR", 1976, "europe"),
    ("denmark", "DNK", 1982, "europe"),
    ("yemen", "YEM", 1991, "mena"),
    ("equatorial-guinea", "GNQ", 1992, "africa"),
]

# control groups as listed, before the narrative exclusions
_POOLS_AS_LISTED = {
    "east-asia": ["KHM", "CHN", "HKG", "IDN", "JPN", "KOR", "LAO", "MNG", "PHL", "SGP", "TWN", "THA", "VNM"],
    "latin-america": ["CRI", "CUB", "DOM", "SLV", "GTM", "HND", "JAM", "NIC", "PAN", "PRY", "PRI", "URY"],
    "mena": ["DJI", "EGY", "ISR", "JOR", "LBN", "MAR", "TUN", "TUR"],
    "europe": [
        "BEL", "FIN", "FRA", "DEU", "IRL", "SWE", "CHE", "CZE", "HUN", "POL",
        "GRC", "ITA", "PRT", "ESP",
    ],
    "africa": [
        "BEN", "BFA", "BDI", "CMR", "CPV", "CAF", "TCD", "CIV", "GMB", "GHA",
        "GIN", "KEN", "LSO", "LBR", "MDG", "MWI", "MLI", "MRT", "MUS", "MOZ",
        "NAM", "NER", "SEN", "SOM", "SDN", "SWZ", "TZA", "TGO", "UGA", "ZMB", "ZWE",
    ],
}


def control_pool(pool: str) -> tuple[str, ...]:
    return tuple(c for c in _POOLS_AS_LISTED[pool] if c not in C.EXCLUDED)


def builtin_studies() -> list[StudyConfig]:
    """The eleven discovery studies in event-year order."""
    out = []
    for study_id, treated, year, pool in _STUDY_TABLE:
        out.append(StudyConfig(study_id, treated, control_pool(pool), year))
    return out


def get_study(study_id: str, event_year: int | None = None) -> StudyConfig:
    for s in builtin_studies():
        if s.study_id == study_id or s.treated == study_id.upper():
            return s if event_year is None else s.replace(event_year=event_year)
    known = ", ".join(s.study_id for s in builtin_studies())
    raise KeyError(f"unknown study {study_id!r}; known: {known}")


@dataclass(frozen=True)
class StudySample:
    """Retained rows of one study for one outcome.

    ``rows`` has columns ``country, region, year, value, treated,
    relative_year`` with missing outcomes already dropped.
    """

    config: StudyConfig
    rows: pd.DataFrame
    missing_countries: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def countries(self) -> list[str]:
        return sorted(self.rows["country"].unique())

    @property
    def coverage_note(self) -> str:
        if not self.missing_countries:
            return ""
        names = ", ".join(f"{c} ({C.COUNTRIES[c].name})" if c in C.COUNTRIES else c
                          for c in self.missing_countries)
        return f"{self.config.study_id}/{self.config.outcome}: no data for {names}"


def build_study_sample(dataset: PanelDataset, config: StudyConfig) -> StudySample:
    """Rows of the treated country and its controls with non-missing outcome."""
    df = dataset.series(config.outcome, config.units)
    df = df[(df["year"] >= config.start_year) & (df["year"] <= config.end_year)].copy()
    if config.region_of:
        df["region"] = df["country"].map(lambda c: config.region_of.get(c, None))
        df["region"] = df["region"].fillna(
            df["country"].map(dataset.region_map())
        )
    treated_pre = df[(df["country"] == config.treated) & (df["year"] <= config.event_year)]
    if treated_pre.empty:
        raise PanelError(
            f"{config.study_id}: treated country {config.treated} has no "
            f"pre-event {config.outcome} data"
        )
    df["treated"] = (df["country"] == config.treated).astype(int)
    df["relative_year"] = df["year"] - config.event_year
    df = df.sort_values(["country", "year"], kind="mergesort").reset_index(drop=True)
    present = set(df["country"])
    missing = tuple(c for c in config.controls if c not in present)
    return StudySample(config, df, missing)


@dataclass(frozen=True)
class SummaryEntry:
    mean: float | None
    sd: float | None
    n: int

    @property
    def available(self) -> bool:
        return self.mean is not None


@dataclass(frozen=True)
class SummaryTable:
    study_id: str
    entries: dict[tuple[str, str], SummaryEntry]

    def get(self, group: str, variable: str) -> SummaryEntry:
        return self.entries[(group, variable)]


def describe(values: Iterable[float]) -> SummaryEntry:
    """Mean, sample sd (n-1) and count; unavailable parts are None."""
    x = np.asarray([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    n = int(x.size)
    if n == 0:
        return SummaryEntry(None, None, 0)
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if n > 1 else None
    return SummaryEntry(mean, sd, n)


def summary_stats(
    dataset: PanelDataset, config: StudyConfig, variables: Iterable[str]
) -> SummaryTable:
    """Treated-country and pooled-control summaries over the study window."""
    entries = {}
    for var in variables:
        df = dataset.series(var, config.units)
        df = df[(df["year"] >= config.start_year) & (df["year"] <= config.end_year)]
        treated = df.loc[df["country"] == config.treated, "value"]
        control = df.loc[df["country"] != config.treated, "value"]
        entries[("treated", var)] = describe(treated)
        entries[("control", var)] = describe(control)
    return SummaryTable(config.study_id, entries)


def known_indicator(label: str) -> bool:
    return label in BY_LABEL
