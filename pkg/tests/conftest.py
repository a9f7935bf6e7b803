import socket

import numpy as np
import pandas as pd
import pytest

from oilpanel.ingest import build_dataset
from oilpanel.panel import PanelDataset, StudyConfig

START, END = 1960, 2014


@pytest.fixture(scope="session")
def fixture_dataset():
    return build_dataset()


@pytest.fixture
def no_network(monkeypatch):
    """Fail any attempt to open a socket."""

    def guard(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)


def sim_study(n_countries=12, event_year=1980, regions=None, study_id="sim"):
    countries = [f"S{i:02d}" for i in range(n_countries)]
    regions = regions or {c: "R1" for c in countries}
    return StudyConfig(study_id, countries[0], tuple(countries[1:]), event_year,
                       START, END, region_of=regions)


def panel_from_wide(values: dict, indicator="le-total", regions=None) -> PanelDataset:
    """``values`` maps country -> array over 1960..2014 (NaN = missing)."""
    years = np.arange(START, END + 1)
    rows = []
    for c, arr in values.items():
        reg = (regions or {}).get(c, "R1")
        for y, v in zip(years, arr):
            rows.append((c, reg, int(y), indicator, float(v)))
    return PanelDataset.from_frame(pd.DataFrame(rows, columns=["country", "region", "year", "indicator", "value"]))


def twfe_panel(rng, effect=3.0, sd=0.5, n_countries=12, event_year=1980):
    """Y = a_c + g_t + effect * Post + noise on 12 x 55 country-years."""
    study = sim_study(n_countries, event_year)
    years = np.arange(START, END + 1)
    gamma = rng.normal(0, 1, years.size).cumsum()
    vals = {}
    for i, c in enumerate(study.units):
        y = rng.normal(60, 5) + gamma + rng.normal(0, sd, years.size)
        if i == 0:
            y = y + effect * (years > event_year)
        vals[c] = y
    return panel_from_wide(vals), study


def exact_combination_panel(rng, a=0.3, b=0.7, effect=1.5, event_year=1985):
    """Treated = a*A + b*B in every predictor and pre-event outcome.

    GDP and the working-age share are constant within each country so the
    treated pre-event mean log GDP is exactly the same mix of donor values.
    """
    years = np.arange(START, END + 1)
    donors = ["DA", "DB", "DC", "DD", "DE"]
    regions = {c: "R1" for c in ["TR", *donors]}
    le, gdp, pop = {}, {}, {}
    for c in donors:
        le[c] = rng.uniform(40, 60) + rng.uniform(0.1, 0.5) * (years - START) + rng.normal(0, 1, years.size)
        gdp[c] = np.full(years.size, np.exp(rng.uniform(6, 9)))
        pop[c] = np.full(years.size, rng.uniform(50, 65))
    le["TR"] = a * le["DA"] + b * le["DB"] + effect * (years > event_year)
    gdp["TR"] = np.exp(a * np.log(gdp["DA"]) + b * np.log(gdp["DB"]))
    pop["TR"] = a * pop["DA"] + b * pop["DB"]
    frames = []
    for ind, vals in (("le-total", le), ("gdp-per-capita", gdp), ("pop-15-64", pop)):
        for c, arr in vals.items():
            frames.extend((c, "R1", int(y), ind, float(v)) for y, v in zip(years, arr))
    ds = PanelDataset.from_frame(pd.DataFrame(frames, columns=["country", "region", "year", "indicator", "value"]))
    study = StudyConfig("exact", "TR", tuple(donors), event_year, START, END, region_of=regions)
    return ds, study


def simplex_grid(step=1e-3):
    """All (w1, w2, w3) on the simplex with the given spacing."""
    n = int(round(1 / step))
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = i + j <= n
    w1, w2 = i[keep] / n, j[keep] / n
    return np.column_stack([w1, w2, 1 - w1 - w2])
