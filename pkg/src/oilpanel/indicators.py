"""Indicator labels and their World Bank provider codes."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class IndicatorSpec:
    label: str
    code: str
    title: str


INDICATORS: tuple[IndicatorSpec, ...] = (
    IndicatorSpec("le-total", "SP.DYN.LE00.IN", "Life expectancy at birth, total"),
    IndicatorSpec("le-female", "SP.DYN.LE00.FE.IN", "Life expectancy at birth, female"),
    IndicatorSpec("le-male", "SP.DYN.LE00.MA.IN", "Life expectancy at birth, male"),
    IndicatorSpec("infant-mortality", "SP.DYN.IMRT.IN", "Infant mortality"),
    IndicatorSpec("under5-mortality", "SH.DYN.MORT", "Mortality under age 5"),
    IndicatorSpec("adult-mortality-female", "SP.DYN.AMRT.FE", "Adult mortality, female"),
    IndicatorSpec("adult-mortality-male", "SP.DYN.AMRT.MA", "Adult mortality, male"),
    IndicatorSpec("gdp-per-capita", "NY.GDP.PCAP.KD", "GDP per capita"),
    IndicatorSpec("pop-15-64", "SP.POP.1564.TO.ZS", "Population ages 15-64 (% of total)"),
)

BY_LABEL = {s.label: s for s in INDICATORS}
BY_CODE = {s.code: s for s in INDICATORS}

# PPP alternative for the GDP series
GDP_PPP_CODE = "NY.GDP.PCAP.PP.KD"

LIFE_EXPECTANCY = ("le-total", "le-female", "le-male")
MORTALITY = (
    "infant-mortality",
    "under5-mortality",
    "adult-mortality-female",
    "adult-mortality-male",
)
# column order of the two DiD tables
DID_OUTCOMES = LIFE_EXPECTANCY + MORTALITY
EVENT_OUTCOMES = ("le-total", "infant-mortality", "under5-mortality")
SUMMARY_VARIABLES = ("gdp-per-capita", "le-total", "infant-mortality", "pop-15-64")


def code_for(label: str) -> str:
    try:
        return BY_LABEL[label].code
    except KeyError:
        raise KeyError(f"unknown indicator label {label!r}") from None


def label_for(code: str) -> str:
    try:
        return BY_CODE[code].label
    except KeyError:
        raise KeyError(f"unknown indicator code {code!r}") from None
