"""Levin-Lin-Chu pooled unit-root test on regression residual panels.

The default specification has no deterministic terms, since OLS residuals
from a model with an intercept already have mean zero.  ``model="const"``
adds panel-specific intercepts as a diagnostic.  The bias-adjustment
constants come from the published LLC table (``data/llc_adjustments.csv``)
and are interpolated linearly in the average usable panel length.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import stats

from .regress import RegressionFit, stars

MIN_USABLE = 10
CAVEAT = (
    "note: the test is applied to estimated regression residuals; its null "
    "distribution ignores the estimation step (generated-regressor problem)"
)


class UnitRootError(ValueError):
    pass


@dataclass(frozen=True)
class ResidualPanel:
    series: dict[str, np.ndarray]  # country -> residuals in year order
    years: dict[str, np.ndarray]
    notes: tuple[str, ...] = ()

    @property
    def n_panels(self) -> int:
        return len(self.series)

    @property
    def lengths(self) -> dict[str, int]:
        return {c: len(v) for c, v in self.series.items()}


def _longest_run(years: np.ndarray) -> slice:
    breaks = np.flatnonzero(np.diff(years) != 1) + 1
    bounds = np.concatenate([[0], breaks, [len(years)]])
    lengths = np.diff(bounds)
    k = int(np.argmax(lengths))
    return slice(int(bounds[k]), int(bounds[k + 1]))


def residual_panel(fit: RegressionFit) -> ResidualPanel:
    """Group residuals by country; gaps keep the longest contiguous run."""
    res = fit.residuals
    if res is None or len(res) == 0:
        raise UnitRootError("fit carries no residuals")
    series, years, notes = {}, {}, []
    for country, grp in res.groupby(level="country", sort=True):
        grp = grp.sort_index(level="year")
        yrs = grp.index.get_level_values("year").to_numpy()
        vals = grp.to_numpy()
        run = _longest_run(yrs)
        if run.stop - run.start < len(yrs):
            notes.append(
                f"{country}: gap in residual years; kept {yrs[run.start]}-{yrs[run.stop - 1]}"
            )
        series[country] = vals[run]
        years[country] = yrs[run]
    return ResidualPanel(series, years, tuple(notes))


MODELS = ("none", "const")


@lru_cache(maxsize=None)
def adjustment_table(model: str = "none") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(T, mu*, sigma*) columns for one deterministic specification."""
    if model not in MODELS:
        raise UnitRootError(f"model must be one of {MODELS}")
    path = resources.files("oilpanel") / "data" / "llc_adjustments.csv"
    Ts, mus, sds = [], [], []
    with path.open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            Ts.append(float(row["T"]))
            mus.append(float(row[f"mu_{model}"]))
            sds.append(float(row[f"sigma_{model}"]))
    return np.array(Ts), np.array(mus), np.array(sds)


def adjustment(T_tilde: float, model: str = "none") -> tuple[float, float]:
    """Mean and std adjustments at T~, clamped to the tabulated range."""
    Ts, mus, sds = adjustment_table(model)
    finite = np.isfinite(Ts)
    T, mu, sd = Ts[finite], mus[finite], sds[finite]
    x = min(max(T_tilde, T[0]), T[-1])
    return float(np.interp(x, T, mu)), float(np.interp(x, T, sd))


def default_lags(T: int) -> int:
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def default_bandwidth(T: int) -> int:
    return int(math.floor(3.21 * T ** (1.0 / 3.0)))


def _partial_out(y: np.ndarray, Z: np.ndarray | None) -> np.ndarray:
    if Z is None or Z.shape[1] == 0:
        return y
    beta = np.linalg.lstsq(Z, y, rcond=None)[0]
    return y - Z @ beta


def long_run_variance(dy: np.ndarray, bandwidth: int) -> float:
    """Bartlett-kernel long-run variance of a (non-demeaned) series."""
    n = dy.size
    lrv = float(dy @ dy) / n
    for L in range(1, min(bandwidth, n - 1) + 1):
        w = 1.0 - L / (bandwidth + 1.0)
        lrv += 2.0 * w * float(dy[L:] @ dy[:-L]) / n
    return lrv


@dataclass(frozen=True)
class PanelStep:
    e: np.ndarray  # standardized orthogonalized differences
    v: np.ndarray  # standardized orthogonalized lagged levels
    s: float  # long-run / short-run std ratio
    lags: int
    bandwidth: int


def _panel_step(y: np.ndarray, lags: int, bandwidth: int, model: str = "none") -> PanelStep:
    dy = np.diff(y)
    n = dy.size - lags  # usable observations
    target = dy[lags:]
    ylag = y[lags:-1]
    zcols = [dy[lags - L : dy.size - L] for L in range(1, lags + 1)]
    if model == "const":
        zcols.append(np.ones(n))
    Z = np.column_stack(zcols) if zcols else None
    e_hat = _partial_out(target, Z)
    v_hat = _partial_out(ylag, Z)
    vv = float(v_hat @ v_hat)
    if vv <= 0:
        raise UnitRootError("degenerate panel: lagged level has no variation")
    delta = float(v_hat @ e_hat) / vv
    sigma2 = float(((e_hat - delta * v_hat) ** 2).sum()) / n
    if sigma2 <= 0:
        raise UnitRootError("degenerate panel: zero regression error variance")
    sigma = math.sqrt(sigma2)
    lrv = long_run_variance(dy - dy.mean() if model == "const" else dy, bandwidth)
    s = math.sqrt(max(lrv, 0.0)) / sigma
    return PanelStep(e_hat / sigma, v_hat / sigma, s, lags, bandwidth)


@dataclass(frozen=True)
class LlcResult:
    adjusted_t_star: float
    p_value: float
    t_delta: float
    delta: float
    T_tilde: float
    panels_used: tuple[str, ...]
    panels_excluded: tuple[str, ...] = ()
    lags: dict[str, int] = field(default_factory=dict)
    bandwidths: dict[str, int] = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    model: str = "none"

    @property
    def stars(self) -> str:
        return stars(self.p_value)


def llc_test(
    panel: ResidualPanel,
    lag_override: int | None = None,
    bandwidth_override: int | None = None,
    model: str = "none",
) -> LlcResult:
    """Adjusted t* and left-tail p-value under H0: every panel has a unit root."""
    if model not in MODELS:
        raise UnitRootError(f"model must be one of {MODELS}")
    steps: dict[str, PanelStep] = {}
    excluded, notes = [], list(panel.notes)
    for country in sorted(panel.series):
        y = np.asarray(panel.series[country], dtype=float)
        T = y.size
        p = default_lags(T) if lag_override is None else int(lag_override)
        bw = default_bandwidth(T) if bandwidth_override is None else int(bandwidth_override)
        if T - 1 - p < MIN_USABLE:
            excluded.append(country)
            notes.append(f"{country}: {T} residuals leave {T - 1 - p} usable (< {MIN_USABLE}); excluded")
            continue
        try:
            steps[country] = _panel_step(y, p, bw, model)
        except UnitRootError as exc:
            excluded.append(country)
            notes.append(f"{country}: {exc}; excluded")
    if not steps:
        raise UnitRootError("no usable panels for the unit-root test")
    N = len(steps)
    # pool in a content-based order so relabeling panels is bit-exact
    ordered = sorted(steps, key=lambda c: (panel.series[c].size, np.asarray(panel.series[c], float).tobytes()))
    e = np.concatenate([steps[c].e for c in ordered])
    v = np.concatenate([steps[c].v for c in ordered])
    NT = e.size
    vv = float(v @ v)
    delta = float(v @ e) / vv
    sigma2 = float(((e - delta * v) ** 2).sum()) / NT
    std_delta = math.sqrt(sigma2 / vv)
    t_delta = delta / std_delta
    S_N = float(np.mean([steps[c].s for c in ordered]))
    T_tilde = NT / N
    mu, sd = adjustment(T_tilde, model)
    t_star = (t_delta - NT * S_N * std_delta * mu / sigma2) / sd
    p_value = float(stats.norm.cdf(t_star))
    return LlcResult(
        adjusted_t_star=float(t_star),
        p_value=p_value,
        t_delta=float(t_delta),
        delta=delta,
        T_tilde=T_tilde,
        panels_used=tuple(steps),
        panels_excluded=tuple(excluded),
        lags={c: s.lags for c, s in steps.items()},
        bandwidths={c: s.bandwidth for c, s in steps.items()},
        notes=tuple(notes),
        model=model,
    )
