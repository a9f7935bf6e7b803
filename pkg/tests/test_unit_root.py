import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from oilpanel.regress import ols_fit, simple_design
from oilpanel.unit_root import (
    ResidualPanel, UnitRootError, adjustment, adjustment_table, default_bandwidth, default_lags,
    llc_test, long_run_variance, residual_panel,
)


def _panel(arrays):
    return ResidualPanel({f"c{i:02d}": a for i, a in enumerate(arrays)},
                         {f"c{i:02d}": np.arange(len(a)) for i, a in enumerate(arrays)})


def test_default_tuning():
    assert default_lags(55) == 3
    assert default_lags(100) == 4
    assert default_bandwidth(55) == 12
    assert default_bandwidth(100) == 14


def test_adjustment_table_rows_and_clamping():
    T, mu, sd = adjustment_table()
    assert T[0] == 25 and np.isinf(T[-1])
    assert adjustment(25) == (pytest.approx(0.004), pytest.approx(1.049))
    assert adjustment(10) == adjustment(25)
    assert adjustment(1000) == adjustment(250)
    lo, hi = adjustment(50), adjustment(60)
    mid = adjustment(55)
    assert mid[0] == pytest.approx((lo[0] + hi[0]) / 2)
    with pytest.raises(UnitRootError):
        adjustment_table("trend")


def test_long_run_variance_bartlett():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    n, bw = x.size, 4
    direct = sum((1 - abs(L) / (bw + 1)) * (x[abs(L):] @ x[: n - abs(L)]) / n for L in range(-bw, bw + 1))
    assert long_run_variance(x, bw) == pytest.approx(direct, rel=1e-12)
    assert long_run_variance(x, 0) == pytest.approx(x @ x / n)


def test_single_panel_lag0_matches_direct_computation():
    rng = np.random.default_rng(1)
    y = rng.normal(size=60).cumsum()
    bw = default_bandwidth(60)
    res = llc_test(_panel([y]), lag_override=0)
    dy, ylag = np.diff(y), y[:-1]
    n = dy.size
    delta = ylag @ dy / (ylag @ ylag)
    sigma2 = ((dy - delta * ylag) ** 2).sum() / n
    t = delta / math.sqrt(sigma2 / (ylag @ ylag))
    lrv = sum((1 - abs(L) / (bw + 1)) * (dy[abs(L):] @ dy[: n - abs(L)]) / n for L in range(-bw, bw + 1))
    S = math.sqrt(lrv / sigma2)
    std = math.sqrt(1.0 / (ylag @ ylag / sigma2))
    mu, sd = adjustment(n)
    t_star = (t - n * S * std * mu) / sd
    assert res.t_delta == pytest.approx(t, abs=1e-8)
    assert res.adjusted_t_star == pytest.approx(t_star, abs=1e-8)
    assert res.p_value == pytest.approx(stats.norm.cdf(t_star), abs=1e-12)


def test_scale_and_order_invariance():
    rng = np.random.default_rng(2)
    arrays = [rng.normal(size=55).cumsum() * 0.3 + rng.normal(size=55) for _ in range(6)]
    base = llc_test(_panel(arrays))
    scaled = llc_test(_panel([a * 37.5 for a in arrays]))
    assert scaled.adjusted_t_star == pytest.approx(base.adjusted_t_star, abs=1e-8)
    rev = llc_test(ResidualPanel({f"z{5 - i}": a for i, a in enumerate(arrays)},
                                 {f"z{5 - i}": np.arange(55) for i in range(6)}))
    assert rev.adjusted_t_star == base.adjusted_t_star


def test_short_panels_excluded_and_all_short_fails():
    rng = np.random.default_rng(3)
    res = llc_test(_panel([rng.normal(size=55).cumsum(), rng.normal(size=8)]))
    assert res.panels_used == ("c00",) and res.panels_excluded == ("c01",)
    assert any("excluded" in n for n in res.notes)
    with pytest.raises(UnitRootError, match="no usable panels"):
        llc_test(_panel([rng.normal(size=8)]))


def test_size_and_power_quick():
    rng = np.random.default_rng(4)
    reject_rw = 0
    for _ in range(100):
        reject_rw += llc_test(_panel([rng.normal(size=55).cumsum() for _ in range(12)])).p_value < 0.05
    assert reject_rw <= 15
    for _ in range(20):
        arrays = []
        for _ in range(12):
            e = rng.normal(size=55)
            y = np.zeros(55)
            for t in range(1, 55):
                y[t] = 0.5 * y[t - 1] + e[t]
            arrays.append(y)
        assert llc_test(_panel(arrays)).p_value < 0.01


def test_const_model_runs_and_is_recorded():
    rng = np.random.default_rng(5)
    res = llc_test(_panel([5 + rng.normal(size=55) for _ in range(12)]), lag_override=0, model="const")
    assert res.model == "const" and res.p_value < 0.01
    with pytest.raises(UnitRootError):
        llc_test(_panel([rng.normal(size=55)]), model="trend")


def test_residual_panel_keeps_longest_run():
    keys = [("A", y) for y in (1, 2, 3, 5, 6, 7, 8)] + [("B", y) for y in range(1, 8)]
    X = np.ones((len(keys), 1))
    d = simple_design(X, ["c"])
    d = type(d)(X, d.labels, tuple(keys), tuple(k[0] for k in keys))
    fit = ols_fit(d, np.arange(len(keys), dtype=float))
    panel = residual_panel(fit)
    assert list(panel.years["A"]) == [5, 6, 7, 8]
    assert len(panel.series["B"]) == 7
    assert any("gap" in n for n in panel.notes)
