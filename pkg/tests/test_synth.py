import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_combination_panel, simplex_grid
from oilpanel.panel import get_study
from oilpanel.synth import (
    KKT_TOL, SynthError, SynthProblem, build_predictors, optimize_v, project_simplex,
    solve_weights, synth_gap, synth_study, v_starts,
)


def _objective(X1, X0, v, W):
    R = W @ X0.T - X1
    return (R * R * v).sum(axis=1)


def test_exact_interior_combination_recovered():
    rng = np.random.default_rng(0)
    X0 = rng.normal(size=(6, 4))
    w = np.array([0.1, 0.2, 0.3, 0.4])
    sol = solve_weights(X0 @ w, X0, np.ones(6))
    np.testing.assert_allclose(sol.w, w, atol=1e-7)
    assert sol.objective < 1e-14


def test_treated_equal_to_donor_gives_vertex():
    X0 = np.array([[1.0, 2.0, 5.0], [0.0, 3.0, 1.0]])
    sol = solve_weights(X0[:, 1], X0, np.array([0.5, 0.5]))
    np.testing.assert_allclose(sol.w, [0, 1, 0], atol=1e-9)


def test_matches_grid_enumeration_three_donors():
    rng = np.random.default_rng(1)
    grid = simplex_grid(1e-3)
    for _ in range(10):
        X0 = rng.normal(size=(4, 3))
        X1 = rng.normal(size=4)
        v = rng.uniform(0.1, 1, 4)
        v = v / v.sum()
        sol = solve_weights(X1, X0, v)
        best = _objective(X1, X0, v, grid).min()
        assert sol.objective <= best + 1e-12
        assert best - sol.objective < 2e-3


@settings(max_examples=50, deadline=None)
@given(K=st.integers(1, 6), J=st.integers(2, 8), seed=st.integers(0, 2**31 - 1))
def test_property_simplex_and_kkt(K, J, seed):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(size=(K, J)) * rng.uniform(0.1, 10)
    X1 = rng.normal(size=K) * 3
    v = rng.uniform(0, 1, K) + 1e-3
    sol = solve_weights(X1, X0, v)
    assert abs(sol.w.sum() - 1) < 1e-9 and sol.w.min() >= 0
    assert sol.residual <= KKT_TOL * 10
    vn = v / v.sum()
    vertices = _objective(X1, X0, vn, np.eye(J))
    assert sol.objective <= vertices.min() + 1e-9
    assert sol.objective <= _objective(X1, X0, vn, np.full((1, J), 1 / J))[0] + 1e-9


@pytest.mark.parametrize("bad", [
    dict(X1=np.ones(2), X0=np.ones((2, 1)), v=np.ones(2)),
    dict(X1=np.ones(3), X0=np.ones((2, 3)), v=np.ones(2)),
    dict(X1=np.ones(2), X0=np.ones((2, 3)), v=np.array([1.0, -1.0])),
    dict(X1=np.array([1.0, np.nan]), X0=np.ones((2, 3)), v=np.ones(2)),
])
def test_invalid_inputs(bad):
    with pytest.raises(SynthError):
        solve_weights(**bad)


def test_project_simplex():
    np.testing.assert_allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0, 0.0])), [1, 0, 0])
    p = project_simplex(np.array([0.5, 0.5, 0.5]))
    np.testing.assert_allclose(p, [1 / 3] * 3)


def test_v_starts_are_distinct_simplex_points():
    starts = v_starts(5, 20)
    assert len(starts) == 20
    np.testing.assert_allclose(starts[0], np.full(5, 0.2))
    assert len({tuple(np.round(s, 12)) for s in starts}) == 20
    assert all(abs(s.sum() - 1) < 1e-12 and s.min() >= 0 for s in starts)


def test_v_search_never_worse_than_equal_weights():
    rng = np.random.default_rng(3)
    for _ in range(5):
        K, J, Tp = 4, 6, 12
        Z0 = rng.normal(size=(Tp, J)).cumsum(axis=0)
        Z1 = Z0 @ rng.dirichlet(np.ones(J)) + rng.normal(0, 0.5, Tp)
        X0 = rng.normal(size=(K, J))
        X1 = rng.normal(size=K)
        prob = SynthProblem(X1, X0, tuple(f"d{j}" for j in range(J)),
                            tuple(f"p{k}" for k in range(K)), Z1, Z0)
        res = optimize_v(prob, n_starts=5, maxfev=40)
        assert res.pre_mspe <= res.equal_mspe
        assert res.fallback == (res.start_index is None)
        assert abs(res.v.sum() - 1) < 1e-12


def test_end_to_end_exact_combination():
    ds, study = exact_combination_panel(np.random.default_rng(4))
    res = synth_study(ds, study, "le-total", n_starts=4)
    assert res.weight_of("DA") == pytest.approx(0.3, abs=1e-3)
    assert res.weight_of("DB") == pytest.approx(0.7, abs=1e-3)
    assert res.pre_rmspe < 1e-6
    post = res.years > study.event_year
    np.testing.assert_allclose(res.gap[post], 1.5, atol=1e-6)
    assert not res.poor_overlap


def test_fixture_predictors_note_missing_covariate(fixture_dataset):
    prob = build_predictors(fixture_dataset, get_study("ecuador"))
    assert any("pop-15-64" in n for n in prob.notes)
    assert prob.predictors[0] == "mean log gdp-per-capita"
    assert prob.predictors[-1] == "le-total 1972"
    # rows are scaled to unit cross-unit std
    allx = np.column_stack([prob.X1[:, None], prob.X0])
    np.testing.assert_allclose(allx.std(axis=1, ddof=1), 1.0)


def test_gap_is_nan_where_weighted_donor_missing(fixture_dataset):
    study = get_study("ecuador")
    donors = ("CRI", "CUB")
    years, tr, syn, gap = synth_gap(fixture_dataset, study, "le-total", donors, [0.5, 0.5])
    assert years[0] == 1960 and years[-1] == 2014
    ok = np.isfinite(gap)
    np.testing.assert_allclose(gap[ok], (tr - syn)[ok])
    _, _, syn2, _ = synth_gap(fixture_dataset, study, "le-total", ("CRI", "XXX"), [1.0, 0.0])
    assert np.isfinite(syn2).sum() == np.isfinite(
        fixture_dataset.wide("le-total")["CRI"].reindex(years)).sum()


def test_curve_csv_layout(fixture_dataset):
    res = synth_study(fixture_dataset, get_study("ecuador"), n_starts=2)
    lines = res.curve_csv().splitlines()
    assert lines[0] == "year,treated,synthetic,gap"
    assert len(lines) == 1 + 55
    assert lines[1].split(",")[0] == "1960"
    assert abs(res.weights.sum() - 1) < 1e-9 and res.weights.min() >= 0


def test_too_few_donors():
    ds, study = exact_combination_panel(np.random.default_rng(5))
    with pytest.raises(SynthError, match="donors"):
        synth_study(ds, study.replace(controls=("DA",)))
