import collections

import numpy as np
import pytest

from conftest import END, START, panel_from_wide, sim_study, twfe_panel
from oilpanel.did import (
    ARAB_SPRING_END, DidSpec, PostCollinear, did_estimate, post_column, did_rows, did_table, post_indicator,
)
from oilpanel.event_study import assign_bin, event_study_estimate
from oilpanel.panel import PanelError, get_study


def test_post_is_strictly_after_event_year():
    assert post_indicator(1972, 1972) == 0
    assert post_indicator(1973, 1972) == 1
    assert post_indicator(1971, 1972) == 0


def test_post_column_matches_treated_rows_after_event(fixture_dataset):
    res = did_estimate(fixture_dataset, DidSpec(get_study("ecuador"), "le-total"))
    rows = res.sample.rows
    post = post_column(res.sample)
    assert post.sum() == 2014 - 1972
    assert set(rows.loc[post == 1, "country"]) == {"ECU"}
    assert rows.loc[post == 1, "year"].min() == 1973


def test_identical_treated_and_control_gives_zero_effect():
    study = sim_study(4)
    years = np.arange(START, END + 1)
    g = np.sin(years / 7.0) * 3 + 0.1 * (years - START)
    vals = {c: 50 + i * 2 + g for i, c in enumerate(study.units)}
    vals[study.treated] = vals[study.controls[0]].copy()
    res = did_estimate(panel_from_wide(vals), DidSpec(study, "le-total"))
    assert abs(res.delta) < 1e-8


def test_known_effect_recovered_within_three_se():
    ds, study = twfe_panel(np.random.default_rng(11))
    res = did_estimate(ds, DidSpec(study, "le-total"))
    assert abs(res.delta - 3.0) < 3 * res.se
    assert res.n == 12 * 55


def test_reference_choice_does_not_move_delta(fixture_dataset):
    for sid in ("oman", "denmark", "equatorial-guinea"):
        spec = DidSpec(get_study(sid), "le-total")
        a = did_estimate(fixture_dataset, spec)
        b = did_estimate(fixture_dataset, spec, reverse_reference=True)
        assert abs(a.delta - b.delta) <= 1e-8
        assert a.se == pytest.approx(b.se, rel=1e-8)


def test_all_zero_post_is_unavailable_not_zero(fixture_dataset):
    spec = DidSpec(get_study("ecuador"), "le-total")
    n = did_estimate(fixture_dataset, spec).n
    with pytest.raises(PostCollinear):
        did_estimate(fixture_dataset, spec, post_override=np.zeros(n))


def test_end_year_override_trims_sample(fixture_dataset):
    full = did_estimate(fixture_dataset, DidSpec(get_study("oman"), "le-total"))
    short = did_estimate(fixture_dataset, DidSpec(get_study("oman"), "le-total", ARAB_SPRING_END))
    assert short.sample.rows["year"].max() == ARAB_SPRING_END
    assert short.n < full.n


def test_end_year_before_event_rejected():
    with pytest.raises(PanelError):
        DidSpec(get_study("yemen"), "le-total", 1980)


def test_arab_spring_rows_only_for_three_studies(fixture_dataset):
    rows = did_rows([get_study(s) for s in ("oman", "uk", "yemen", "syria")])
    assert [(s.study_id, v) for s, v, _ in rows] == [
        ("oman", "main"), ("oman", "arab-spring"), ("uk", "main"),
        ("yemen", "main"), ("yemen", "arab-spring"), ("syria", "main"), ("syria", "arab-spring"),
    ]


def test_table_marks_missing_outcome_unavailable(fixture_dataset):
    cells = did_table(fixture_dataset, [get_study("ecuador")], ("le-total", "under5-mortality"))
    by = {c.outcome: c for c in cells}
    assert by["le-total"].available
    assert not by["under5-mortality"].available
    assert "under5-mortality" in by["under5-mortality"].reason


def test_n_recomputed_per_outcome(fixture_dataset):
    cells = did_table(fixture_dataset, [get_study("yemen")], ("le-total", "infant-mortality"))
    ns = {c.outcome: c.result.n for c in cells if c.variant == "main"}
    assert ns["le-total"] != ns["infant-mortality"]


def test_did_matches_bin_weighted_average_in_balanced_noise_free_dgp():
    # Post starts at relative year 1 while the first bin starts at 0; the
    # exact identity is sum_b n_b * delta_b = N_post * delta.
    ds, study = twfe_panel(np.random.default_rng(5), sd=0.0)
    d = did_estimate(ds, DidSpec(study, "le-total"))
    e = event_study_estimate(ds, study, "le-total")
    rel = e.sample.rows.loc[e.sample.rows["treated"] == 1, "relative_year"]
    counts = collections.Counter(assign_bin(r) for r in rel if r >= 0)
    total = sum(counts[b.label] * b.estimate for b in e.bins if b.label.startswith("+"))
    n_post = int((rel > 0).sum())
    assert total == pytest.approx(n_post * d.delta, abs=1e-6)
