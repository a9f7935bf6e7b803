from oilpanel.tables import Table, fmt


def test_fmt():
    assert fmt(3.37549) == "3.375"
    assert fmt(-0.0001) == "0.000"
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(0.12345, 4) == "0.1235"


def test_table_csv_and_text(tmp_path):
    t = Table(("study", "estimate"), title="T")
    t.add("ecuador", "3.375")
    t.add("equatorial-guinea", "-1.000")
    assert t.to_csv() == "study,estimate\necuador,3.375\nequatorial-guinea,-1.000\n"
    text = t.to_text().splitlines()
    assert text[0] == "T"
    assert text[2].startswith("-----------------  ")
    assert text[3].index("3.375") == text[4].index("-1.000")
    paths = t.write(tmp_path / "x.csv")
    assert [p.name for p in paths] == ["x.csv", "x.txt"]
