"""Rebuild the bundled offline fixture from the dslabs gapminder table.

The table (yearly, 1960-2016) is distributed with the ``rdatasets`` package
and derives its infant-mortality, GDP and population columns from the World
Development Indicators.  It carries no sex-specific life expectancy, no
under-5 or adult mortality and no age-structure series; those indicators are
written as explicit missing values.

    pip install rdatasets
    python scripts/build_fixture.py [--out src/oilpanel/data/fixture]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import rdatasets

from oilpanel import countries as C
from oilpanel.indicators import INDICATORS
from oilpanel.ingest import Cache

SNAPSHOT_DATE = "2017-01-01T00:00:00Z"
SOURCE = "rdatasets dslabs/gapminder"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/oilpanel/data/fixture"))
    args = ap.parse_args(argv)

    df = rdatasets.data("dslabs", "gapminder")
    df = df[(df.year >= 1960) & (df.year <= 2014)]
    by_name = {c.snapshot_name: c.code for c in C.COUNTRIES.values()}
    df = df[df.country.isin(by_name)].copy()
    df["iso"] = df.country.map(by_name)
    df["gdp_pc"] = df.gdp / df.population

    columns = {
        "le-total": "life_expectancy",
        "infant-mortality": "infant_mortality",
        "gdp-per-capita": "gdp_pc",
    }
    present = sorted(df.iso.unique())
    years = range(1960, 2015)
    cache = Cache(args.out)
    for spec in INDICATORS:
        col = columns.get(spec.label)
        records = []
        if col is None:
            for iso in present:
                records.extend((iso, y, None) for y in years)
            source = f"{SOURCE} (indicator not in snapshot; all values missing)"
        else:
            for row in df.itertuples():
                v = getattr(row, col)
                records.append((row.iso, int(row.year), None if v is None or math.isnan(v) else float(v)))
            source = SOURCE
        cache.write(spec.label, records, fetched_at=SNAPSHOT_DATE, source=source)
    absent = sorted(set(C.COUNTRIES) - set(present))
    print(f"wrote {len(INDICATORS)} indicator files to {args.out}")
    print(f"countries absent from the snapshot: {absent}")


if __name__ == "__main__":
    main()
