"""Static country table: ISO alpha-3 codes, display names and study regions.

Region labels are the group names used for the control pools, kept verbatim.
Southern Europe is its own label so the region-year effects differ across the
two European sub-regions.
"""

from __future__ import annotations

from dataclasses import dataclass

EAST_ASIA = "East Asia"
LATIN_AMERICA = "Latin America and the Caribbean"
MENA = "Middle East and North Africa"
NORTH_EUROPE = "North and Eastern Europe"
SOUTH_EUROPE = "Southern Europe"
SSA = "Sub-Saharan Africa"

REGIONS = (EAST_ASIA, LATIN_AMERICA, MENA, NORTH_EUROPE, SOUTH_EUROPE, SSA)


@dataclass(frozen=True)
class Country:
    code: str
    name: str
    region: str
    # name used by the gapminder snapshot the offline fixture was built from
    snapshot_name: str | None = None


_ROWS = [
    # treated
    ("OMN", "Oman", MENA),
    ("NLD", "Netherlands", NORTH_EUROPE),
    ("SYR", "Syria", MENA),
    ("MYS", "Malaysia", EAST_ASIA),
    ("ECU", "Ecuador", LATIN_AMERICA),
    ("NOR", "Norway", NORTH_EUROPE),
    ("NZL", "New Zealand", NORTH_EUROPE),
    ("GBR", "United Kingdom", NORTH_EUROPE),
    ("DNK", "Denmark", NORTH_EUROPE),
    ("YEM", "Yemen", MENA),
    ("GNQ", "Equatorial Guinea", SSA),
    # East Asia
    ("KHM", "Cambodia", EAST_ASIA),
    ("CHN", "China", EAST_ASIA),
    ("HKG", "Hong Kong", EAST_ASIA, "Hong Kong, China"),
    ("IDN", "Indonesia", EAST_ASIA),
    ("JPN", "Japan", EAST_ASIA),
    ("KOR", "Korea, Republic of", EAST_ASIA, "South Korea"),
    ("LAO", "Laos", EAST_ASIA, "Lao"),
    ("MNG", "Mongolia", EAST_ASIA),
    ("PHL", "Philippines", EAST_ASIA),
    ("SGP", "Singapore", EAST_ASIA),
    ("TWN", "Taiwan", EAST_ASIA),
    ("THA", "Thailand", EAST_ASIA),
    ("VNM", "Vietnam", EAST_ASIA),
    # Latin America and the Caribbean
    ("CRI", "Costa Rica", LATIN_AMERICA),
    ("CUB", "Cuba", LATIN_AMERICA),
    ("DOM", "Dominican Republic", LATIN_AMERICA),
    ("SLV", "El Salvador", LATIN_AMERICA),
    ("GTM", "Guatemala", LATIN_AMERICA),
    ("HND", "Honduras", LATIN_AMERICA),
    ("JAM", "Jamaica", LATIN_AMERICA),
    ("NIC", "Nicaragua", LATIN_AMERICA),
    ("PAN", "Panama", LATIN_AMERICA),
    ("PRY", "Paraguay", LATIN_AMERICA),
    ("PRI", "Puerto Rico", LATIN_AMERICA),
    ("URY", "Uruguay", LATIN_AMERICA),
    # Middle East and North Africa
    ("DJI", "Djibouti", MENA),
    ("EGY", "Egypt", MENA),
    ("ISR", "Israel", MENA),
    ("JOR", "Jordan", MENA),
    ("LBN", "Lebanon", MENA),
    ("MAR", "Morocco", MENA),
    ("TUN", "Tunisia", MENA),
    ("TUR", "Turkey", MENA),
    # Europe
    ("BEL", "Belgium", NORTH_EUROPE),
    ("FIN", "Finland", NORTH_EUROPE),
    ("FRA", "France", NORTH_EUROPE),
    ("DEU", "Germany", NORTH_EUROPE),
    ("IRL", "Ireland", NORTH_EUROPE),
    ("SWE", "Sweden", NORTH_EUROPE),
    ("CHE", "Switzerland", NORTH_EUROPE),
    ("CZE", "Czech Republic", NORTH_EUROPE),
    ("HUN", "Hungary", NORTH_EUROPE),
    ("POL", "Poland", NORTH_EUROPE),
    ("GRC", "Greece", SOUTH_EUROPE),
    ("ITA", "Italy", SOUTH_EUROPE),
    ("PRT", "Portugal", SOUTH_EUROPE),
    ("ESP", "Spain", SOUTH_EUROPE),
    # Sub-Saharan Africa
    ("BEN", "Benin", SSA),
    ("BFA", "Burkina Faso", SSA),
    ("BDI", "Burundi", SSA),
    ("CMR", "Cameroon", SSA),
    ("CPV", "Cape Verde", SSA),
    ("CAF", "Central African Republic", SSA),
    ("TCD", "Chad", SSA),
    ("CIV", "Cote d'Ivoire", SSA),
    ("GMB", "Gambia", SSA),
    ("GHA", "Ghana", SSA),
    ("GIN", "Guinea", SSA),
    ("KEN", "Kenya", SSA),
    ("LSO", "Lesotho", SSA),
    ("LBR", "Liberia", SSA),
    ("MDG", "Madagascar", SSA),
    ("MWI", "Malawi", SSA),
    ("MLI", "Mali", SSA),
    ("MRT", "Mauritania", SSA),
    ("MUS", "Mauritius", SSA),
    ("MOZ", "Mozambique", SSA),
    ("NAM", "Namibia", SSA),
    ("NER", "Niger", SSA),
    ("SEN", "Senegal", SSA),
    ("SOM", "Somalia", SSA),
    ("SDN", "Sudan", SSA),
    ("SWZ", "Swaziland", SSA),
    ("TZA", "Tanzania", SSA),
    ("TGO", "Togo", SSA),
    ("UGA", "Uganda", SSA),
    ("ZMB", "Zambia", SSA),
    ("ZWE", "Zimbabwe", SSA),
    # dropped from the pools for war or HIV/AIDS mortality shocks
    ("RWA", "Rwanda", SSA),
    ("COG", "Republic of Congo", SSA, "Congo, Rep."),
    ("NGA", "Nigeria", SSA),
    ("BWA", "Botswana", SSA),
]

COUNTRIES: dict[str, Country] = {}
for _row in _ROWS:
    _c = Country(*_row)
    COUNTRIES[_c.code] = Country(_c.code, _c.name, _c.region, _c.snapshot_name or _c.name)

EXCLUDED = {
    "KHM": "mortality spike in the 1970s",
    "VNM": "mortality spike in the 1970s",
    "RWA": "life expectancy collapse in the 1980s and 1990s",
    "COG": "civil wars in the 1990s",
    "NGA": "HIV/AIDS mortality",
    "BWA": "HIV/AIDS mortality",
}


def region_of(code: str) -> str:
    try:
        return COUNTRIES[code].region
    except KeyError:
        raise KeyError(f"unknown country code {code!r}") from None


def name_of(code: str) -> str:
    return COUNTRIES[code].name
