"""World Bank indicator fetching, the on-disk cache, and dataset assembly.

Cache layout::

    <cache>/<indicator-label>.csv   long format, one file per indicator
    <cache>/manifest.json           per (indicator, country) row counts and hashes

A frozen snapshot ships inside the package (``data/fixture``) so every
computation can run with no network access.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable

import pandas as pd

from . import countries as C
from .indicators import INDICATORS, BY_LABEL, code_for
from .panel import CSV_COLUMNS, END_YEAR, START_YEAR, PanelDataset, _fmt_value

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.worldbank.org/v2"
BASE_URL_ENV = "OILPANEL_WB_API_BASE"
MANIFEST = "manifest.json"


class IngestError(RuntimeError):
    pass


class OfflineError(IngestError):
    pass


@dataclass
class FetchResult:
    code: str
    records: list[tuple[str, int, float | None]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def base_url() -> str:
    return os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL).rstrip("/")


def _get_json(session, url: str, params: dict, attempts: int, backoff: float):
    last: Exception | None = None
    for attempt in range(attempts):
        try:
            resp = session.get(url, params=params, timeout=30)
            resp.raise_for_status()
            try:
                return resp.json()
            except ValueError as exc:
                raise IngestError(f"malformed JSON from {url}") from exc
        except IngestError:
            raise
        except Exception as exc:  # connection errors, HTTP status errors
            last = exc
            if attempt + 1 < attempts:
                time.sleep(backoff * 2**attempt)
    if _is_connection_error(last):
        raise OfflineError(
            f"cannot reach {url} ({last}); run offline against the bundled "
            "fixture with --offline"
        ) from last
    raise IngestError(f"request to {url} failed after {attempts} attempts: {last}") from last


def _is_connection_error(exc) -> bool:
    try:
        import requests
    except ImportError:  # pragma: no cover
        return False
    return isinstance(exc, (requests.ConnectionError, requests.Timeout))


def _api_message(payload) -> str | None:
    if isinstance(payload, list) and payload and isinstance(payload[0], dict):
        msg = payload[0].get("message")
        if msg:
            return "; ".join(str(m.get("value", m)) for m in msg)
    if isinstance(payload, dict) and "message" in payload:
        return str(payload["message"])
    return None


def _fetch_pages(session, url, params, attempts, backoff):
    records = []
    page = 1
    while True:
        payload = _get_json(session, url, {**params, "page": page}, attempts, backoff)
        msg = _api_message(payload)
        if msg is not None:
            return None, msg
        if not (isinstance(payload, list) and len(payload) == 2):
            raise IngestError(f"unexpected payload shape from {url}")
        meta, rows = payload
        for row in rows or []:
            iso = row.get("countryiso3code") or row.get("country", {}).get("id")
            year = int(row["date"])
            value = row.get("value")
            records.append((iso, year, None if value is None else float(value)))
        pages = int(meta.get("pages", 1) or 1)
        if page >= pages:
            return records, None
        page += 1


def fetch_indicator(
    code: str,
    countries: Iterable[str],
    year_range: tuple[int, int] = (START_YEAR, END_YEAR),
    *,
    session=None,
    per_page: int = 1000,
    attempts: int = 3,
    backoff: float = 0.5,
) -> FetchResult:
    """Fetch one indicator for the given ISO3 codes through the v2 JSON API.

    Unknown or rejected country codes produce a note and no records rather
    than failing the whole request.  Null values are kept as missing.
    """
    if session is None:
        import requests

        session = requests.Session()
    result = FetchResult(code)
    wanted = []
    for c in countries:
        if c in C.COUNTRIES:
            wanted.append(c)
        else:
            result.notes.append(f"{code}: unknown country code {c!r}, skipped")
    if not wanted:
        return result
    lo, hi = year_range
    params = {"format": "json", "per_page": per_page, "date": f"{lo}:{hi}"}

    def url_for(codes):
        return f"{base_url()}/country/{';'.join(codes)}/indicator/{code}"

    records, msg = _fetch_pages(session, url_for(wanted), params, attempts, backoff)
    if msg is not None:
        # one bad code poisons a batched request; retry country by country
        records = []
        for c in wanted:
            rows, msg = _fetch_pages(session, url_for([c]), params, attempts, backoff)
            if msg is not None:
                result.notes.append(f"{code}: {c} rejected by provider ({msg})")
                continue
            records.extend(rows)
    keep = set(wanted)
    for iso, year, value in records:
        if iso in keep and lo <= year <= hi:
            result.records.append((iso, year, value))
    present = {r[0] for r in result.records}
    for c in wanted:
        if c not in present:
            result.notes.append(f"{code}: no records for {c}")
    result.records.sort()
    return result


# -- cache -----------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def indicator_csv(label: str, records: Iterable[tuple[str, int, float | None]]) -> str:
    """Canonical long-format CSV text for one indicator's records."""
    lines = [",".join(CSV_COLUMNS)]
    for iso, year, value in sorted(records, key=lambda r: (r[0], r[1])):
        lines.append(f"{iso},{_csv_field(C.region_of(iso))},{year},{label},{_fmt_value(value)}")
    return "\n".join(lines) + "\n"


def _csv_field(s: str) -> str:
    return f'"{s}"' if ("," in s or '"' in s) else s


class Cache:
    """Directory of per-indicator CSV files plus ``manifest.json``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, label: str) -> Path:
        return self.root / f"{label}.csv"

    def manifest(self) -> dict:
        p = self.root / MANIFEST
        if not p.exists():
            return {"indicators": {}}
        return json.loads(p.read_text(encoding="utf-8"))

    def has(self, label: str) -> bool:
        return self.path(label).exists()

    def write(
        self,
        label: str,
        records: list[tuple[str, int, float | None]],
        *,
        fetched_at: str | None = None,
        source: str | None = None,
    ) -> str:
        text = indicator_csv(label, records)
        _atomic_write(self.path(label), text)
        fetched_at = fetched_at or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        per_country: dict[str, list[str]] = {}
        for line in text.splitlines()[1:]:
            per_country.setdefault(line.split(",", 1)[0], []).append(line)
        entry = {
            "code": code_for(label),
            "file": self.path(label).name,
            "sha256": _sha256(text),
            "rows": len(records),
            "countries": {
                c: {
                    "fetched_at": fetched_at,
                    "rows": len(lines),
                    "non_missing": sum(1 for ln in lines if not ln.endswith(",")),
                    "sha256": _sha256("\n".join(lines) + "\n"),
                }
                for c, lines in sorted(per_country.items())
            },
        }
        if source:
            entry["source"] = source
        manifest = self.manifest()
        manifest.setdefault("indicators", {})[label] = entry
        _atomic_write(
            self.root / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        return entry["sha256"]

    def verify(self) -> list[str]:
        """Labels whose file content no longer matches the manifest hash."""
        bad = []
        for label, entry in self.manifest().get("indicators", {}).items():
            p = self.path(label)
            if not p.exists() or _sha256(p.read_text(encoding="utf-8")) != entry["sha256"]:
                bad.append(label)
        return bad


def fixture_dir() -> Path:
    return Path(str(resources.files("oilpanel") / "data" / "fixture"))


def fetch_all(
    cache_dir: str | Path,
    *,
    refresh: bool = False,
    labels: Iterable[str] | None = None,
    session=None,
    gdp_code: str | None = None,
) -> list[str]:
    """Fill the cache for every indicator; returns accumulated notes."""
    cache = Cache(cache_dir)
    notes: list[str] = []
    codes = sorted(C.COUNTRIES)
    for spec in INDICATORS:
        if labels is not None and spec.label not in labels:
            continue
        if cache.has(spec.label) and not refresh:
            continue
        code = gdp_code if (spec.label == "gdp-per-capita" and gdp_code) else spec.code
        res = fetch_indicator(code, codes, session=session)
        notes.extend(res.notes)
        cache.write(spec.label, res.records, source=f"{base_url()} {code}")
        log.info("cached %s (%d records)", spec.label, len(res.records))
    return notes


def build_dataset(cache_dir: str | Path | None = None) -> PanelDataset:
    """Merge every cached indicator into one validated :class:`PanelDataset`."""
    root = Path(cache_dir) if cache_dir is not None else fixture_dir()
    frames = []
    for spec in INDICATORS:
        p = root / f"{spec.label}.csv"
        if not p.exists():
            raise IngestError(f"cache {root} is missing indicator file {p.name}")
        frames.append(
            pd.read_csv(
                p,
                dtype={"country": str, "region": str, "indicator": str},
                keep_default_na=False,
                na_values={"value": [""]},
                float_precision="round_trip",
            )
        )
    df = pd.concat(frames, ignore_index=True)
    unknown = sorted(set(df["indicator"]) - set(BY_LABEL))
    if unknown:
        raise IngestError(f"unknown indicator labels in cache: {unknown}")
    # region labels always come from the static table
    df["region"] = df["country"].map(C.region_of)
    return PanelDataset.from_frame(df)
