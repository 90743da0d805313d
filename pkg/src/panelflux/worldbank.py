"""World Bank Indicators API (v2) client writing the panel CSV schema."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from pathlib import Path
from typing import Sequence

import requests

from .errors import FetchError
from .panel import CSV_HEADER

log = logging.getLogger(__name__)

API_ROOT = "https://api.worldbank.org/v2"
PER_PAGE = 1000
ATTEMPTS = 3
CACHE_ENV = "PANELFLUX_CACHE"


def cache_dir(path=None) -> Path:
    if path is not None:
        return Path(path)
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "panelflux"))


def indicator_url(countries: Sequence[str], indicator: str, start: int, end: int, page: int = 1) -> str:
    codes = ";".join(countries)
    return (
        f"{API_ROOT}/country/{codes}/indicator/{indicator}"
        f"?format=json&per_page={PER_PAGE}&date={start}:{end}&page={page}"
    )


def _get(session, url: str, backoff: float) -> str:
    last = None
    for attempt in range(ATTEMPTS):
        try:
            resp = session.get(url, timeout=30)
            if resp.status_code == 200:
                return resp.text
            last = f"HTTP {resp.status_code}"
        except requests.RequestException as exc:
            last = str(exc)
        if attempt < ATTEMPTS - 1:
            delay = backoff * 2 ** attempt
            log.warning("GET %s failed (%s); retrying in %.1fs", url, last, delay)
            time.sleep(delay)
    raise FetchError(f"GET {url} failed after {ATTEMPTS} attempts: {last}")


def _parse_page(text: str, url: str) -> tuple[dict, list]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise FetchError(f"malformed JSON from {url} at byte offset {offset}: {exc.msg}") from None
    if isinstance(doc, list) and doc and isinstance(doc[0], dict) and "message" in doc[0]:
        msgs = "; ".join(m.get("value", "") for m in doc[0]["message"])
        raise FetchError(f"World Bank API error for {url}: {msgs}")
    if not (isinstance(doc, list) and len(doc) == 2 and isinstance(doc[0], dict)):
        raise FetchError(f"unexpected response layout from {url}")
    return doc[0], doc[1] or []


def fetch_worldbank(countries: Sequence[str], indicator: str, start: int, end: int,
                    cache=None, refresh: bool = False, label: str | None = None,
                    session=None, backoff: float = 1.0) -> Path:
    """Download one indicator for several countries into a cached annual CSV.

    Rows use ``label`` (default: the indicator id) in the ``indicator`` column.
    An existing cache file is returned untouched unless ``refresh`` is set.
    """
    countries = [c.upper() for c in countries]
    label = label or indicator
    target = cache_dir(cache) / f"wb_{indicator}_{'-'.join(countries)}_{start}_{end}_{label}.csv"
    if target.exists() and not refresh:
        log.info("cache hit: %s", target)
        return target
    session = session or requests.Session()
    rows: dict[tuple[str, int], float] = {}
    page, pages = 1, 1
    while page <= pages:
        url = indicator_url(countries, indicator, start, end, page)
        meta, data = _parse_page(_get(session, url, backoff), url)
        pages = int(meta.get("pages") or 0)
        for rec in data:
            code = rec.get("countryiso3code") or (rec.get("country") or {}).get("id", "")
            if rec.get("value") is None or not code:
                continue
            rows[(code.upper(), int(rec["date"]))] = float(rec["value"])
        page += 1
    if not rows:
        raise FetchError(f"no data for indicator {indicator} and countries {', '.join(countries)}")
    missing = [c for c in countries if not any(k[0] == c for k in rows)]
    if missing:
        raise FetchError(f"indicator {indicator}: no observations for {', '.join(missing)}")
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for code in countries:
            for year in sorted(y for c, y in rows if c == code):
                w.writerow([code, year, "", label, repr(rows[(code, year)])])
    tmp.replace(target)
    return target
