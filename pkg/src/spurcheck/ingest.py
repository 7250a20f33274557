"""Loading of study bundles and long-format catalog exports.

Catalog CSVs follow the layout Our World in Data ships: one row per
(entity, year) with columns such as ``Entity, Code, Year, <value>``. A
combined dump adds a ``Dataset`` column so many datasets fit in one file.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, TextIO, Tuple

import numpy as np

from .errors import AlignmentError, FormatError, InputError, SchemaError
from .series import CatalogSource, StudySource, TimeSeries

log = logging.getLogger(__name__)

DEFAULT_MIN_OVERLAP = 10
MAX_BRIDGE_GAP = 2

CONVERGENT = (
    "religiosity",
    "congress_laws",
    "supreme_court_cases",
    "execution_rates",
    "profanity",
)
CREATIVITY_ORDER = (
    "patent_rates",
    "trademark_rates",
    "feature_films",
    "baby_naming_conformity",
    "household_debt",
    "adolescent_pregnancy",
    "crimes",
    "high_school_enrolment",
)
COVARIATES = ("collectivism", "wealth")
STUDY_COLUMNS = ("tightness",) + CONVERGENT + CREATIVITY_ORDER + COVARIATES

LABELS = {
    "tightness": "Cultural tightness",
    "religiosity": "Religiosity",
    "congress_laws": "Laws passed by Congress",
    "supreme_court_cases": "Supreme Court cases",
    "execution_rates": "Execution rates",
    "profanity": "Profanity on television",
    "patent_rates": "Patent rates",
    "trademark_rates": "Trademark rates",
    "feature_films": "Feature film production",
    "baby_naming_conformity": "Baby-naming conformity",
    "household_debt": "Household debt rates",
    "adolescent_pregnancy": "Adolescent pregnancy rates",
    "crimes": "Crimes",
    "high_school_enrolment": "High school enrolment",
    "collectivism": "Collectivism",
    "wealth": "Wealth",
}

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INTEGER = re.compile(r"^[+-]?\d+$")


def parse_number(text):
    """Decimal-point float or None; thousands separators and commas are rejected."""
    text = text.strip()
    if not _NUMBER.match(text):
        return None
    v = float(text)
    return v if math.isfinite(v) else None


@dataclass(frozen=True)
class CatalogSchema:
    """Column mapping for a long-format CSV.

    Exactly one of ``dataset`` (a constant name for the whole file) or
    ``dataset_col`` must be given. ``value_col=None`` picks the single
    column that is not a key column (``Code`` is ignored).
    """

    dataset: Optional[str] = None
    dataset_col: Optional[str] = None
    entity_col: str = "Entity"
    year_col: str = "Year"
    value_col: Optional[str] = None
    ignore: Tuple[str, ...] = ("Code",)


@dataclass
class Catalog:
    entries: Dict[Tuple[str, str], TimeSeries]
    provenance: Dict[str, str] = field(default_factory=dict, compare=False)
    skipped_rows: int = field(default=0, compare=False)
    rejected: Dict[Tuple[str, str], str] = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.entries)

    def datasets(self):
        return sorted({k[0] for k in self.entries})

    def dataset(self, name) -> Dict[str, TimeSeries]:
        return {e: s for (d, e), s in self.entries.items() if d == name}

    def merge(self, other: "Catalog") -> "Catalog":
        dup = set(self.entries) & set(other.entries)
        if dup:
            raise InputError(f"duplicate catalog keys: {sorted(dup)[:3]}")
        prov = {**self.provenance, **other.provenance}
        return Catalog({**self.entries, **other.entries}, prov,
                       self.skipped_rows + other.skipped_rows,
                       {**self.rejected, **other.rejected})


def load_catalog(stream: TextIO, schema: CatalogSchema,
                 provenance: Mapping[str, str] | None = None) -> Catalog:
    """Parse a long-format CSV into one series per (dataset, entity).

    Rows with empty or non-numeric values are skipped and counted. An
    entity with a repeated year is rejected as a whole and logged.
    """
    if (schema.dataset is None) == (schema.dataset_col is None):
        raise SchemaError("give exactly one of dataset or dataset_col")
    try:
        reader = csv.reader(stream, strict=True)
        header = next(reader, None)
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(f"unreadable CSV: {exc}") from exc
    if not header:
        raise FormatError("empty CSV: header row required")
    header = [h.strip().lstrip("﻿") for h in header]
    keys = [schema.entity_col, schema.year_col] + ([schema.dataset_col] if schema.dataset_col else [])
    value_col = schema.value_col
    if value_col is None:
        rest = [h for h in header if h not in keys and h not in schema.ignore]
        if len(rest) != 1:
            raise SchemaError(f"cannot infer the value column from {header}")
        value_col = rest[0]
    missing = [c for c in keys + [value_col] if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    ie, iy, iv = header.index(schema.entity_col), header.index(schema.year_col), header.index(value_col)
    idd = header.index(schema.dataset_col) if schema.dataset_col else None

    rows: Dict[Tuple[str, str], Dict[int, float]] = {}
    bad: Dict[Tuple[str, str], str] = {}
    skipped = 0
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"line {lineno}: {len(row)} fields, expected {len(header)}")
            dataset = row[idd] if idd is not None else schema.dataset
            key = (dataset, row[ie])
            year_text = row[iy].strip()
            value = parse_number(row[iv])
            if not _INTEGER.match(year_text) or value is None:
                skipped += 1
                continue
            year = int(year_text)
            series = rows.setdefault(key, {})
            if year in series:
                bad[key] = f"duplicate year {year}"
            series[year] = value
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(f"unreadable CSV: {exc}") from exc

    entries = {}
    for key, data in rows.items():
        if key in bad:
            continue
        if len(data) < 2:
            bad[key] = "fewer than 2 observations"
            continue
        years = np.array(sorted(data), dtype=np.int64)
        values = np.array([data[y] for y in years])
        entries[key] = TimeSeries(f"{key[0]}/{key[1]}", years, values, CatalogSource(*key))
    for key, why in bad.items():
        log.warning("rejected %s/%s: %s", key[0], key[1], why)
    if skipped:
        log.warning("skipped %d rows with missing or non-numeric values", skipped)
    return Catalog(entries, dict(provenance or {}), skipped, bad)


def dump_catalog(catalog: Catalog, stream: TextIO) -> None:
    """Write every entry as ``Dataset, Entity, Year, Value`` rows."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["Dataset", "Entity", "Year", "Value"])
    for (dataset, entity) in sorted(catalog.entries):
        s = catalog.entries[(dataset, entity)]
        for y, v in zip(s.years, s.values):
            w.writerow([dataset, entity, int(y), repr(float(v))])


DUMP_SCHEMA = CatalogSchema(dataset_col="Dataset", value_col="Value")


def catalog_manifest(catalog: Catalog) -> dict:
    """Inventory: per-dataset entity counts and year ranges plus provenance."""
    out = {}
    for name in catalog.datasets():
        series = catalog.dataset(name)
        out[name] = {
            "entities": len(series),
            "first_year": int(min(s.years[0] for s in series.values())),
            "last_year": int(max(s.years[-1] for s in series.values())),
            "observations": int(sum(len(s) for s in series.values())),
        }
    return {
        "datasets": out,
        "series": len(catalog),
        "skipped_rows": catalog.skipped_rows,
        "rejected": len(catalog.rejected),
        "provenance": dict(catalog.provenance),
    }


@dataclass(frozen=True)
class StudyBundle:
    tightness: TimeSeries
    convergent: Dict[str, TimeSeries]
    creativity_order: Dict[str, TimeSeries]
    covariates: Dict[str, TimeSeries]

    def measure(self, name) -> TimeSeries:
        for group in (self.convergent, self.creativity_order, self.covariates):
            if name in group:
                return group[name]
        if name == "tightness":
            return self.tightness
        raise InputError(f"unknown measure {name!r}")


def _read_columns(stream, required, year_col="year"):
    try:
        reader = csv.DictReader(stream, strict=True)
        fields = [f.strip().lstrip("﻿") for f in (reader.fieldnames or [])]
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(f"unreadable CSV: {exc}") from exc
    if not fields:
        raise FormatError("empty CSV: header row required")
    reader.fieldnames = fields
    for col in [year_col, *required]:
        if col not in fields:
            raise SchemaError(f"missing column: {col}")
    data = {c: ([], []) for c in fields if c != year_col}
    try:
        for row in reader:
            year_text = (row[year_col] or "").strip()
            if not _INTEGER.match(year_text):
                raise FormatError(f"bad year {year_text!r}")
            year = int(year_text)
            for c in data:
                v = parse_number(row[c] or "")
                if v is not None:
                    data[c][0].append(year)
                    data[c][1].append(v)
    except csv.Error as exc:
        raise FormatError(f"unreadable CSV: {exc}") from exc
    return data


def _study_series(name, years, values):
    order = np.argsort(years, kind="stable")
    return TimeSeries(name, np.asarray(years)[order], np.asarray(values)[order], StudySource(name))


def load_study(stream: TextIO) -> StudyBundle:
    """Read a wide CSV: ``year`` plus one column per study measure.

    Empty cells are missing years and are dropped per series.
    """
    data = _read_columns(stream, STUDY_COLUMNS)
    series = {}
    for name in STUDY_COLUMNS:
        years, values = data[name]
        if len(years) < 2:
            raise SchemaError(f"column {name} has fewer than 2 observations")
        series[name] = _study_series(name, years, values)
    return StudyBundle(
        tightness=series["tightness"],
        convergent={k: series[k] for k in CONVERGENT},
        creativity_order={k: series[k] for k in CREATIVITY_ORDER},
        covariates={k: series[k] for k in COVARIATES},
    )


def load_series_csv(stream: TextIO, column: str | None = None) -> TimeSeries:
    """A single series from a ``year,<value>`` CSV (or one column of a wide one)."""
    data = _read_columns(stream, [column] if column else [])
    if column is None:
        if len(data) != 1:
            raise SchemaError(f"expected one value column, found {sorted(data)}")
        column = next(iter(data))
    years, values = data[column]
    return _study_series(column, years, values)


@dataclass(frozen=True)
class Aligned:
    years: np.ndarray
    a: np.ndarray
    b: np.ndarray


def align(a: TimeSeries, b: TimeSeries, min_overlap: int = DEFAULT_MIN_OVERLAP) -> Aligned:
    """Pair two series over their common years."""
    if min_overlap < 3:
        raise InputError("min_overlap must be at least 3")
    years, ia, ib = np.intersect1d(a.years, b.years, assume_unique=True, return_indices=True)
    if len(years) < min_overlap:
        raise AlignmentError(
            f"{a.id} and {b.id} share {len(years)} years, need {min_overlap}"
        )
    return Aligned(years, a.values[ia], b.values[ib])


def bridge_gaps(s: TimeSeries, max_gap: int = MAX_BRIDGE_GAP):
    """Fill short interior gaps by linear interpolation.

    Returns the contiguous series and the list of filled years. A run of
    more than ``max_gap`` missing years raises AlignmentError.
    """
    gaps = np.diff(s.years) - 1
    if np.any(gaps > max_gap):
        i = int(np.argmax(gaps > max_gap))
        raise AlignmentError(
            f"{s.id}: {int(gaps[i])} missing years after {int(s.years[i])}, more than {max_gap}"
        )
    if not np.any(gaps):
        return s, []
    full = np.arange(s.years[0], s.years[-1] + 1)
    filled = sorted(set(full.tolist()) - set(s.years.tolist()))
    values = np.interp(full, s.years, s.values)
    log.info("%s: bridged years %s", s.id, filled)
    return TimeSeries(s.id, full, values, s.source), filled


def read_text(path) -> io.StringIO:
    with open(path, encoding="utf-8", newline="") as fh:
        return io.StringIO(fh.read())


def load_catalog_dir(path, schema: CatalogSchema | None = None) -> Catalog:
    """Load every ``*.csv`` in ``path`` as one dataset named after the file stem."""
    path = Path(path)
    files = sorted(path.glob("*.csv"))
    if not files:
        raise InputError(f"no CSV files in {path}")
    catalog = Catalog({})
    for f in files:
        sch = replace(schema or CatalogSchema(), dataset=f.stem, dataset_col=None)
        catalog = catalog.merge(load_catalog(read_text(f), sch, {f.stem: str(f)}))
    return catalog
