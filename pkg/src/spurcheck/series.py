"""Year-indexed series, the unit every analysis works on."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SimulatedSource:
    cls: str
    seed: int


@dataclass(frozen=True)
class CatalogSource:
    dataset: str
    entity: str


@dataclass(frozen=True)
class StudySource:
    measure: str


Source = Union[SimulatedSource, CatalogSource, StudySource]


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class TimeSeries:
    """Immutable pair of strictly increasing integer years and finite values.

    Missing years are simply absent; there are no sentinel values.
    """

    __slots__ = ("id", "years", "values", "source")

    def __init__(self, id, years, values, source=None):
        years = np.asarray(years)
        values = np.asarray(values, dtype=float)
        if years.ndim != 1 or values.ndim != 1:
            raise InputError(f"{id}: years and values must be one-dimensional")
        if len(years) != len(values):
            raise InputError(
                f"{id}: {len(years)} years but {len(values)} values"
            )
        if len(years) < 2:
            raise InputError(f"{id}: a series needs at least 2 observations")
        if years.dtype.kind == "f":
            if not np.all(np.isfinite(years)) or np.any(years != np.round(years)):
                raise InputError(f"{id}: years must be integers")
        elif years.dtype.kind not in "iu":
            raise InputError(f"{id}: years must be integers")
        years = years.astype(np.int64)
        if np.any(np.diff(years) <= 0):
            raise InputError(f"{id}: years must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InputError(f"{id}: values must be finite")
        object.__setattr__(self, "id", str(id))
        object.__setattr__(self, "years", _frozen(years))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "source", source)

    def __setattr__(self, name, value):
        raise AttributeError("TimeSeries is immutable")

    def __reduce__(self):
        return (TimeSeries, (self.id, self.years, self.values, self.source))

    def __len__(self):
        return len(self.years)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.id == other.id
            and self.source == other.source
            and np.array_equal(self.years, other.years)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.id, self.years.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return (
            f"TimeSeries({self.id!r}, n={len(self)}, "
            f"years={self.years[0]}..{self.years[-1]})"
        )

    def restrict(self, years) -> "TimeSeries":
        """Return the sub-series observed on ``years`` (must be a subset)."""
        idx = np.searchsorted(self.years, years)
        if np.any(idx >= len(self.years)) or np.any(self.years[idx] != years):
            raise InputError(f"{self.id}: requested years not all observed")
        return TimeSeries(self.id, self.years[idx], self.values[idx], self.source)

    def with_values(self, values, id=None) -> "TimeSeries":
        return TimeSeries(id or self.id, self.years, values, self.source)

    def is_contiguous(self) -> bool:
        return bool(np.all(np.diff(self.years) == 1))


def common_years(*series: TimeSeries) -> np.ndarray:
    """Sorted intersection of the year sets of all ``series``."""
    years = series[0].years
    for s in series[1:]:
        years = np.intersect1d(years, s.years, assume_unique=True)
    return years
