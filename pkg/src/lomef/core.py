"""Core domain types: series containers, train/test split, validation, RNG.

A :class:`TimeSeries` is a single equally-spaced univariate series together
with the metadata the rest of the package needs (seasonal periods, forecast
horizon, count-data flag).  A :class:`SeriesSet` is the dataset-level
container that global models train on.  Both are immutable: value arrays are
frozen at construction.

Construction is deliberately permissive — structural rules are checked by
:func:`validate`, which reports violations as strings instead of raising, so
a loader can show a user everything that is wrong with a file at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SeriesTooShort

__all__ = [
    "TimeSeries",
    "SeriesSet",
    "SplitSeries",
    "as_float_array",
    "split",
    "validate",
    "derive_rng",
    "child_seed",
]

_SEED_MOD = 2**64


def as_float_array(values, name: str = "values") -> np.ndarray:
    """Coerce ``values`` to a read-only 1-d float64 array.

    Raises ``ValueError`` for inputs that cannot form a 1-d numeric vector.
    Finiteness is *not* enforced here (validation reports it instead).
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """One univariate series plus forecasting metadata.

    ``values`` is the full observed series (conceptually indexed t = 1..T);
    ``seasonal_periods`` is a strictly increasing tuple of cycle lengths
    (empty for non-seasonal data); ``horizon`` is the number of future points
    forecasts must cover; ``is_count_data`` marks integer-valued datasets
    whose final forecasts are rounded.
    """

    id: str
    values: np.ndarray
    seasonal_periods: tuple[int, ...] = ()
    horizon: int = 1
    is_count_data: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", as_float_array(self.values))
        object.__setattr__(
            self, "seasonal_periods", tuple(int(p) for p in self.seasonal_periods)
        )

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SeriesSet:
    """A named collection of series sharing metadata (one dataset)."""

    series: tuple[TimeSeries, ...]
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))

    def __len__(self) -> int:
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    @property
    def horizon(self) -> int:
        return self.series[0].horizon if self.series else 0

    @property
    def seasonal_periods(self) -> tuple[int, ...]:
        return self.series[0].seasonal_periods if self.series else ()

    @property
    def is_count_data(self) -> bool:
        return bool(self.series[0].is_count_data) if self.series else False

    @property
    def minimum(self) -> float:
        """Smallest value across all member series."""
        return float(min(s.values.min() for s in self.series))

    @property
    def non_negative(self) -> bool:
        """True when no series in the set contains a negative value."""
        return self.minimum >= 0.0


@dataclass(frozen=True)
class SplitSeries:
    """A series cut into a training region and a held-out test region.

    ``train`` has length T − horizon, ``test`` has length horizon, and their
    concatenation reproduces the original values.
    """

    series: TimeSeries
    train: np.ndarray = field(repr=False)
    test: np.ndarray = field(repr=False)


def split(series: TimeSeries) -> SplitSeries:
    """Split off the last ``horizon`` points of a series as the test region."""
    h = series.horizon
    if len(series) <= h:
        raise SeriesTooShort(
            f"series {series.id!r}: length {len(series)} leaves no training "
            f"data for horizon {h}"
        )
    return SplitSeries(series=series, train=series.values[:-h], test=series.values[-h:])


def _validate_series(s: TimeSeries, prefix: str) -> list[str]:
    problems: list[str] = []
    if len(s) == 0:
        problems.append(f"{prefix}: values are empty")
        return problems
    if not np.all(np.isfinite(s.values)):
        problems.append(f"{prefix}: values contain NaN or infinity")
    if s.horizon < 1:
        problems.append(f"{prefix}: horizon must be >= 1, got {s.horizon}")
    periods = s.seasonal_periods
    if any(p < 2 for p in periods):
        problems.append(f"{prefix}: seasonal periods must each be >= 2, got {periods}")
    if any(b <= a for a, b in zip(periods, periods[1:])):
        problems.append(
            f"{prefix}: seasonal periods must be strictly increasing, got {periods}"
        )
    if periods and s.horizon >= 1:
        needed = 2 * max(periods) + s.horizon
        if len(s) < needed:
            problems.append(
                f"{prefix}: length {len(s)} < {needed} required for two full "
                f"cycles of period {max(periods)} plus horizon {s.horizon}"
            )
    elif s.horizon >= 1 and len(s) <= s.horizon:
        problems.append(
            f"{prefix}: length {len(s)} leaves no training data for "
            f"horizon {s.horizon}"
        )
    return problems


def validate(data: SeriesSet | TimeSeries) -> list[str]:
    """Check structural invariants; return one message per violation.

    An empty list means the input is valid.  For a :class:`SeriesSet` the
    checks also cover set-level rules: unique ids, and identical seasonal
    periods, horizon and count-data flag across members.
    """
    if isinstance(data, TimeSeries):
        return _validate_series(data, f"series {data.id!r}")

    problems: list[str] = []
    if len(data) == 0:
        return [f"set {data.name!r}: contains no series"]

    seen: set[str] = set()
    for s in data:
        if s.id in seen:
            problems.append(f"set {data.name!r}: duplicate series id {s.id!r}")
        seen.add(s.id)

    first = data.series[0]
    for s in data:
        if s.seasonal_periods != first.seasonal_periods:
            problems.append(
                f"series {s.id!r}: seasonal periods {s.seasonal_periods} differ "
                f"from the set's {first.seasonal_periods}"
            )
        if s.horizon != first.horizon:
            problems.append(
                f"series {s.id!r}: horizon {s.horizon} differs from the "
                f"set's {first.horizon}"
            )
        if s.is_count_data != first.is_count_data:
            problems.append(
                f"series {s.id!r}: count-data flag differs from the set's"
            )
        problems.extend(_validate_series(s, f"series {s.id!r}"))
    return problems


def derive_rng(seed: int, member_index: int = 0) -> np.random.Generator:
    """Deterministic per-member random generator.

    Member ``i`` of a bootstrap neighbourhood draws from the stream seeded
    with ``seed + i`` (mod 2**64), so serial and parallel member generation
    produce identical draws.
    """
    return np.random.default_rng((int(seed) + int(member_index)) % _SEED_MOD)


def child_seed(seed: int, index: int) -> int:
    """Derive an independent child seed (for per-series / per-run streams).

    Uses numpy's SeedSequence spawning, which is deterministic across
    platforms and keeps sibling streams statistically independent even when
    base seeds are small consecutive integers.
    """
    ss = np.random.SeedSequence(entropy=int(seed) % _SEED_MOD, spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
