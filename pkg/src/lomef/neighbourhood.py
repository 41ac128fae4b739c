"""Neighbourhood generation around one series, as seen by the global model.

A *neighbourhood* is a small set of series that are plausible variants of the
series being explained, together with the global model's in-sample one-step
fit on each variant.  Local surrogate models are trained on those fits, so
they imitate what the global model does in the vicinity of the series rather
than the raw data itself.

Three generators:

- ``nf``     — no bootstrap; the single member is the global model's
               one-step fit on the training region itself;
- ``nstl``   — decompose the training region (seasonal-trend decomposition
               with a periodic seasonal), moving-block-bootstrap the
               remainder, re-add trend and seasonality;
- ``nsieve`` — fit an autoregressive sieve, moving-block-bootstrap its
               residuals, regenerate series through the AR recursion.

Determinism: member i of any bootstrap neighbourhood draws from the RNG
stream ``seed + i``, so members can be generated serially or in parallel
with identical results.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._linreg import fit_linear, gaussian_aic
from .core import as_float_array, derive_rng
from .exceptions import InvalidBlockLength, PeriodTooLong, SeriesTooShort, UnstableSieve

__all__ = [
    "NeighbourhoodMethod",
    "Neighbourhood",
    "STLComponents",
    "SieveModel",
    "loess_smooth",
    "stl_decompose",
    "mstl_decompose",
    "mbb",
    "fit_sieve",
    "default_block_length",
    "nf_neighbourhood",
    "nstl_neighbourhood",
    "nsieve_neighbourhood",
]

# Regenerated sieve members whose magnitude exceeds this multiple of the
# source series' scale are treated as explosive.
_SIEVE_BLOWUP_FACTOR = 1e6


class NeighbourhoodMethod(str, enum.Enum):
    NF = "nf"
    NSTL = "nstl"
    NSIEVE = "nsieve"


@dataclass(frozen=True)
class Neighbourhood:
    """Bootstrapped variants of one series plus the global model's fit on each.

    ``members[i]`` is a generated series on the original scale;
    ``member_fits[i]`` is the global model's one-step-ahead in-sample fit on
    that member (the series surrogates actually train on).  Under ``nf`` the
    single member *is* the fit itself.
    """

    method: NeighbourhoodMethod
    source_id: str
    seed: int
    members: tuple[np.ndarray, ...]
    member_fits: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.members)


# ---------------------------------------------------------------------------
# seasonal-trend decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class STLComponents:
    """Additive decomposition: values = trend + sum(seasonal) + remainder.

    ``seasonal`` holds one full-length component per period (possibly empty
    for a trend-only decomposition); each component is exactly periodic and
    sums to ~0 over any full cycle.  The remainder is stored as the literal
    difference, so the additive identity holds to float precision.
    """

    periods: tuple[int, ...]
    trend: np.ndarray
    seasonal: tuple[np.ndarray, ...]
    remainder: np.ndarray

    @property
    def seasonally_adjusted(self) -> np.ndarray:
        return self.trend + self.remainder


def _next_odd(x: int) -> int:
    x = max(int(x), 3)
    return x if x % 2 == 1 else x + 1


def loess_smooth(values, span: int) -> np.ndarray:
    """Degree-1 loess: local linear fits under tricube distance weights.

    ``span`` is the window width in points (odd; clamped to the series
    length).  Exactly reproduces any globally linear series, including at
    the boundaries where windows become one-sided.
    """
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    span = min(span, n)
    half = span // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - span)
        x = np.arange(lo, lo + span, dtype=float) - i
        window = y[lo : lo + span]
        # scale distances slightly past the window edge so the extreme
        # points keep a small positive weight and the local system stays
        # nonsingular for any span >= 2
        dmax = np.abs(x).max() * 1.001 if span > 1 else 1.0
        w = (1.0 - (np.abs(x) / dmax) ** 3) ** 3
        sw = w.sum()
        swx = (w * x).sum()
        swx2 = (w * x * x).sum()
        swy = (w * window).sum()
        swxy = (w * x * window).sum()
        det = sw * swx2 - swx * swx
        if abs(det) < 1e-12 * max(sw * swx2, 1.0):
            out[i] = swy / sw
        else:
            out[i] = (swx2 * swy - swx * swxy) / det
    return out


def _periodic_seasonal(detrended: np.ndarray, period: int) -> np.ndarray:
    """Seasonal sub-series means, centred to sum to zero over a cycle."""
    n = detrended.shape[0]
    means = np.array([detrended[p::period].mean() for p in range(period)])
    means -= means.mean()
    return np.tile(means, n // period + 1)[:n]


def stl_decompose(values, period: int, inner_iterations: int = 2) -> STLComponents:
    """Additive seasonal-trend decomposition with a periodic seasonal.

    The seasonal component is the centred sub-series means of the detrended
    series (so it is exactly periodic); the trend is a degree-1 loess of the
    deseasonalised series with span = next odd integer >= 1.5 x period.  Two
    refinement iterations, no robustness loop.
    """
    y = as_float_array(values)
    n = y.shape[0]
    period = int(period)
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if n < 2 * period:
        raise PeriodTooLong(
            f"series length {n} < two full cycles of period {period}"
        )
    span = _next_odd(math.ceil(1.5 * period))
    trend = loess_smooth(y, span)
    seasonal = np.zeros(n)
    for _ in range(inner_iterations):
        seasonal = _periodic_seasonal(y - trend, period)
        trend = loess_smooth(y - seasonal, span)
    remainder = y - trend - seasonal
    return STLComponents(
        periods=(period,), trend=trend, seasonal=(seasonal,), remainder=remainder
    )


def mstl_decompose(values, periods) -> STLComponents:
    """Multi-seasonal extension; handles the no-period (trend only) case.

    Seasonal components are extracted shortest-period-first, each one by a
    full STL pass on the series with the *other* seasonal components
    removed; two refinement passes over all periods.
    """
    y = as_float_array(values)
    n = y.shape[0]
    periods = tuple(sorted(int(p) for p in periods))

    if not periods:
        trend = loess_smooth(y, _next_odd(n // 4))
        return STLComponents(
            periods=(), trend=trend, seasonal=(), remainder=y - trend
        )
    if len(periods) == 1:
        return stl_decompose(y, periods[0])

    if n < 2 * max(periods):
        raise PeriodTooLong(
            f"series length {n} < two full cycles of period {max(periods)}"
        )
    seasonal = {p: np.zeros(n) for p in periods}
    trend = np.zeros(n)
    for _ in range(2):
        for p in periods:
            others = sum(seasonal[q] for q in periods if q != p)
            comp = stl_decompose(y - others, p)
            seasonal[p] = comp.seasonal[0]
            trend = comp.trend
    total = sum(seasonal[p] for p in periods)
    return STLComponents(
        periods=periods,
        trend=trend,
        seasonal=tuple(seasonal[p] for p in periods),
        remainder=y - trend - total,
    )


# ---------------------------------------------------------------------------
# moving block bootstrap
# ---------------------------------------------------------------------------


def mbb(values, block_length: int, rng: np.random.Generator) -> np.ndarray:
    """Moving-block bootstrap draw of the same length as the input.

    Draws ``floor(T / l) + 2`` blocks of length ``l`` with uniformly random
    start positions, concatenates them, drops a uniformly random offset in
    ``0..l-1`` from the front and truncates to length T.  RNG draw order is
    fixed (all block starts first, then the offset), so a seeded generator
    reproduces the draw exactly.
    """
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    length = int(block_length)
    if not 1 <= length <= n:
        raise InvalidBlockLength(f"block length {length} outside 1..{n}")
    n_blocks = n // length + 2
    starts = rng.integers(0, n - length + 1, size=n_blocks)
    pooled = np.concatenate([y[s : s + length] for s in starts])
    offset = int(rng.integers(0, length))
    return pooled[offset : offset + n]


def default_block_length(length: int, periods: tuple[int, ...]) -> int:
    """Spec default: two seasonal cycles; 8 for non-seasonal data."""
    block = 2 * max(periods) if periods else 8
    return max(1, min(block, length))


# ---------------------------------------------------------------------------
# autoregressive sieve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SieveModel:
    """Fitted AR(p) sieve: order, coefficients (oldest lag first),
    intercept, and the in-sample residuals the bootstrap resamples."""

    order: int
    coefficients: np.ndarray
    intercept: float
    residuals: np.ndarray


def _ar_design(y: np.ndarray, order: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Lag design for targets ``y[start:]``; row t is oldest-lag-first."""
    rows = np.lib.stride_tricks.sliding_window_view(y, order)
    return rows[start - order : y.shape[0] - order], y[start:]


def fit_sieve(values, max_order: int | None = None) -> SieveModel:
    """Fit an AR sieve; order chosen by AIC on a common sample.

    Candidate orders 1..max_order are compared on the sample that the
    largest candidate can use, then the winner is refitted on its own full
    sample.  Default ``max_order`` follows the usual 10*log10(T) rule,
    capped at T/3.
    """
    y = as_float_array(values)
    n = y.shape[0]
    if max_order is None:
        max_order = max(1, min(int(10 * math.log10(n)), n // 3)) if n > 1 else 1
    max_order = min(max_order, n - 2)
    if max_order < 1:
        raise SeriesTooShort(f"series length {n} cannot support an AR sieve")

    best_order, best_aic = 1, float("inf")
    for p in range(1, max_order + 1):
        X, target = _ar_design(y, p, max_order)
        fit = fit_linear(X, target, warn=False)
        aic = gaussian_aic(fit.sse, target.shape[0], p + 2)
        if aic < best_aic:
            best_order, best_aic = p, aic

    X, target = _ar_design(y, best_order, best_order)
    fit = fit_linear(X, target, warn=False)
    residuals = target - fit.predict(X)
    return SieveModel(
        order=best_order,
        coefficients=fit.coefficients,
        intercept=fit.intercept,
        residuals=residuals,
    )


def _regenerate(
    sieve: SieveModel, source: np.ndarray, innovations: np.ndarray
) -> np.ndarray:
    """Run the AR recursion forward from the first p observed values."""
    p = sieve.order
    out = np.empty(source.shape[0])
    out[:p] = source[:p]
    coef = sieve.coefficients
    c = sieve.intercept
    for t in range(p, source.shape[0]):
        out[t] = c + out[t - p : t] @ coef + innovations[t - p]
    return out


# ---------------------------------------------------------------------------
# neighbourhood generators
# ---------------------------------------------------------------------------


def nf_neighbourhood(model, train_values, source_id: str = "") -> Neighbourhood:
    """Single-member neighbourhood: the model's fit on the training region.

    No bootstrap, no randomness: the one member is the global model's
    one-step-ahead in-sample fit, and it serves as its own fit (the
    surrogate trains directly on it).
    """
    fit = model.one_step_fit(train_values)
    return Neighbourhood(
        method=NeighbourhoodMethod.NF,
        source_id=source_id,
        seed=0,
        members=(fit,),
        member_fits=(fit,),
    )


def nstl_neighbourhood(
    model,
    train_values,
    periods,
    n_members: int,
    block_length: int | None = None,
    seed: int = 0,
    source_id: str = "",
) -> Neighbourhood:
    """Decompose, bootstrap the remainder, re-add structure, refit the model.

    The training region is decomposed (STL for one period, MSTL for several,
    trend-only when the series is non-seasonal); each member re-adds a
    moving-block-bootstrapped remainder to the fixed trend + seasonality.
    """
    train = as_float_array(train_values)
    if n_members < 1:
        raise ValueError(f"n_members must be >= 1, got {n_members}")
    comp = mstl_decompose(train, tuple(periods))
    base = comp.trend + (sum(comp.seasonal) if comp.seasonal else 0.0)
    length = block_length or default_block_length(train.shape[0], comp.periods)

    members = []
    for i in range(n_members):
        rng = derive_rng(seed, i)
        members.append(base + mbb(comp.remainder, length, rng))
    fits = tuple(model.one_step_fit(m) for m in members)
    return Neighbourhood(
        method=NeighbourhoodMethod.NSTL,
        source_id=source_id,
        seed=seed,
        members=tuple(members),
        member_fits=fits,
    )


def nsieve_neighbourhood(
    model,
    train_values,
    n_members: int,
    block_length: int | None = None,
    seed: int = 0,
    ar_order_max: int | None = None,
    source_id: str = "",
    periods: tuple[int, ...] = (),
) -> Neighbourhood:
    """Bootstrap through an autoregressive sieve.

    Fits AR(p) to the training region, moving-block-bootstraps its
    residuals, and regenerates each member by running the AR recursion
    forward from the first p observed values.  If any regenerated member
    explodes (magnitude beyond 1e6 x the source scale) the sieve is
    refitted at order 1 and all members are regenerated; a second blow-up
    raises :class:`UnstableSieve`.
    """
    train = as_float_array(train_values)
    if n_members < 1:
        raise ValueError(f"n_members must be >= 1, got {n_members}")
    scale = max(1.0, float(np.abs(train).max()))

    def generate(sieve: SieveModel) -> list[np.ndarray] | None:
        length = block_length or default_block_length(
            sieve.residuals.shape[0], tuple(periods)
        )
        members = []
        for i in range(n_members):
            rng = derive_rng(seed, i)
            innovations = mbb(sieve.residuals, length, rng)
            member = _regenerate(sieve, train, innovations)
            if np.abs(member).max() > _SIEVE_BLOWUP_FACTOR * scale:
                return None
            members.append(member)
        return members

    sieve = fit_sieve(train, ar_order_max)
    members = generate(sieve)
    if members is None:
        warnings.warn(
            f"sieve of order {sieve.order} regenerated explosively; "
            f"refitting at order 1",
            stacklevel=2,
        )
        sieve = fit_sieve(train, 1)
        members = generate(sieve)
        if members is None:
            raise UnstableSieve(
                "sieve regeneration diverged even at order 1"
            )

    fits = tuple(model.one_step_fit(m) for m in members)
    return Neighbourhood(
        method=NeighbourhoodMethod.NSIEVE,
        source_id=source_id,
        seed=seed,
        members=tuple(members),
        member_fits=fits,
    )
