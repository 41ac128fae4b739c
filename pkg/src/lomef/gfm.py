"""Global forecasting models: one model fitted across a whole series set.

All models share the same surface:

- ``fit(series_set)`` trains on the (already train-trimmed) set and records
  the dataset-level preprocessing flags;
- ``forecast(values, horizon)`` produces a fully post-processed forecast on
  the original scale (inverse transforms, then rounding/clamping as the
  dataset demands);
- ``one_step_fit(values)`` produces the model's in-sample one-step-ahead
  fit for positions n+1..T, inverted to the original scale but *not*
  rounded/clamped — this is the series that neighbourhood generation and
  surrogate training consume.

Implementations: a pooled autoregression (least squares over all series'
windows), a small MIMO neural network, a perfect-oracle stub for testing,
and a subprocess adapter that speaks a line protocol to an external model.
"""

from __future__ import annotations

import select
import shlex
import subprocess
from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator

from ._linreg import fit_linear
from .core import SeriesSet, as_float_array
from .exceptions import (
    DivergedTraining,
    NonFiniteForecast,
    ProtocolError,
    SeriesTooShort,
    Timeout,
)
from .preprocess import (
    FourierConfig,
    ScalingRecord,
    WindowConfig,
    fourier_terms,
    make_windows,
    postprocess,
    preprocess_series,
)

__all__ = [
    "GlobalForecaster",
    "PooledARForecaster",
    "GlobalMLPForecaster",
    "OracleForecaster",
    "ExternalModelForecaster",
]


class GlobalForecaster(BaseEstimator):
    """Base class wiring preprocessing around model-specific cores.

    Subclasses set ``input_window_`` (the number of lagged values a
    prediction needs) during ``fit`` and implement ``_one_step_core`` /
    ``_forecast_core`` in the preprocessed space.
    """

    def __init__(self, log_transform: bool = True):
        self.log_transform = log_transform

    # -- shared preprocessing state ------------------------------------

    def _record_dataset_flags(self, series_set: SeriesSet) -> None:
        self.horizon_ = series_set.horizon
        self.seasonal_periods_ = series_set.seasonal_periods
        self.is_count_data_ = series_set.is_count_data
        self.non_negative_ = series_set.non_negative
        self.plus_one_ = bool(self.log_transform) and series_set.minimum == 0.0

    def _prep(self, values) -> tuple[np.ndarray, ScalingRecord]:
        return preprocess_series(values, self.log_transform, self.plus_one_)

    def _check_fitted(self) -> None:
        if not hasattr(self, "input_window_"):
            raise RuntimeError(f"{type(self).__name__} has not been fitted")

    # -- public surface -------------------------------------------------

    def one_step_fit(self, values) -> np.ndarray:
        """In-sample one-step-ahead fit, original scale, length T - n."""
        self._check_fitted()
        arr = as_float_array(values)
        n = self.input_window_
        if arr.shape[0] <= n:
            raise SeriesTooShort(
                f"one-step fit needs more than {n} values, got {arr.shape[0]}"
            )
        z, record = self._prep(arr)
        fitted = self._one_step_core(z)
        return postprocess(fitted, record)

    def forecast(self, values, horizon: int) -> np.ndarray:
        """Forecast ``horizon`` steps past the end of ``values``."""
        self._check_fitted()
        arr = as_float_array(values)
        n = self.input_window_
        if arr.shape[0] < n:
            raise SeriesTooShort(
                f"forecasting needs at least {n} values, got {arr.shape[0]}"
            )
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        z, record = self._prep(arr)
        fc = self._forecast_core(z, horizon)
        return postprocess(fc, record, self.is_count_data_, self.non_negative_)

    # -- hooks ------------------------------------------------------------

    def _one_step_core(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _forecast_core(self, z: np.ndarray, horizon: int) -> np.ndarray:
        raise NotImplementedError


class PooledARForecaster(GlobalForecaster):
    """Autoregression pooled across all series of a set.

    Every series contributes its sliding windows (n lagged values -> next
    value) to one least-squares problem, optionally augmented with Fourier
    seasonality terms evaluated at the target's time index.  Multi-step
    forecasts are produced recursively.  A rank-deficient pooled design
    falls back to ridge regression (lambda = ``ridge``) with a warning.

    ``fourier`` may be an explicit :class:`FourierConfig`, ``None`` (lags
    only), or ``"auto"`` (the default): when the dataset declares seasonal
    periods, use up to 3 harmonics per period.  Deterministic seasonal
    regressors are measured without observation noise, so they keep the
    seasonal part of the model free of the attenuation that noisy lagged
    inputs suffer.
    """

    def __init__(
        self,
        window: WindowConfig | None = None,
        fourier: FourierConfig | str | None = "auto",
        log_transform: bool = True,
        ridge: float = 1e-8,
    ):
        super().__init__(log_transform=log_transform)
        self.window = window
        self.fourier = fourier
        self.ridge = ridge

    def _resolve_fourier(self, series_set: SeriesSet) -> FourierConfig | None:
        if self.fourier != "auto":
            return self.fourier
        periods = series_set.seasonal_periods
        if not periods:
            return None
        return FourierConfig(
            periods=tuple(periods),
            orders=tuple(max(1, min(3, p // 2)) for p in periods),
        )

    def fit(self, series_set: SeriesSet) -> "PooledARForecaster":
        self._record_dataset_flags(series_set)
        window = self.window or WindowConfig.for_horizon(series_set.horizon)
        n = window.n
        self.fourier_ = self._resolve_fourier(series_set)

        designs, targets = [], []
        self.scaling_records_ = {}
        for s in series_set:
            z, record = self._prep(s.values)
            self.scaling_records_[s.id] = record
            X, Y = make_windows(z, WindowConfig(n, 1))
            if self.fourier_ is not None:
                t = np.arange(n + 1, n + 1 + X.shape[0])
                X = np.column_stack([X, fourier_terms(t, self.fourier_)])
            designs.append(X)
            targets.append(Y[:, 0])

        fit = fit_linear(np.vstack(designs), np.concatenate(targets), ridge=self.ridge)
        self.coefficients_ = fit.coefficients[:n]
        self.fourier_coefficients_ = fit.coefficients[n:]
        self.intercept_ = fit.intercept
        self.rank_deficient_ = fit.rank_deficient
        self.input_window_ = n
        return self

    def _regressors(self, t: np.ndarray) -> np.ndarray:
        """Fourier contribution at (1-based) time indices ``t``."""
        if self.fourier_ is None:
            return np.zeros(np.shape(t))
        return fourier_terms(t, self.fourier_) @ self.fourier_coefficients_

    def _one_step_core(self, z: np.ndarray) -> np.ndarray:
        n = self.input_window_
        X = np.lib.stride_tricks.sliding_window_view(z, n)[:-1]
        t = np.arange(n + 1, z.shape[0] + 1)
        return X @ self.coefficients_ + self._regressors(t) + self.intercept_

    def _forecast_core(self, z: np.ndarray, horizon: int) -> np.ndarray:
        n = self.input_window_
        history = list(z[-n:])
        out = np.empty(horizon)
        for j in range(horizon):
            t = z.shape[0] + j + 1
            # history holds the n most recent values; coefficient i multiplies
            # the value i steps back in the window ordering used at training
            # time (oldest first).
            val = (
                np.dot(history[-n:], self.coefficients_)
                + float(self._regressors(t))
                + self.intercept_
            )
            out[j] = val
            history.append(val)
        return out


class GlobalMLPForecaster(GlobalForecaster):
    """Single-hidden-layer network trained on pooled MIMO windows.

    Inputs are the n most recent (preprocessed) values; outputs are the next
    m = horizon values in one shot.  Training is plain mini-batch gradient
    descent with a seeded generator for both weight init and shuffling, so a
    given seed reproduces the fit bit-for-bit.  The full-data loss is
    recorded after every epoch in ``loss_history_``.
    """

    def __init__(
        self,
        hidden: int = 16,
        epochs: int = 200,
        batch_size: int = 32,
        learning_rate: float = 0.05,
        seed: int = 0,
        window: WindowConfig | None = None,
        log_transform: bool = True,
    ):
        super().__init__(log_transform=log_transform)
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.window = window

    def fit(self, series_set: SeriesSet) -> "GlobalMLPForecaster":
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden < 1:
            raise ValueError(f"hidden width must be >= 1, got {self.hidden}")
        self._record_dataset_flags(series_set)
        window = self.window or WindowConfig.for_horizon(series_set.horizon)
        n, m = window.n, window.m

        inputs, outputs = [], []
        for s in series_set:
            z, _ = self._prep(s.values)
            X, Y = make_windows(z, window)
            inputs.append(X)
            outputs.append(Y)
        X = np.vstack(inputs)
        Y = np.vstack(outputs)

        rng = np.random.default_rng(self.seed)
        W1 = rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, self.hidden))
        b1 = np.zeros(self.hidden)
        W2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=(self.hidden, m))
        b2 = np.zeros(m)

        n_records = X.shape[0]
        lr = self.learning_rate
        losses = []
        for _ in range(self.epochs):
            order = rng.permutation(n_records)
            for start in range(0, n_records, self.batch_size):
                idx = order[start : start + self.batch_size]
                xb, yb = X[idx], Y[idx]
                hidden = np.tanh(xb @ W1 + b1)
                pred = hidden @ W2 + b2
                err = pred - yb
                scale = 2.0 / (xb.shape[0] * m)
                grad_out = scale * err
                gW2 = hidden.T @ grad_out
                gb2 = grad_out.sum(axis=0)
                grad_hidden = (grad_out @ W2.T) * (1.0 - hidden**2)
                gW1 = xb.T @ grad_hidden
                gb1 = grad_hidden.sum(axis=0)
                W1 -= lr * gW1
                b1 -= lr * gb1
                W2 -= lr * gW2
                b2 -= lr * gb2
            full = np.tanh(X @ W1 + b1) @ W2 + b2
            loss = float(np.mean((full - Y) ** 2))
            if not np.isfinite(loss):
                raise DivergedTraining(
                    f"training loss became non-finite after epoch {len(losses) + 1}"
                )
            losses.append(loss)

        self.weights_ = (W1, b1, W2, b2)
        self.loss_history_ = losses
        self.input_window_ = n
        self.output_window_ = m
        return self

    def _net(self, X: np.ndarray) -> np.ndarray:
        W1, b1, W2, b2 = self.weights_
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def _one_step_core(self, z: np.ndarray) -> np.ndarray:
        n = self.input_window_
        X = np.lib.stride_tricks.sliding_window_view(z, n)[:-1]
        # the fitted value at position t is the first element of the MIMO
        # output for the window ending at t-1
        return self._net(X)[:, 0]

    def _forecast_core(self, z: np.ndarray, horizon: int) -> np.ndarray:
        n, m = self.input_window_, self.output_window_
        history = list(z)
        out: list[float] = []
        while len(out) < horizon:
            block = self._net(np.asarray(history[-n:])[None, :])[0]
            out.extend(block.tolist())
            history.extend(block.tolist())
        return np.asarray(out[:horizon])


class OracleForecaster(GlobalForecaster):
    """Perfect-oracle stub: its in-sample fit *is* the series.

    Used to verify the pipeline's reductions: the stub's input window is 0,
    so ``one_step_fit`` returns the training values verbatim (no
    preprocessing round trip), and a surrogate fitted on that fit is
    literally fitted on the training series.  Forecasts are a last-value
    repeat — deliberately naive, since only the in-sample behaviour of this
    stub carries meaning.
    """

    def __init__(self):
        super().__init__(log_transform=False)

    def fit(self, series_set: SeriesSet) -> "OracleForecaster":
        self._record_dataset_flags(series_set)
        self.input_window_ = 0
        return self

    def one_step_fit(self, values) -> np.ndarray:
        self._check_fitted()
        arr = as_float_array(values)
        if arr.shape[0] == 0:
            raise SeriesTooShort("one-step fit needs a non-empty series")
        return arr.copy()

    def forecast(self, values, horizon: int) -> np.ndarray:
        self._check_fitted()
        arr = as_float_array(values)
        if arr.shape[0] == 0:
            raise SeriesTooShort("forecasting needs a non-empty series")
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        raw = np.full(horizon, arr[-1])
        return postprocess(
            raw, ScalingRecord(1.0), self.is_count_data_, self.non_negative_
        )


class ExternalModelForecaster(GlobalForecaster):
    """Adapter speaking a line protocol to an external model subprocess.

    Protocol (one request line, one response line, comma-separated):

    - ``FORECAST,h,v1,...,vT``  -> ``f1,...,fh``
    - ``FIT,v1,...,vT``         -> ``g1,...,gk`` with k <= T; the fitted
      values are aligned to the *last* k positions of the input (the
      external model decides its own input window, so k = T - n_external).

    Values cross the boundary on the original scale; the external model owns
    its preprocessing.  A malformed or short reply raises
    :class:`ProtocolError`; a reply that does not arrive within ``timeout``
    seconds raises :class:`Timeout`.
    """

    def __init__(self, command: str, timeout: float = 30.0):
        super().__init__(log_transform=False)
        self.command = command
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None

    def fit(self, series_set: SeriesSet) -> "ExternalModelForecaster":
        self._record_dataset_flags(series_set)
        self.input_window_ = 0  # unknown; the external model enforces its own
        return self

    # -- subprocess plumbing ---------------------------------------------

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def _roundtrip(self, request: str) -> np.ndarray:
        proc = self._ensure_proc()
        try:
            proc.stdin.write(request + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"external model pipe closed: {exc}") from exc
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
        if not ready:
            proc.kill()
            self._proc = None
            raise Timeout(
                f"external model gave no reply within {self.timeout:g}s"
            )
        line = proc.stdout.readline()
        if not line:
            raise ProtocolError("external model closed its output stream")
        try:
            values = np.array([float(v) for v in line.strip().split(",")])
        except ValueError as exc:
            raise ProtocolError(f"unparseable reply: {line.strip()!r}") from exc
        if not np.all(np.isfinite(values)):
            raise NonFiniteForecast("external model replied with non-finite values")
        return values

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- model surface -----------------------------------------------------

    def one_step_fit(self, values) -> np.ndarray:
        self._check_fitted()
        arr = as_float_array(values)
        payload = ",".join(repr(float(v)) for v in arr)
        reply = self._roundtrip(f"FIT,{payload}")
        if not 1 <= reply.shape[0] <= arr.shape[0]:
            raise ProtocolError(
                f"FIT reply length {reply.shape[0]} outside 1..{arr.shape[0]}"
            )
        return reply

    def forecast(self, values, horizon: int) -> np.ndarray:
        self._check_fitted()
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        arr = as_float_array(values)
        payload = ",".join(repr(float(v)) for v in arr)
        reply = self._roundtrip(f"FORECAST,{horizon},{payload}")
        if reply.shape[0] != horizon:
            raise ProtocolError(
                f"FORECAST reply length {reply.shape[0]} != horizon {horizon}"
            )
        return postprocess(
            reply, ScalingRecord(1.0), self.is_count_data_, self.non_negative_
        )


def train_region_set(series_set: SeriesSet) -> SeriesSet:
    """The same set with every series truncated to its training region."""
    from .core import split

    trimmed = tuple(
        replace(s, values=split(s).train) for s in series_set.series
    )
    return SeriesSet(series=trimmed, name=series_set.name)
