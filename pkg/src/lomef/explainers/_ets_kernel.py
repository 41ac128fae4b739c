"""Compiled inner loop for additive exponential smoothing.

The one-step-error recursion runs once per optimizer evaluation, hundreds of
evaluations per candidate form, for every neighbourhood member — far too hot
for a Python loop at pipeline scale.  The kernel is nopython-compiled
without fastmath, so results are deterministic and independent of threading.

State convention: slot ``t % m`` of the seasonal array holds the most
recently updated seasonal state for that phase; for a non-damped additive
trend pass ``phi = 1.0``; unused states are simply ignored via the flags.
"""

from __future__ import annotations

from numba import njit

__all__ = ["ets_run"]


@njit(cache=True)
def ets_run(y, m, has_trend, damped, has_seasonal, alpha, beta, gamma, phi, l0, b0, s0):
    """Run the innovation recursion; return (sse, level, trend, seasonal).

    ``y`` are the observations, ``m`` the seasonal cycle length (>= 1),
    ``s0`` the initial seasonal states (length m; pass a 1-array when
    unused).  The returned states are the post-sample values a forecast
    continues from.
    """
    level = l0
    trend = b0
    seasonal = s0.copy()
    eff_phi = phi if damped else 1.0
    sse = 0.0
    for t in range(y.shape[0]):
        sea = seasonal[t % m] if has_seasonal else 0.0
        point = level + eff_phi * trend + sea if has_trend else level + sea
        err = y[t] - point
        sse += err * err
        if has_trend:
            level = level + eff_phi * trend + alpha * err
            trend = eff_phi * trend + beta * err
        else:
            level = level + alpha * err
        if has_seasonal:
            seasonal[t % m] = seasonal[t % m] + gamma * err
    return sse, level, trend, seasonal
