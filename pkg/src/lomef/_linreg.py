"""Shared least-squares machinery.

One linear solver used everywhere a regression appears (pooled global AR,
local AR, pooled regression explainer, harmonic regression, sieve fitting):
plain least squares with a ridge fallback when the design is rank-deficient,
plus coefficient standard errors and the Gaussian information criteria used
for order selection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularDesignWarning

__all__ = ["LinearFit", "fit_linear", "gaussian_aic", "gaussian_aicc"]

# Floor applied to SSE inside the criteria so a perfect (noiseless) fit does
# not produce -inf; ties between perfect fits then fall to the k penalty.
_SSE_FLOOR = 1e-300


@dataclass(frozen=True)
class LinearFit:
    """Result of a least-squares fit ``y ~ intercept + X @ coefficients``."""

    coefficients: np.ndarray
    intercept: float
    std_errors: np.ndarray
    intercept_std_error: float
    sse: float
    n_obs: int
    rank_deficient: bool

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients + self.intercept


def fit_linear(X, y, ridge: float = 1e-8, warn: bool = True) -> LinearFit:
    """Least squares with intercept; centred ridge fallback if rank-deficient.

    The fallback penalises only the slope coefficients (the design is centred
    first), so degenerate inputs collapse onto the intercept: a constant
    target with constant regressors comes back as intercept = mean, all slope
    coefficients ~ 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    design = np.column_stack([np.ones(n), X])

    solution, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    deficient = rank < p + 1
    if deficient:
        if warn:
            warnings.warn(
                f"design matrix rank {rank} < {p + 1}; falling back to ridge "
                f"(lambda={ridge:g})",
                SingularDesignWarning,
                stacklevel=2,
            )
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        coef = np.linalg.solve(Xc.T @ Xc + ridge * np.eye(p), Xc.T @ (y - y_mean))
        intercept = float(y_mean - x_mean @ coef)
    else:
        intercept = float(solution[0])
        coef = solution[1:]

    residuals = y - (X @ coef + intercept)
    sse = float(residuals @ residuals)

    dof = n - p - 1
    if dof > 0:
        sigma2 = sse / dof
        gram = design.T @ design
        if deficient:
            gram = gram + ridge * np.eye(p + 1)
        cov = sigma2 * np.linalg.pinv(gram)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        se = np.zeros(p + 1)
    return LinearFit(
        coefficients=coef,
        intercept=intercept,
        std_errors=se[1:],
        intercept_std_error=float(se[0]),
        sse=sse,
        n_obs=n,
        rank_deficient=deficient,
    )


def gaussian_aic(sse: float, n: int, k: int) -> float:
    """AIC for a Gaussian model with ``k`` free parameters on ``n`` points."""
    return n * np.log(max(sse, _SSE_FLOOR) / n) + 2.0 * k


def gaussian_aicc(sse: float, n: int, k: int) -> float:
    """Small-sample corrected AIC; infinite when the correction is undefined."""
    if n - k - 1 <= 0:
        return float("inf")
    return gaussian_aic(sse, n, k) + 2.0 * k * (k + 1) / (n - k - 1)
