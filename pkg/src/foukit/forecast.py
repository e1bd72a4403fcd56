"""One-step best linear prediction under a fitted FOU(p) model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NotPositiveDefinite, ValidationError
from .model import FouSpec, autocovariance_grid
from .series import Path

__all__ = [
    "ForecastTask",
    "durbin_levinson",
    "levinson_predictions",
    "one_step_predictions",
    "naive_predictions",
    "mae",
]

# Innovation variances at or below PD_TOL * γ(0) signal a singular Toeplitz system.
PD_TOL = 1e-13


def levinson_predictions(gammas, values, start: int = 1) -> np.ndarray:
    """Predict ``values[t]`` from ``values[:t]`` for every ``t`` in ``[start, len(values)]``.

    A single Durbin–Levinson pass over the autocovariances ``γ(0..N)``; the
    entry for ``t = len(values)`` is the forecast of the next, unobserved value.
    """
    g = np.asarray(gammas, dtype=float)
    x = np.asarray(values, dtype=float)
    n = x.shape[0]
    if start < 1 or start > n:
        raise ValidationError(f"start must lie in [1, {n}], got {start}")
    if g.shape[0] < n + 1:
        raise LengthMismatch(f"need {n + 1} autocovariances for {n} observations, got {g.shape[0]}")
    if not g[0] > 0:
        raise NotPositiveDefinite(f"gamma(0) = {g[0]} is not positive")
    out = np.empty(n - start + 1)
    phi = np.zeros(0)
    v = g[0]
    floor = PD_TOL * g[0]
    for t in range(1, n + 1):
        # extend the order-(t-1) predictor to order t
        kappa = (g[t] - np.dot(phi, g[t - 1 : 0 : -1])) / v
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
        v *= 1.0 - kappa * kappa
        if not v > floor:
            raise NotPositiveDefinite(f"innovation variance {v:.3e} at order {t}")
        if t >= start:
            # phi[j-1] multiplies x[t-j]
            out[t - start] = np.dot(phi, x[t - 1 :: -1])
    return out


def durbin_levinson(gammas, values) -> float:
    """Best linear prediction of the value following ``values``.

    ``gammas`` holds ``γ(0), γ(1), ...`` at the sampling spacing and must be
    at least one longer than ``values``.

    Raises
    ------
    NotPositiveDefinite
        If an innovation variance falls to ``1e-13 γ(0)`` or below.
    """
    x = np.asarray(values, dtype=float)
    if x.shape[0] == 0:
        return 0.0
    return float(levinson_predictions(gammas, x, start=x.shape[0])[-1])


@dataclass(frozen=True)
class ForecastTask:
    spec: FouSpec
    path: Path
    m: int

    def __post_init__(self):
        if not 1 <= self.m < self.path.n:
            raise ValidationError(f"m must satisfy 1 <= m < n = {self.path.n}, got {self.m}", pointer="/m")


def one_step_predictions(task: ForecastTask) -> np.ndarray:
    """Growing-window one-step predictions of the last ``m`` observations.

    Uses the model autocovariance on the path's grid; predictions are made on
    the path's own scale and mapped back through its standardization constants.
    """
    path = task.path
    n = path.n
    gammas = autocovariance_grid(task.spec, path.delta, n)
    # predictions for x[n-m], ..., x[n-1]
    preds = levinson_predictions(gammas, path.values[: n - 1], start=n - task.m)
    return path.offset + path.scale * preds


def naive_predictions(path: Path, m: int) -> np.ndarray:
    """Last-value predictions of the last ``m`` observations, on the raw scale."""
    raw = path.raw()
    return raw[-m - 1 : -1].copy()


def mae(actuals, predictions) -> float:
    """Mean absolute one-step prediction error."""
    a = np.asarray(actuals, dtype=float)
    b = np.asarray(predictions, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape[0] if a.ndim else 1} actuals vs {b.shape[0] if b.ndim else 1} predictions")
    if a.size == 0:
        raise LengthMismatch("no values to score")
    return float(np.mean(np.abs(a - b)))
