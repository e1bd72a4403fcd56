"""Equispaced FOU(p) paths by iterating the T_λ recursion over fBm increments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .errors import DegeneratePath, ValidationError
from .fbm import _fgn, make_rng
from .model import FouSpec
from .series import Path

__all__ = [
    "SimulationPlan",
    "default_burn_in",
    "apply_T_lambda",
    "simulate_fou",
    "path_standardize",
]

# Burn-in leaves at most this fraction of the order-p kernel's mass before the grid start.
BURN_IN_TAIL = 1e-9


def default_burn_in(spec: FouSpec) -> float:
    """Burn-in time ``x/λ_min`` with ``x >= 20`` chosen so the Gamma(p) kernel tail is below 1e-9."""
    x = max(20.0, float(special.gammainccinv(spec.p, BURN_IN_TAIL)))
    return x / min(spec.lambdas)


@dataclass(frozen=True)
class SimulationPlan:
    spec: FouSpec
    n: int
    delta: float
    seed: int = 0
    burn_in: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}", pointer="/n")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValidationError(f"delta must be positive, got {self.delta}", pointer="/delta")
        if self.burn_in is not None and self.burn_in < 20.0 / min(self.spec.lambdas):
            raise ValidationError(
                f"burn_in {self.burn_in} is below 20/lambda_min = {20.0 / min(self.spec.lambdas):.6g}",
                pointer="/burn_in",
            )

    @property
    def horizon(self) -> float:
        return self.n * self.delta

    @property
    def effective_burn_in(self) -> float:
        return default_burn_in(self.spec) if self.burn_in is None else float(self.burn_in)

    @property
    def burn_in_steps(self) -> int:
        return int(math.ceil(self.effective_burn_in / self.delta))

    def describe(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "n": self.n,
            "delta": self.delta,
            "T": self.horizon,
            "burn_in": self.effective_burn_in,
            "burn_in_steps": self.burn_in_steps,
            "seed": self.seed,
        }


def apply_T_lambda(increments, lam: float, delta: float) -> np.ndarray:
    """Discretized ``T_λ(y)(t) = ∫_{-∞}^t e^{-λ(t-s)} dy(s)``.

    ``y_k = e^{-λΔ} y_{k-1} + e^{-λΔ/2} ΔY_k`` with zero state before the
    first increment; the kernel is weighted at the midpoint of each step.
    Returns levels, one per increment.
    """
    d = np.asarray(increments, dtype=float)
    decay = math.exp(-lam * delta)
    weight = math.exp(-0.5 * lam * delta)
    return signal.lfilter([weight], [1.0, -decay], d)


def _drive(plan: SimulationPlan) -> np.ndarray:
    spec = plan.spec
    total = plan.n + plan.burn_in_steps
    rng = make_rng(plan.seed)
    return spec.sigma * plan.delta**spec.hurst * _fgn(total, spec.hurst, rng)


def fou_from_increments(spec: FouSpec, increments: np.ndarray, delta: float) -> np.ndarray:
    """Apply ``T_{λ_1}^{p_1} ∘ ... ∘ T_{λ_q}^{p_q}`` (innermost ``λ_q``) to driving increments."""
    d = np.asarray(increments, dtype=float)
    levels = d
    for lam, mult in reversed(spec.components):
        for _ in range(mult):
            levels = apply_T_lambda(d, lam, delta)
            d = np.diff(levels, prepend=0.0)
    return levels


def simulate_fou(plan: SimulationPlan) -> Path:
    """One stationary FOU(p) path of ``plan.n`` samples; deterministic given ``plan.seed``."""
    levels = fou_from_increments(plan.spec, _drive(plan), plan.delta)
    return Path(levels[-plan.n :].copy(), plan.delta)


def path_standardize(path: Path) -> Path:
    """Subtract the sample mean and divide by the sample standard deviation.

    The returned path records both constants so forecasts can be mapped back.
    """
    x = path.values
    if x.shape[0] < 2:
        raise DegeneratePath("need at least two points to standardize", stage="standardize")
    mean = float(x.mean())
    sd = float(x.std())
    if not np.isfinite(sd) or sd <= 1e-14 * max(1.0, float(np.abs(x).max())):
        raise DegeneratePath("path has zero sample variance", stage="standardize")
    z = (x - mean) / sd
    return Path(
        z,
        path.delta,
        offset=path.offset + path.scale * mean,
        scale=path.scale * sd,
        standardized=True,
    )
