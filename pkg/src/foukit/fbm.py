"""Exact fractional Gaussian noise / fractional Brownian motion sampling.

Davies–Harte circulant embedding: the fGn covariance row is embedded in a
symmetric circulant matrix whose eigenvalues come from one FFT; a complex
Gaussian vector shaped by their square roots is transformed back and its
real part has exactly the Toeplitz fGn covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import CirculantNotPSD, ValidationError
from .series import Path

__all__ = [
    "FgnGrid",
    "make_rng",
    "fgn_autocovariance",
    "circulant_eigenvalues",
    "simulate_fgn",
    "simulate_fbm",
]

# Eigenvalues in [-EIG_TOL * max_eig, 0) are round-off and clamped to zero.
EIG_TOL = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator from a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FgnGrid:
    n: int
    hurst: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValidationError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.n < 2:
            raise ValidationError(f"fGn grid needs n >= 2, got {self.n}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def fgn_autocovariance(hurst: float, lag) -> np.ndarray | float:
    """Unit-spacing fGn autocovariance ``γ(k) = ½(|k+1|^2H + |k-1|^2H - 2|k|^2H)``.

    Accepts a scalar or array of lags; ``γ(0) == 1`` exactly.
    """
    k = np.abs(np.asarray(lag, dtype=float))
    h2 = 2.0 * hurst
    gamma = 0.5 * ((k + 1.0) ** h2 + np.abs(k - 1.0) ** h2 - 2.0 * k**h2)
    gamma = np.where(k == 0, 1.0, gamma)
    return float(gamma) if gamma.ndim == 0 else gamma


def circulant_eigenvalues(n: int, hurst: float) -> np.ndarray:
    """Eigenvalues of the size-``2n`` circulant embedding of ``Toeplitz(γ(0..n-1))``.

    Raises
    ------
    CirculantNotPSD
        If any eigenvalue is below ``-EIG_TOL * max(eig)``.
    """
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = sfft.rfft(row).real
    top = eig.max()
    if eig.min() < -EIG_TOL * top:
        raise CirculantNotPSD(
            f"circulant embedding has eigenvalue {eig.min():.3e} (max {top:.3e}) "
            f"for n={n}, H={hurst}"
        )
    return np.clip(eig, 0.0, None)


def _fgn(n: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    # Embed a longer FFT-friendly grid; a prefix of exact fGn is exact fGn.
    m = sfft.next_fast_len(n)
    size = 2 * m
    eig = circulant_eigenvalues(m, hurst)
    full = np.concatenate([eig, eig[-2:0:-1]])
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    y = sfft.fft(np.sqrt(full / size) * z)
    return y.real[:n]


def simulate_fgn(grid: FgnGrid) -> np.ndarray:
    """Draw ``grid.n`` unit-spacing fGn values; deterministic given ``grid.seed``."""
    return _fgn(grid.n, grid.hurst, make_rng(grid.seed))


def simulate_fbm(n: int, delta: float, sigma: float, hurst: float, seed: int) -> Path:
    """Sample ``σ B_H`` at ``0, Δ, ..., nΔ`` (``n + 1`` values, the first exactly 0).

    Self-similarity maps the unit-grid fGn onto spacing ``Δ`` via ``Δ^H``.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not delta > 0 or not sigma > 0:
        raise ValidationError("delta and sigma must be positive")
    if not 0.0 < hurst < 1.0:
        raise ValidationError(f"hurst must lie in (0, 1), got {hurst}")
    rng = make_rng(seed)
    if n == 1:
        # A single increment is standard normal; no embedding needed.
        noise = rng.standard_normal(1)
    else:
        noise = _fgn(n, hurst, rng)
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(sigma * delta**hurst * noise, out=values[1:])
    return Path(values, delta)
