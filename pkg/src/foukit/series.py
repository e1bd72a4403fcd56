"""Equispaced sample paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Path:
    """An equispaced sample ``X_1, ..., X_n`` with spacing ``Δ``.

    ``offset`` and ``scale`` record an affine standardization so that the raw
    series is ``offset + scale * values``; both are identity for raw data.
    """

    values: np.ndarray
    delta: float
    offset: float = 0.0
    scale: float = 1.0
    standardized: bool = field(default=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("path values must be one-dimensional")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> float:
        """Implied observation window ``T = nΔ``."""
        return self.n * self.delta

    def raw(self) -> np.ndarray:
        """Values on the original (pre-standardization) scale."""
        return self.offset + self.scale * self.values

    def scaled(self, c: float) -> "Path":
        return Path(c * self.values, self.delta)
