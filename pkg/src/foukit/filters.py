"""Filters, dilation and filtered quadratic variations.

A filter ``a = (a_0, ..., a_k)`` has order ``L`` when its first ``L`` power
moments ``Σ a_i i^l`` vanish and the ``L``-th does not.  Moments are evaluated
in exact rational arithmetic on the float coefficients, so long integer
filters such as the 27-tap binomial filter are classified without round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import NotAFilter, PathTooShort, ValidationError
from .series import Path

__all__ = [
    "Filter",
    "validate_filter",
    "binomial_filter",
    "daubechies2_filter",
    "dilate",
    "quadratic_variation",
    "parse_filter",
]

MOMENT_TOL = 1e-10

_DAUB2 = (
    0.4829629131445341,
    -0.8365163037378077,
    0.2241438680420134,
    0.1294095225512603,
)


@dataclass(frozen=True)
class Filter:
    coeffs: tuple[float, ...]
    order: int
    name: str = ""

    @property
    def length(self) -> int:
        return len(self.coeffs)

    @property
    def k(self) -> int:
        return len(self.coeffs) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def autocorrelation(self) -> np.ndarray:
        """``c_d = Σ_i a_i a_{i+d}`` for ``d = 0..k``."""
        a = self.as_array()
        return np.correlate(a, a, mode="full")[self.k :]

    def variogram_sum(self, hurst: float) -> float:
        """``S(H) = Σ_i Σ_j a_i a_j |i - j|^{2H}``, strictly negative for a valid filter.

        Summed over lags via the filter autocorrelation, which is exact in
        float64 for integer-valued filters up to 27 taps.
        """
        c = self.autocorrelation()
        d = np.arange(1, self.k + 1, dtype=float)
        return float(2.0 * np.dot(c[1:], d ** (2.0 * hurst)))

    def to_json(self) -> dict:
        return {"name": self.name, "order": self.order, "coeffs": list(self.coeffs)}


def _moment(coeffs: list[Fraction], power: int) -> Fraction:
    # 0**0 == 1, so the l = 0 moment is the plain coefficient sum.
    return sum((a * i**power for i, a in enumerate(coeffs)), Fraction(0))


def validate_filter(coeffs, name: str = "") -> Filter:
    """Compute the true order of a coefficient vector and wrap it as a :class:`Filter`.

    A moment counts as zero when ``|Σ a_i i^l| <= 1e-10``.

    Raises
    ------
    NotAFilter
        If the coefficients do not sum to zero, or every moment vanishes.
    """
    values = [float(c) for c in np.ravel(np.asarray(coeffs, dtype=float))]
    if len(values) < 2:
        raise ValidationError("a filter needs at least two coefficients")
    if not all(np.isfinite(values)):
        raise ValidationError("filter coefficients must be finite")
    exact = [Fraction(v) for v in values]
    order = 0
    for power in range(len(values) + 1):
        if abs(_moment(exact, power)) > MOMENT_TOL:
            break
        order += 1
    else:
        raise NotAFilter("all moments vanish (zero filter)")
    if order == 0:
        raise NotAFilter(f"coefficients sum to {sum(values):.6g}, not zero")
    return Filter(tuple(values), order, name)


def binomial_filter(k: int) -> Filter:
    """Alternating binomial filter ``a_j = (-1)^{j+1} C(k, j)``, of order ``k``."""
    if k < 1:
        raise ValidationError(f"binomial filter needs k >= 1, got {k}")
    coeffs = [(-1.0) ** (j + 1) * comb(k, j) for j in range(k + 1)]
    return validate_filter(coeffs, name=f"binomial:{k}")


def daubechies2_filter() -> Filter:
    """The 4-tap Daubechies filter of order 2, scaled by ``1/√2``."""
    return validate_filter([c / np.sqrt(2.0) for c in _DAUB2], name="daub2")


def dilate(filt: Filter) -> Filter:
    """Interleave zeros: ``(a_0, 0, a_1, 0, ..., a_k)``; the order is preserved."""
    a = filt.as_array()
    out = np.zeros(2 * filt.k + 1)
    out[::2] = a
    name = f"dilated({filt.name})" if filt.name else ""
    return validate_filter(out, name=name)


def quadratic_variation(path: Path | np.ndarray, filt: Filter) -> float:
    """``V_{n,a} = (1/n) Σ_i (Σ_j a_j X_{i+j})^2`` over all full windows.

    The normalization is ``1/n`` with ``n`` the sample size, not the number
    of windows.
    """
    x = path.values if isinstance(path, Path) else np.asarray(path, dtype=float)
    n = x.shape[0]
    if n < filt.length:
        raise PathTooShort(
            f"path of length {n} is shorter than filter length {filt.length}",
            stage="quadratic_variation",
        )
    # correlate(x, a) yields Σ_j a_j x_{i+j} for every full window
    filtered = np.correlate(x, filt.as_array(), mode="valid")
    return float(np.dot(filtered, filtered) / n)


def parse_filter(text: str) -> Filter:
    """Parse ``binomial:k``, ``daub2`` or a comma-separated coefficient list."""
    text = text.strip()
    if text == "daub2":
        return daubechies2_filter()
    if text.startswith("binomial:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad binomial filter spec {text!r}") from None
        return binomial_filter(k)
    try:
        coeffs = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"unrecognised filter {text!r}") from None
    return validate_filter(coeffs, name="custom")
