"""Estimators of H, σ and λ for FOU(λ^(p), σ, H) samples.

``H`` and ``σ`` come from filtered quadratic variations at two dilation
levels; ``λ`` either from inverting the closed-form stationary variance at
the estimated ``(H, σ)`` and the empirical second moment (plug-in), or by
minimizing a discretized Whittle contrast over a compact interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from .errors import (
    FouError,
    FrequencyAboveNyquist,
    NonPositiveBase,
    NonPositiveRadicand,
    PathTooShort,
    ValidationError,
    ZeroVariation,
)
from .filters import Filter, binomial_filter, dilate, quadratic_variation
from .model import FouSpec, g_closed_form
from .series import Path
from .simulate import path_standardize

__all__ = [
    "WhittleConfig",
    "FitConfig",
    "FitReport",
    "estimate_H",
    "estimate_sigma",
    "empirical_second_moment",
    "estimate_lambda_plugin",
    "periodogram",
    "whittle_grid",
    "whittle_contrast",
    "estimate_lambda_whittle",
    "golden_section",
    "fit",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WhittleConfig:
    """Compact search interval for λ and the frequency band of the weight.

    ``freq_min``, ``freq_max`` and ``n_freq`` default per path to ``2π/T``,
    ``min(π/Δ, 50 λ_hi)`` and one grid point per Fourier frequency in the band.
    """

    lambda_bounds: tuple[float, float] = (0.05, 5.0)
    freq_min: float | None = None
    freq_max: float | None = None
    n_freq: int | None = None
    tol: float = 1e-5
    scan_points: int = 24

    def __post_init__(self):
        lo, hi = self.lambda_bounds
        if not 0 < lo < hi:
            raise ValidationError("lambda_bounds must satisfy 0 < lo < hi", pointer="/lambda_bounds")
        for name in ("freq_min", "freq_max"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValidationError(f"{name} must be positive", pointer=f"/{name}")
        if self.freq_min is not None and self.freq_max is not None and self.freq_min >= self.freq_max:
            raise ValidationError("freq_min must be below freq_max", pointer="/freq_min")
        if self.n_freq is not None and self.n_freq < 64:
            raise ValidationError("n_freq must be >= 64", pointer="/n_freq")
        if not self.tol > 0:
            raise ValidationError("tol must be positive", pointer="/tol")

    def resolve(self, path: Path) -> tuple[float, float, int]:
        horizon = path.horizon
        nyquist = math.pi / path.delta
        fmin = 2.0 * math.pi / horizon if self.freq_min is None else self.freq_min
        fmax = min(nyquist, 50.0 * self.lambda_bounds[1]) if self.freq_max is None else min(self.freq_max, nyquist)
        if self.n_freq is not None:
            count = self.n_freq
        else:
            count = max(64, int(round((fmax - fmin) / (2.0 * math.pi / horizon))) + 1)
        return fmin, fmax, count


@dataclass(frozen=True)
class FitConfig:
    filter: Filter = field(default_factory=lambda: binomial_filter(2))
    p: int = 1
    standardize: bool = False
    assume_unit_sigma: bool = False
    whittle: WhittleConfig | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValidationError(f"p must be >= 1, got {self.p}", pointer="/p")


@dataclass
class FitReport:
    h_hat: float
    sigma_hat: float
    mu2_hat: float
    lambda_plugin: float
    p: int
    sigma_fixed: bool
    lambda_whittle: float | None = None
    spec_hat: FouSpec | None = None
    diagnostics: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def sigma_used(self) -> float:
        return 1.0 if self.sigma_fixed else self.sigma_hat


def estimate_H(path: Path, filt: Filter) -> float:
    """``Ĥ = ½ log₂(V_{n,a²} / V_{n,a})``; not clamped to ``(0, 1)``."""
    return _h_parts(path, filt)[0]


def _h_parts(path: Path, filt: Filter) -> tuple[float, float, float]:
    if filt.order < 2:
        raise ValidationError(f"H estimation needs a filter of order >= 2, got {filt.order}")
    if path.n < 2 * filt.k + 1:
        raise PathTooShort(
            f"path of length {path.n} is shorter than the dilated filter ({2 * filt.k + 1})",
            stage="quadratic_variation",
        )
    v1 = quadratic_variation(path, filt)
    v2 = quadratic_variation(path, dilate(filt))
    if v1 <= 0 or v2 <= 0:
        raise ZeroVariation("filtered quadratic variation vanishes (constant or polynomial path)")
    return 0.5 * math.log2(v2 / v1), v1, v2


def estimate_sigma(path: Path, filt: Filter, h_hat: float, delta: float | None = None) -> float:
    """``σ̂ = (-2 V_{n,a} / (Δ^{2Ĥ} Σ_i Σ_j a_i a_j |i-j|^{2Ĥ}))^{1/2}``."""
    delta = path.delta if delta is None else delta
    return _sigma_parts(quadratic_variation(path, filt), filt, h_hat, delta)[0]


def _sigma_parts(v1: float, filt: Filter, h_hat: float, delta: float) -> tuple[float, float]:
    if not delta > 0:
        raise ValidationError("delta must be positive")
    s = filt.variogram_sum(h_hat)
    radicand = -2.0 * v1 / (delta ** (2.0 * h_hat) * s) if s != 0 else math.nan
    if not radicand > 0 or not math.isfinite(radicand):
        raise NonPositiveRadicand(f"sigma radicand {radicand:.6g} (filter double sum {s:.6g})")
    return math.sqrt(radicand), s


def empirical_second_moment(path: Path | np.ndarray) -> float:
    """``μ̂₂ = (1/n) Σ X_i²`` with no centering."""
    x = path.values if isinstance(path, Path) else np.asarray(path, dtype=float)
    return float(np.dot(x, x) / x.shape[0])


def estimate_lambda_plugin(h_hat: float, sigma_hat: float, mu2_hat: float, p: int) -> float:
    """Invert the stationary-variance formula: ``λ̂ = (σ̂² Ĥ Γ(2Ĥ) g(Ĥ) / μ̂₂)^{1/(2Ĥ)}``."""
    if not mu2_hat > 0:
        raise NonPositiveBase(f"second moment must be positive, got {mu2_hat}")
    if h_hat == 0:
        raise NonPositiveBase("H estimate 0 leaves the plug-in exponent undefined")
    base = sigma_hat**2 * h_hat * special.gamma(2.0 * h_hat) * g_closed_form(h_hat, p) / mu2_hat
    if not base > 0 or not math.isfinite(base):
        raise NonPositiveBase(f"plug-in base {base:.6g} is not positive (H estimate {h_hat:.6g}, p={p})")
    return base ** (1.0 / (2.0 * h_hat))


# -- Whittle contrast ---------------------------------------------------------


def periodogram(path: Path, x) -> np.ndarray | float:
    """Discretized ``I_T(x) = |Δ Σ_j X_j e^{-i jΔx}|² / (2πT)`` at arbitrary frequencies."""
    xs = np.asarray(x, dtype=float)
    nyquist = math.pi / path.delta
    if np.any(np.abs(xs) > nyquist * (1 + 1e-12)):
        raise FrequencyAboveNyquist(f"|x| must not exceed π/Δ = {nyquist:.6g}")
    flat = xs.ravel()
    t = path.delta * np.arange(1, path.n + 1)
    out = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], 256):
        block = flat[start : start + 256]
        dft = np.exp(-1j * np.outer(block, t)) @ path.values
        out[start : start + 256] = np.abs(path.delta * dft) ** 2
    out /= 2.0 * math.pi * path.horizon
    return float(out[0]) if xs.ndim == 0 else out.reshape(xs.shape)


def whittle_grid(path: Path, cfg: WhittleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Positive-frequency grid of the weight's support and the periodogram on it.

    Uses a chirp-z transform for the uniform grid; empty when the band lies
    entirely above the Nyquist frequency.
    """
    fmin, fmax, count = cfg.resolve(path)
    if fmin >= fmax:
        return np.empty(0), np.empty(0)
    xs = np.linspace(fmin, fmax, count)
    step = xs[1] - xs[0]
    w = np.exp(-1j * path.delta * step)
    a = np.exp(1j * path.delta * fmin)
    # czt gives Σ_k x_k a^{-k} w^{k m}; the missing e^{-iΔx} phase drops out of |·|²
    dft = signal.czt(path.values, m=count, w=w, a=a)
    pgram = np.abs(path.delta * dft) ** 2 / (2.0 * math.pi * path.horizon)
    return xs, pgram


def _log_density(xs: np.ndarray, lam: float, p: int, sigma: float, hurst: float) -> np.ndarray:
    const = math.log(sigma**2 * special.gamma(2 * hurst + 1) * math.sin(math.pi * hurst) / (2 * math.pi))
    return const + (2 * p - 1 - 2 * hurst) * np.log(xs) - p * np.log(lam**2 + xs**2)


def _contrast(xs: np.ndarray, pgram: np.ndarray, lam: float, fixed: tuple[float, float, int]) -> float:
    if xs.shape[0] < 2:
        return 0.0
    hurst, sigma, p = fixed
    logf = _log_density(xs, lam, p, sigma, hurst)
    integrand = logf + pgram * np.exp(-logf)
    # symmetric band: twice the positive half, times 1/(4π)
    return float(2.0 * np.trapezoid(integrand, xs) / (4.0 * math.pi))


def whittle_contrast(path: Path, lam: float, fixed: tuple[float, float, int], cfg: WhittleConfig) -> float:
    """``U_T(λ) = (1/4π) ∫ (log f(x, λ) + I_T(x)/f(x, λ)) w(x) dx`` by the trapezoid rule.

    ``fixed`` is ``(H, σ, p)``; ``w`` is the indicator of ``freq_min <= |x| <= freq_max``.
    """
    lo, hi = cfg.lambda_bounds
    if not lo <= lam <= hi:
        raise ValidationError(f"lambda {lam} outside the search interval [{lo}, {hi}]")
    xs, pgram = whittle_grid(path, cfg)
    return _contrast(xs, pgram, lam, fixed)


def golden_section(func, lo: float, hi: float, tol: float, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``func`` on ``[lo, hi]`` to bracket width ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def _minimize_contrast(xs, pgram, fixed, cfg: WhittleConfig) -> tuple[float, dict]:
    lo, hi = cfg.lambda_bounds
    objective = lambda lam: _contrast(xs, pgram, lam, fixed)  # noqa: E731
    # a coarse log-spaced scan picks the basin before the golden-section refinement
    grid = np.geomspace(lo, hi, cfg.scan_points)
    values = np.array([objective(g) for g in grid])
    i = int(np.argmin(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.shape[0] - 1)]
    lam, fmin = golden_section(objective, a, b, cfg.tol)
    for edge in (lo, hi):
        f_edge = objective(edge)
        if f_edge < fmin:
            lam, fmin = edge, f_edge
    hit = abs(lam - lo) <= cfg.tol or abs(hi - lam) <= cfg.tol
    return lam, {"whittle_min": fmin, "whittle_boundary_hit": float(hit), "whittle_n_freq": float(xs.shape[0])}


def estimate_lambda_whittle(
    path: Path, fixed: tuple[float, float, int], cfg: WhittleConfig, *, pgram=None
) -> tuple[float, dict]:
    """``λ̂_U = argmin_{λ ∈ Λ} U_T(λ)`` with ``(H, σ, p)`` held at ``fixed``.

    ``pgram`` optionally replaces the periodogram: a callable evaluated on the
    frequency grid (for instance the true spectral density) or an array.
    Returns the estimate and diagnostics including ``whittle_boundary_hit``.
    """
    xs, observed = whittle_grid(path, cfg)
    if pgram is not None:
        observed = pgram(xs) if callable(pgram) else np.asarray(pgram, dtype=float)
    if xs.shape[0] < 2:
        raise ValidationError("Whittle frequency band is empty", stage="lambda_whittle")
    return _minimize_contrast(xs, observed, fixed, cfg)


# -- full pipeline ------------------------------------------------------------


def _staged(stage: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except FouError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def fit(path: Path, config: FitConfig) -> FitReport:
    """Standardize (optionally), then estimate ``Ĥ``, ``σ̂``, ``μ̂₂``, ``λ̂`` and optionally ``λ̂_U``.

    Errors propagate with ``stage`` naming the failing step.
    """
    work = _staged("standardize", path_standardize, path) if config.standardize else path
    h_hat, v1, v2 = _staged("hurst", _h_parts, work, config.filter)
    flags = []
    if not 0.0 < h_hat < 1.0:
        flags.append("h_out_of_range")
    sigma_hat, s = _staged("sigma", _sigma_parts, v1, config.filter, h_hat, work.delta)
    mu2 = _staged("second_moment", empirical_second_moment, work)
    sigma_used = 1.0 if config.assume_unit_sigma else sigma_hat
    lam = _staged("lambda_plugin", estimate_lambda_plugin, h_hat, sigma_used, mu2, config.p)
    diagnostics = {"V_a": v1, "V_a2": v2, "filter_double_sum": s, "n": float(work.n), "delta": work.delta}
    lam_u = None
    if config.whittle is not None:
        if "h_out_of_range" in flags:
            raise ValidationError("Whittle contrast needs 0 < H < 1", stage="lambda_whittle")
        lam_u, wdiag = _staged(
            "lambda_whittle", estimate_lambda_whittle, work, (h_hat, sigma_used, config.p), config.whittle
        )
        diagnostics.update(wdiag)
        if wdiag["whittle_boundary_hit"]:
            flags.append("whittle_boundary_hit")
    spec_hat = None
    if 0.0 < h_hat < 1.0:
        spec_hat = FouSpec.single(lam, config.p, sigma_used, h_hat)
    return FitReport(
        h_hat=h_hat,
        sigma_hat=sigma_hat,
        mu2_hat=mu2,
        lambda_plugin=lam,
        p=config.p,
        sigma_fixed=config.assume_unit_sigma,
        lambda_whittle=lam_u,
        spec_hat=spec_hat,
        diagnostics=diagnostics,
        flags=flags,
    )


