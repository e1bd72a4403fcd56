"""FOU(p) model: parameters, closed forms and spectral quadratures.

The spectral density

    f(x) = σ² Γ(2H+1) sin(πH) |x|^{2p-1-2H} / (2π Π_i (λ_i² + x²)^{p_i})

has an algebraic endpoint at ``x = 0`` (exponent ``2p-1-2H > -1``) and an
algebraic tail ``x^{-1-2H}``.  Integrals of it are split at ``X = λ_max``:
the head uses QUADPACK's algebraic endpoint weight, and the tail is mapped
through ``x = 1/u`` onto ``[0, 1/X]`` where it becomes ``u^{2H-1}`` times a
smooth function, so no truncation is needed.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import InvalidSpec, QuadratureNotConverged, SingularAtZero, UnsupportedModel

__all__ = [
    "FouSpec",
    "ki_coefficients",
    "stationary_variance",
    "g_closed_form",
    "g_quadrature_oracle",
    "spectral_density",
    "spectral_integral_variance",
    "autocovariance",
    "autocovariance_grid",
]

# The autocovariance's Fourier-tail rule starts at this multiple of λ_max.
TAIL_START = 100.0


@dataclass(frozen=True)
class FouSpec:
    """``FOU(λ_1^(p_1), ..., λ_q^(p_q), σ, H)``.

    ``components`` holds ``(λ_i, p_i)`` pairs with strictly increasing ``λ_i``.
    """

    components: tuple[tuple[float, int], ...]
    sigma: float = 1.0
    hurst: float = 0.5

    def __post_init__(self):
        comps = tuple((float(lam), int(mult)) for lam, mult in self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "hurst", float(self.hurst))
        if not comps:
            raise InvalidSpec("at least one (lambda, multiplicity) component required", pointer="/lambdas")
        for idx, (lam, mult) in enumerate(comps):
            if not (math.isfinite(lam) and lam > 0):
                raise InvalidSpec(f"lambda must be positive, got {lam}", pointer=f"/lambdas/{idx}/value")
            if mult < 1:
                raise InvalidSpec(f"multiplicity must be >= 1, got {mult}", pointer=f"/lambdas/{idx}/multiplicity")
            if idx and lam <= comps[idx - 1][0]:
                raise InvalidSpec("lambdas must be strictly increasing", pointer=f"/lambdas/{idx}/value")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidSpec(f"sigma must be positive, got {self.sigma}", pointer="/sigma")
        if not 0.0 < self.hurst < 1.0:
            raise InvalidSpec(f"hurst must lie in (0, 1), got {self.hurst}", pointer="/hurst")

    @classmethod
    def single(cls, lam: float, p: int = 1, sigma: float = 1.0, hurst: float = 0.5) -> "FouSpec":
        """``FOU(λ^(p), σ, H)``."""
        return cls(((lam, p),), sigma, hurst)

    @property
    def lambdas(self) -> tuple[float, ...]:
        return tuple(lam for lam, _ in self.components)

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.components)

    @property
    def p(self) -> int:
        return sum(self.multiplicities)

    @property
    def q(self) -> int:
        return len(self.components)

    @property
    def exponent(self) -> float:
        """Power of ``|x|`` in the spectral density near zero, ``2p - 1 - 2H``."""
        return 2 * self.p - 1 - 2 * self.hurst

    def with_sigma(self, sigma: float) -> "FouSpec":
        return FouSpec(self.components, sigma, self.hurst)

    def to_json(self) -> dict:
        return {
            "lambdas": [{"value": lam, "multiplicity": m} for lam, m in self.components],
            "sigma": self.sigma,
            "hurst": self.hurst,
        }

    @classmethod
    def from_json(cls, obj) -> "FouSpec":
        if isinstance(obj, (str, bytes)):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise InvalidSpec(f"spec is not valid JSON: {exc.msg}", pointer="") from None
        if not isinstance(obj, dict):
            raise InvalidSpec("spec must be a JSON object", pointer="")
        for key in ("lambdas", "sigma", "hurst"):
            if key not in obj:
                raise InvalidSpec(f"missing field {key!r}", pointer=f"/{key}")
        lambdas = obj["lambdas"]
        if not isinstance(lambdas, list):
            raise InvalidSpec("lambdas must be a list", pointer="/lambdas")
        comps = []
        for idx, item in enumerate(lambdas):
            if not isinstance(item, dict) or "value" not in item:
                raise InvalidSpec("each lambda needs a 'value'", pointer=f"/lambdas/{idx}")
            value, mult = item["value"], item.get("multiplicity", 1)
            if not _is_number(value):
                raise InvalidSpec("lambda value must be a number", pointer=f"/lambdas/{idx}/value")
            if isinstance(mult, bool) or not isinstance(mult, int):
                raise InvalidSpec("multiplicity must be an integer", pointer=f"/lambdas/{idx}/multiplicity")
            comps.append((value, mult))
        for key in ("sigma", "hurst"):
            if not _is_number(obj[key]):
                raise InvalidSpec(f"{key} must be a number", pointer=f"/{key}")
        return cls(tuple(comps), obj["sigma"], obj["hurst"])


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def ki_coefficients(spec: FouSpec) -> np.ndarray:
    """``K_i = 1 / Π_{j≠i} (1 - λ_j/λ_i)``; ``(1,)`` when ``q = 1``."""
    lam = np.asarray(spec.lambdas)
    out = np.empty(spec.q)
    for i in range(spec.q):
        others = np.delete(lam, i)
        out[i] = 1.0 / np.prod(1.0 - others / lam[i])
    return out


def g_closed_form(hurst: float, p: int) -> float:
    """``g(H) = Π_{i=1}^{p-1} (i - H) / (p-1)!`` (1 for ``p = 1``)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    prod = 1.0
    for i in range(1, p):
        prod *= i - hurst
    return prod / math.factorial(p - 1)


def stationary_variance(spec: FouSpec) -> float:
    """Closed-form ``Var(X_t) = σ² H Γ(2H) g(H) / λ^{2H}`` for a single-λ spec."""
    if spec.q != 1:
        raise UnsupportedModel("closed-form variance needs a single lambda; use spectral_integral_variance")
    lam = spec.lambdas[0]
    h = spec.hurst
    return spec.sigma**2 * h * special.gamma(2 * h) * g_closed_form(h, spec.p) / lam ** (2 * h)


# -- quadrature helpers -------------------------------------------------------


def _quad(func, a, b, *, what: str, epsabs=1e-13, epsrel=1e-11, limit=200, **kw) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1, **kw)
    value, abserr = out[0], out[1]
    # QUADPACK appends a message when it stops short of the requested accuracy;
    # accept the result only if its own error estimate is still tiny.
    complaint = out[3] if len(out) > 3 else None
    if not np.isfinite(value) or (complaint and abserr > max(1e3 * epsabs, 1e-8 * abs(value))):
        raise QuadratureNotConverged(f"{what}: {complaint or 'non-finite value'} (estimate {value:.6g} ± {abserr:.2g})")
    return value


def g_quadrature_oracle(hurst: float, p: int, *, epsrel: float = 1e-10) -> float:
    """Evaluate ``g(H)`` from its double-integral definition by iterated quadrature.

    The binomially weighted sum of ``g_ij`` collapses to a single integrand,
    ``(2H-1)/Γ(2H) ∫∫ L(u) L(v) e^{-u-v} |u-v|^{2H-2} du dv`` with
    ``L(u) = Σ_i C(p-1, i) (-u)^i / i!``.  The inner integral treats the
    ``|u - v|^{2H-2}`` diagonal singularity with algebraic endpoint weights.
    Valid only for ``1/2 < H < 1``, where the diagonal singularity is integrable.
    """
    if not 0.5 < hurst < 1.0:
        raise ValueError("quadrature representation of g requires 1/2 < H < 1")
    if p < 2:
        raise ValueError("g is defined through the double integral only for p >= 2")
    beta = 2.0 * hurst - 2.0
    coef = np.array([math.comb(p - 1, i) * (-1) ** i / math.factorial(i) for i in range(p)])

    def weight(x):
        return np.polyval(coef[::-1], x) * math.exp(-x)

    def inner(u):
        total = 0.0
        if u > 0:
            # (u - v)^beta on [0, u]
            total += _quad(weight, 0.0, u, weight="alg", wvar=(0.0, beta), what="g inner left", epsrel=epsrel)
        # (v - u)^beta on [u, u + 1], then a smooth tail
        total += _quad(weight, u, u + 1.0, weight="alg", wvar=(beta, 0.0), what="g inner right", epsrel=epsrel)
        total += _quad(
            lambda v: weight(v) * (v - u) ** beta, u + 1.0, np.inf, what="g inner tail", epsrel=epsrel
        )
        return total

    outer = lambda u: weight(u) * inner(u)  # noqa: E731
    value = 0.0
    for a, b in ((0.0, 1.0), (1.0, 8.0), (8.0, 40.0)):
        value += _quad(outer, a, b, what="g outer", epsrel=epsrel)
    value += _quad(outer, 40.0, np.inf, what="g outer tail", epsrel=epsrel)
    return (2.0 * hurst - 1.0) / special.gamma(2.0 * hurst) * value


def _density_const(spec: FouSpec) -> float:
    h = spec.hurst
    return spec.sigma**2 * special.gamma(2 * h + 1) * math.sin(math.pi * h) / (2 * math.pi)


def spectral_density(spec: FouSpec, x):
    """``f(x)`` evaluated exactly as written; scalar or array input.

    Raises
    ------
    SingularAtZero
        If ``x = 0`` is requested while the exponent ``2p-1-2H`` is negative.
    """
    xs = np.abs(np.asarray(x, dtype=float))
    alpha = spec.exponent
    if alpha < 0 and np.any(xs == 0):
        raise SingularAtZero(f"density is singular at x = 0 (exponent {alpha:.3g})")
    denom = np.ones_like(xs)
    for lam, mult in spec.components:
        denom = denom * (lam**2 + xs**2) ** mult
    out = _density_const(spec) * xs**alpha / denom
    return float(out) if out.ndim == 0 else out


def _head_smooth(spec: FouSpec):
    """``f(x) / x^{2p-1-2H}`` as a callable."""
    c = _density_const(spec)
    comps = spec.components

    def h(x):
        d = 1.0
        for lam, mult in comps:
            d *= (lam * lam + x * x) ** mult
        return c / d

    return h


def _tail_smooth(spec: FouSpec):
    """``f(1/u) u^{-2} / u^{2H-1}`` as a callable."""
    c = _density_const(spec)
    comps = spec.components

    def t(u):
        d = 1.0
        for lam, mult in comps:
            d *= (1.0 + lam * lam * u * u) ** mult
        return c / d

    return t


@lru_cache(maxsize=4096)
def _spectral_mass(spec: FouSpec, epsrel: float) -> float:
    split = max(spec.lambdas)
    head = _quad(
        _head_smooth(spec), 0.0, split, weight="alg", wvar=(spec.exponent, 0.0),
        what="spectral head", epsrel=epsrel,
    )
    tail = _quad(
        _tail_smooth(spec), 0.0, 1.0 / split, weight="alg", wvar=(2 * spec.hurst - 1, 0.0),
        what="spectral tail", epsrel=epsrel,
    )
    return 2.0 * (head + tail)


def spectral_integral_variance(spec: FouSpec, *, epsrel: float = 1e-11) -> float:
    """Total spectral mass ``∫ f(x) dx``, i.e. the stationary variance for any ``q``."""
    return _spectral_mass(spec, float(epsrel))


def _cosine_transform(spec: FouSpec, tau: float) -> float:
    h = _head_smooth(spec)
    # keep the head short enough that cos(τx) stays smooth on it
    split = min(max(spec.lambdas), math.pi / tau)
    head = _quad(
        lambda x: h(x) * math.cos(tau * x), 0.0, split, weight="alg", wvar=(spec.exponent, 0.0),
        what="acf head",
    )
    alpha = spec.exponent
    g = lambda x: h(x) * x**alpha  # noqa: E731
    # QAWF's first cycle must not straddle the spectral peak, so cover the bulk
    # of the mass with a finite oscillatory rule before the Fourier tail.
    far = max(split, TAIL_START * max(spec.lambdas))
    mid = 0.0
    if far > split:
        mid = _quad(g, split, far, weight="cos", wvar=tau, what="acf middle")
    tail = _quad(g, far, np.inf, weight="cos", wvar=tau, what="acf tail", epsabs=1e-12)
    return 2.0 * (head + mid + tail)


@lru_cache(maxsize=65536)
def _autocov_cached(spec: FouSpec, tau: float) -> float:
    if tau == 0.0:
        return spectral_integral_variance(spec)
    return _cosine_transform(spec, tau)


def autocovariance(spec: FouSpec, tau) -> float | np.ndarray:
    """``γ(τ) = ∫ f(x) cos(τx) dx`` by numerical Fourier inversion; even in ``τ``."""
    taus = np.abs(np.asarray(tau, dtype=float))
    if taus.ndim == 0:
        return _autocov_cached(spec, float(taus))
    return np.array([_autocov_cached(spec, float(t)) for t in taus.ravel()]).reshape(taus.shape)


@lru_cache(maxsize=256)
def _grid(spec: FouSpec, delta: float, nlags: int) -> np.ndarray:
    out = np.array([_autocov_cached(spec, k * delta) for k in range(nlags)])
    out.setflags(write=False)
    return out


def autocovariance_grid(spec: FouSpec, delta: float, nlags: int) -> np.ndarray:
    """Read-only ``γ(kΔ)`` for ``k = 0..nlags-1``, cached per ``(spec, Δ, nlags)``."""
    return _grid(spec, float(delta), int(nlags))

