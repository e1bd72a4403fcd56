import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from foukit.errors import (
    FouError,
    FrequencyAboveNyquist,
    NonPositiveBase,
    PathTooShort,
    ValidationError,
    ZeroVariation,
)
from foukit.estimate import (
    FitConfig,
    WhittleConfig,
    empirical_second_moment,
    estimate_H,
    estimate_lambda_plugin,
    estimate_lambda_whittle,
    estimate_sigma,
    fit,
    golden_section,
    periodogram,
    whittle_contrast,
    whittle_grid,
)
from foukit.fbm import simulate_fbm
from foukit.filters import binomial_filter, daubechies2_filter
from foukit.model import FouSpec, spectral_density, stationary_variance
from foukit.series import Path
from foukit.simulate import SimulationPlan, simulate_fou

FILTERS = [binomial_filter(2), binomial_filter(3), binomial_filter(5), daubechies2_filter()]


def _fou(seed, n=2000, T=100.0, hurst=0.7, lam=0.8, p=2, sigma=1.0):
    return simulate_fou(SimulationPlan(FouSpec.single(lam, p, sigma, hurst), n, T / n, seed=seed))


@st.composite
def random_paths(draw):
    seed = draw(st.integers(min_value=0, max_value=2**32))
    hurst = draw(st.floats(min_value=0.15, max_value=0.9))
    p = draw(st.integers(min_value=1, max_value=3))
    n = draw(st.integers(min_value=200, max_value=800))
    return _fou(seed, n=n, T=n * 0.05, hurst=hurst, p=p)


# -- invariants ---------------------------------------------------------------


@given(random_paths(), st.sampled_from(FILTERS), st.floats(min_value=-20, max_value=20), st.floats(-100, 100))
def test_hurst_affine_invariance(path, filt, c, b):
    assume(abs(c) > 1e-3)
    h = estimate_H(path, filt)
    moved = Path(c * path.values + b, path.delta)
    assert estimate_H(moved, filt) == pytest.approx(h, abs=1e-9 * (1 + abs(b) / abs(c)))


@given(random_paths(), st.sampled_from(FILTERS), st.floats(min_value=-20, max_value=20))
def test_sigma_equivariance(path, filt, c):
    assume(abs(c) > 1e-3)
    scaled = path.scaled(c)
    try:
        s = estimate_sigma(path, filt, estimate_H(path, filt))
    except FouError as exc:
        with pytest.raises(type(exc)):
            estimate_sigma(scaled, filt, estimate_H(scaled, filt))
        return
    assert estimate_sigma(scaled, filt, estimate_H(scaled, filt)) == pytest.approx(abs(c) * s, rel=1e-12)


@given(random_paths(), st.floats(min_value=1e-3, max_value=1e3), st.integers(1, 4))
def test_plugin_scale_invariance(path, c, p):
    cfg = FitConfig(filter=binomial_filter(2), p=p)
    try:
        a = fit(path, cfg)
    except FouError as exc:
        with pytest.raises(type(exc)):
            fit(path.scaled(c), cfg)
        return
    assert fit(path.scaled(c), cfg).lambda_plugin == pytest.approx(a.lambda_plugin, rel=1e-10)


@given(
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0.05, max_value=10.0),
    st.floats(min_value=0.1, max_value=5.0),
    st.integers(min_value=1, max_value=6),
)
def test_plugin_inverts_variance(hurst, lam, sigma, p):
    mu2 = stationary_variance(FouSpec.single(lam, p, sigma, hurst))
    assert estimate_lambda_plugin(hurst, sigma, mu2, p) == pytest.approx(lam, rel=1e-12)


# -- examples -----------------------------------------------------------------


def test_plugin_examples():
    assert estimate_lambda_plugin(0.5, 1.0, 0.5, 1) == pytest.approx(1.0, rel=1e-15)
    mu2 = stationary_variance(FouSpec.single(0.8, 2, 1.0, 0.7))
    assert estimate_lambda_plugin(0.7, 1.0, mu2, 2) == pytest.approx(0.8, rel=1e-12)
    with pytest.raises(NonPositiveBase):
        estimate_lambda_plugin(0.5, 1.0, 0.0, 1)
    with pytest.raises(NonPositiveBase):
        estimate_lambda_plugin(1.3, 1.0, 1.0, 2)
    with pytest.raises(NonPositiveBase):
        estimate_lambda_plugin(0.0, 1.0, 1.0, 2)
    # out-of-range H is reported, not clamped, when the base stays positive
    lam = estimate_lambda_plugin(-0.2, 1.0, 1.0, 2)
    assert lam > 0 and math.isfinite(lam)


def test_second_moment_examples():
    assert empirical_second_moment(np.zeros(5)) == 0.0
    assert empirical_second_moment(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0


def test_hurst_errors():
    with pytest.raises(ValidationError):
        estimate_H(_fou(0, n=100), binomial_filter(1))
    with pytest.raises(PathTooShort):
        estimate_H(Path(np.arange(4.0), 1.0), binomial_filter(2))
    with pytest.raises(ZeroVariation):
        estimate_H(Path(np.full(50, 1.5), 1.0), binomial_filter(2))


def test_hurst_and_sigma_on_fbm():
    hs, ss = [], []
    for seed in range(100):
        path = simulate_fbm(10_000, 0.01, 1.0, 0.7, seed)
        h = estimate_H(path, binomial_filter(2))
        hs.append(h)
        ss.append(estimate_sigma(path, binomial_filter(2), h))
    assert abs(np.mean(hs) - 0.7) < 0.03
    assert abs(np.mean(ss) - 1.0) < 0.1


def test_hurst_on_fou_half():
    hs = [estimate_H(_fou(s, n=10_000, hurst=0.5), binomial_filter(2)) for s in range(100)]
    assert abs(np.mean(hs) - 0.5) < 0.05


def test_plugin_pipeline_table_three_cell():
    lams = [fit(_fou(s, n=10_000), FitConfig(p=2)).lambda_plugin for s in range(100)]
    assert abs(np.mean(lams) - 0.8) < 0.06
    assert np.std(lams, ddof=1) < 0.2


# -- periodogram and Whittle ----------------------------------------------------


def test_periodogram_examples():
    zero = Path(np.zeros(100), 0.1)
    assert np.all(periodogram(zero, np.linspace(-3, 3, 9)) == 0)
    delta, n, omega = 0.01, 20_000, 3.0
    t = delta * np.arange(1, n + 1)
    path = Path(np.cos(omega * t), delta)
    T = n * delta
    assert periodogram(path, omega) == pytest.approx(T / (8 * math.pi), rel=1e-2)
    with pytest.raises(FrequencyAboveNyquist):
        periodogram(path, 1.01 * math.pi / delta)


@given(random_paths(), st.floats(min_value=0.0, max_value=1.0))
def test_periodogram_even(path, frac):
    x = frac * math.pi / path.delta
    assert periodogram(path, x) == pytest.approx(periodogram(path, -x), rel=1e-10, abs=1e-14)


def test_czt_grid_matches_direct_periodogram():
    path = _fou(3, n=1500)
    cfg = WhittleConfig(n_freq=300)
    xs, pg = whittle_grid(path, cfg)
    assert np.allclose(pg, periodogram(path, xs), rtol=1e-8, atol=1e-14)


def test_contrast_identifies_true_lambda():
    cfg = WhittleConfig()
    wins = 0
    for seed in range(40):
        path = _fou(seed, n=5000)
        fixed = (0.7, 1.0, 2)
        u = whittle_contrast(path, 0.8, fixed, cfg)
        if u <= whittle_contrast(path, 0.3, fixed, cfg) and u <= whittle_contrast(path, 2.0, fixed, cfg):
            wins += 1
    assert wins >= 30


def test_contrast_empty_window_and_refinement():
    path = _fou(5, n=2000)
    fixed = (0.7, 1.0, 2)
    empty = WhittleConfig(freq_min=100.0, freq_max=200.0)
    assert whittle_contrast(path, 0.8, fixed, empty) == 0.0
    with pytest.raises(ValidationError):
        whittle_contrast(path, 10.0, fixed, WhittleConfig())
    base = whittle_contrast(path, 0.8, fixed, WhittleConfig(freq_max=10.0, n_freq=4000))
    fine = whittle_contrast(path, 0.8, fixed, WhittleConfig(freq_max=10.0, n_freq=8000))
    assert fine == pytest.approx(base, rel=1e-3)


@pytest.mark.parametrize("lam0, hurst, p", [(0.8, 0.7, 2), (0.3, 0.4, 1), (2.0, 0.5, 3)])
def test_whittle_recovers_lambda_from_density(lam0, hurst, p):
    spec = FouSpec.single(lam0, p, 1.0, hurst)
    path = Path(np.zeros(5000), 0.02)
    cfg = WhittleConfig(tol=1e-7)
    lam, diag = estimate_lambda_whittle(path, (hurst, 1.0, p), cfg, pgram=lambda xs: spectral_density(spec, xs))
    assert lam == pytest.approx(lam0, abs=1e-6)
    assert diag["whittle_boundary_hit"] == 0.0


def test_whittle_boundary_flag():
    spec = FouSpec.single(8.0, 2, 1.0, 0.7)
    path = Path(np.zeros(5000), 0.02)
    lam, diag = estimate_lambda_whittle(path, (0.7, 1.0, 2), WhittleConfig(), pgram=lambda xs: spectral_density(spec, xs))
    assert lam == 5.0 and diag["whittle_boundary_hit"] == 1.0


def test_golden_section():
    x, fx = golden_section(lambda v: (v - 1.234) ** 2, 0.0, 5.0, 1e-9)
    assert x == pytest.approx(1.234, abs=1e-8)


def test_whittle_config_validation():
    with pytest.raises(ValidationError):
        WhittleConfig(lambda_bounds=(1.0, 0.5))
    with pytest.raises(ValidationError):
        WhittleConfig(n_freq=10)
    with pytest.raises(ValidationError):
        WhittleConfig(freq_min=2.0, freq_max=1.0)


# -- fit ----------------------------------------------------------------------


def test_fit_report_shapes():
    path = _fou(11, n=3000)
    rep = fit(path, FitConfig(filter=binomial_filter(26), p=2, standardize=True, assume_unit_sigma=True))
    assert rep.sigma_fixed and rep.sigma_used == 1.0
    assert rep.spec_hat.sigma == 1.0 and rep.spec_hat.p == 2
    assert rep.mu2_hat == pytest.approx(1.0, abs=1e-12)
    assert {"V_a", "V_a2", "filter_double_sum"} <= set(rep.diagnostics)
    full = fit(path, FitConfig(p=2, whittle=WhittleConfig()))
    assert full.lambda_whittle is not None and full.lambda_whittle > 0


def test_fit_h_independent_of_p():
    path = _fou(12, n=3000)
    a = fit(path, FitConfig(p=1))
    b = fit(path, FitConfig(p=4))
    assert a.h_hat == b.h_hat and a.sigma_hat == b.sigma_hat


def test_fit_stage_labels():
    with pytest.raises(PathTooShort) as info:
        fit(Path(np.zeros(0), 1.0), FitConfig())
    assert info.value.stage == "quadratic_variation"
    with pytest.raises(ZeroVariation) as info:
        fit(Path(np.full(20, 2.0), 1.0), FitConfig())
    assert info.value.stage == "hurst"
