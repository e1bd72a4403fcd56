import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foukit.errors import LengthMismatch, NotPositiveDefinite, ValidationError
from foukit.estimate import FitConfig, fit
from foukit.forecast import (
    ForecastTask,
    durbin_levinson,
    levinson_predictions,
    mae,
    naive_predictions,
    one_step_predictions,
)
from foukit.model import FouSpec, autocovariance_grid
from foukit.series import Path
from foukit.simulate import SimulationPlan, path_standardize, simulate_fou

from oracles import dense_predict


def test_markov_and_white_noise():
    x = np.random.default_rng(0).standard_normal(30)
    rho = 0.6
    g = rho ** np.arange(31)
    assert durbin_levinson(g, x) == pytest.approx(rho * x[-1], rel=1e-12)
    assert durbin_levinson(g, x) == pytest.approx(dense_predict(g, x), rel=1e-12)
    white = np.zeros(31)
    white[0] = 1.0
    assert durbin_levinson(white, x) == 0.0
    assert durbin_levinson(g, []) == 0.0


def test_singular_toeplitz():
    with pytest.raises(NotPositiveDefinite):
        durbin_levinson(np.ones(6), np.arange(5.0))
    with pytest.raises(NotPositiveDefinite):
        durbin_levinson(np.zeros(6), np.arange(5.0))
    with pytest.raises(LengthMismatch):
        durbin_levinson(np.ones(3), np.arange(5.0))


@st.composite
def toeplitz_cases(draw):
    lam = draw(st.floats(min_value=0.2, max_value=3.0))
    p = draw(st.integers(min_value=1, max_value=3))
    hurst = draw(st.floats(min_value=0.1, max_value=0.9))
    delta = draw(st.sampled_from([0.05, 0.1, 0.5]))
    n = draw(st.integers(min_value=1, max_value=60))
    seed = draw(st.integers(min_value=0, max_value=1000))
    return FouSpec.single(lam, p, 1.0, hurst), delta, n, seed


@given(toeplitz_cases())
def test_levinson_matches_dense_solve(case):
    spec, delta, n, seed = case
    g = autocovariance_grid(spec, delta, n + 1)
    x = np.random.default_rng(seed).standard_normal(n)
    try:
        ours = durbin_levinson(g, x)
    except NotPositiveDefinite:
        return
    assert ours == pytest.approx(dense_predict(g, x), rel=1e-8, abs=1e-8 * np.abs(x).max())


def test_growing_window_equals_repeated_calls():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    g = autocovariance_grid(spec, 0.2, 41)
    x = np.random.default_rng(2).standard_normal(40)
    batch = levinson_predictions(g, x, start=30)
    single = [durbin_levinson(g, x[:t]) for t in range(30, 41)]
    assert np.allclose(batch, single, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValidationError):
        levinson_predictions(g, x, start=0)


def test_ou_prediction():
    lam, delta = 1.3, 0.1
    spec = FouSpec.single(lam, 1, 1.0, 0.5)
    path = simulate_fou(SimulationPlan(spec, 200, delta, seed=5))
    preds = one_step_predictions(ForecastTask(spec, path, 10))
    expected = math.exp(-lam * delta) * path.values[-11:-1]
    assert np.allclose(preds, expected, atol=1e-6)


def test_single_regressor_case():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    path = Path(np.array([1.7, -0.2]), 0.5)
    g = autocovariance_grid(spec, 0.5, 2)
    pred = one_step_predictions(ForecastTask(spec, path, 1))
    assert pred[0] == pytest.approx(g[1] / g[0] * 1.7, rel=1e-12)


def test_fast_decay_predicts_zero():
    spec = FouSpec.single(500.0, 1, 1.0, 0.5)
    path = Path(np.random.default_rng(3).standard_normal(50), 1.0)
    preds = one_step_predictions(ForecastTask(spec, path, 10))
    assert np.max(np.abs(preds)) < 1e-10


def test_task_validation():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    path = Path(np.zeros(10), 1.0)
    for m in (0, 10, 11):
        with pytest.raises(ValidationError):
            ForecastTask(spec, path, m)


def test_mae_examples():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae([1.0, 2.0], [0.0, 0.0]) == 1.5
    with pytest.raises(LengthMismatch):
        mae([1.0, 2.0], [1.0])


@given(st.floats(min_value=-50, max_value=50), st.integers(0, 500))
def test_predictions_linear_in_observations(c, seed):
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    x = np.random.default_rng(seed).standard_normal(40)
    a = one_step_predictions(ForecastTask(spec, Path(x, 0.25), 8))
    b = one_step_predictions(ForecastTask(spec, Path(c * x, 0.25), 8))
    assert np.allclose(b, c * a, rtol=1e-12, atol=1e-12 * (1 + abs(c)))


def test_back_transform_consistency():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    raw = Path(5.0 + 3.0 * simulate_fou(SimulationPlan(spec, 300, 0.1, seed=8)).values, 0.1)
    z = path_standardize(raw)
    m = 30
    preds_raw = one_step_predictions(ForecastTask(spec, z, m))
    preds_z = (preds_raw - z.offset) / z.scale
    err_raw = mae(raw.values[-m:], preds_raw)
    err_z = mae(z.values[-m:], preds_z)
    assert err_raw == pytest.approx(z.scale * err_z, rel=1e-12)
    assert np.allclose(naive_predictions(z, m), raw.values[-m - 1 : -1], rtol=1e-13)


def test_fitted_model_beats_naive_predictor():
    truth = FouSpec.single(0.8, 2, 1.0, 0.7)
    wins, reps, m = 0, 100, 60
    for seed in range(reps):
        path = simulate_fou(SimulationPlan(truth, 300, 0.1, seed=seed))
        rep = fit(path, FitConfig(p=2, standardize=True, assume_unit_sigma=True))
        z = path_standardize(path)
        preds = one_step_predictions(ForecastTask(rep.spec_hat, z, m))
        actual = path.values[-m:]
        wins += mae(actual, preds) < mae(actual, naive_predictions(path, m))
    assert wins >= 70
