import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foukit.errors import DegeneratePath, ValidationError
from foukit.fbm import FgnGrid, simulate_fgn
from foukit.model import FouSpec, stationary_variance
from foukit.series import Path
from foukit.simulate import (
    SimulationPlan,
    apply_T_lambda,
    default_burn_in,
    fou_from_increments,
    path_standardize,
    simulate_fou,
)


def test_plan_validation_and_description():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    plan = SimulationPlan(spec, 5000, 0.02, seed=3)
    info = plan.describe()
    assert info["T"] == pytest.approx(100.0)
    assert info["burn_in"] >= 20 / 0.8
    assert plan.burn_in_steps == math.ceil(plan.effective_burn_in / 0.02)
    with pytest.raises(ValidationError):
        SimulationPlan(spec, 1, 0.1)
    with pytest.raises(ValidationError):
        SimulationPlan(spec, 10, 0.0)
    with pytest.raises(ValidationError):
        SimulationPlan(spec, 10, 0.1, burn_in=10.0)


def test_default_burn_in_covers_kernel_tail():
    for p in (1, 2, 4, 8):
        spec = FouSpec.single(0.5, p, 1.0, 0.5)
        x = default_burn_in(spec) * 0.5
        assert x >= 20
        # Gamma(p) upper tail at x
        from scipy import special

        assert special.gammaincc(p, x) <= 1.01e-9


def test_apply_zero_and_memoryless():
    assert np.array_equal(apply_T_lambda(np.zeros(10), 1.0, 0.1), np.zeros(10))
    d = np.random.default_rng(0).standard_normal(100)
    out = apply_T_lambda(d, 500.0, 0.1)
    assert np.allclose(out, math.exp(-25.0) * d, rtol=1e-10, atol=0)


@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=40), st.floats(0.01, 10), st.floats(0.001, 1))
def test_apply_matches_recursion(values, lam, delta):
    d = np.array(values)
    y, out = 0.0, []
    for v in d:
        y = math.exp(-lam * delta) * y + math.exp(-lam * delta / 2) * v
        out.append(y)
    assert np.allclose(apply_T_lambda(d, lam, delta), out, rtol=1e-12, atol=1e-12)


def test_ou_variance_from_brownian_increments():
    spec = FouSpec.single(1.0, 1, 1.0, 0.5)
    reps = 200
    moments = np.array([np.mean(simulate_fou(SimulationPlan(spec, 5000, 0.02, seed=s)).values ** 2) for s in range(reps)])
    se = moments.std(ddof=1) / math.sqrt(reps)
    assert abs(moments.mean() - 0.5) < 4 * se


def test_simulation_is_deterministic_and_linear_in_sigma():
    one = FouSpec.single(0.8, 2, 1.0, 0.7)
    two = FouSpec.single(0.8, 2, 2.0, 0.7)
    a = simulate_fou(SimulationPlan(one, 500, 0.1, seed=9))
    b = simulate_fou(SimulationPlan(one, 500, 0.1, seed=9))
    c = simulate_fou(SimulationPlan(two, 500, 0.1, seed=9))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(c.values, 2.0 * a.values)
    assert a.n == 500 and a.delta == 0.1


def test_burn_in_doubling_with_shared_increments():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    delta, n = 0.05, 400
    steps = SimulationPlan(spec, n, delta).burn_in_steps
    drive = 0.05**0.7 * simulate_fgn(FgnGrid(n + 2 * steps, 0.7, 4))
    long = fou_from_increments(spec, drive, delta)[-n:]
    short = fou_from_increments(spec, drive[steps:], delta)[-n:]
    assert np.max(np.abs(long - short)) < 1e-8 * np.max(np.abs(long))


def test_two_lambda_composition_order():
    # both orders applied to the same noise agree up to discretization error
    drive = 0.01**0.6 * simulate_fgn(FgnGrid(60_000, 0.6, 1))
    ab = apply_T_lambda(np.diff(apply_T_lambda(drive, 2.0, 0.01), prepend=0.0), 0.5, 0.01)[-40_000:]
    ba = apply_T_lambda(np.diff(apply_T_lambda(drive, 0.5, 0.01), prepend=0.0), 2.0, 0.01)[-40_000:]
    for lag in range(4):
        ca = np.mean(ab[: ab.size - lag] * ab[lag:])
        cb = np.mean(ba[: ba.size - lag] * ba[lag:])
        assert ca == pytest.approx(cb, rel=1e-2)
    spec = FouSpec(((0.5, 1), (2.0, 1)), 1.0, 0.6)
    assert np.allclose(fou_from_increments(spec, drive, 0.01)[-40_000:], ab)


def test_grid_refinement_second_moment():
    spec = FouSpec.single(0.8, 2, 1.0, 0.7)
    target = stationary_variance(spec)
    for n in (1000, 2000):
        mom = np.array([np.mean(simulate_fou(SimulationPlan(spec, n, 100 / n, seed=s)).values ** 2) for s in range(100)])
        se = mom.std(ddof=1) / 10
        assert abs(mom.mean() - target) < 4 * se + 100 / n * target


def test_standardize():
    with pytest.raises(DegeneratePath):
        path_standardize(Path(np.full(5, 2.0), 1.0))
    x = Path(np.random.default_rng(1).normal(3.0, 2.0, 300), 0.5)
    z = path_standardize(x)
    assert abs(z.values.mean()) < 1e-12
    assert abs(z.values.var() - 1.0) < 1e-12
    assert np.allclose(z.raw(), x.values, rtol=1e-13, atol=1e-12)
    zz = path_standardize(z)
    assert np.allclose(zz.values, z.values, atol=1e-12)
    assert np.allclose(zz.raw(), x.values, rtol=1e-13, atol=1e-12)
