"""Local linear TVP-AR estimation tests against known coefficient curves."""

import numpy as np
import pytest

from tvewd.locreg import (
    EstimationError,
    KernelSpec,
    boundary_fit,
    center,
    export_curves,
    fit_tvp_ar,
    kernel_weights,
    local_level,
    local_linear,
)
from tvewd.sim import Curve, TvpArScenario, simulate

EPA = KernelSpec("epanechnikov", 0.3)


def ar1_path(phi, T, seed, intercept=0.0, sigma=1.0):
    rng = np.random.default_rng(seed)
    v = np.empty(T)
    v[0] = intercept / (1 - phi) if phi != 1 else 0.0
    eps = rng.standard_normal(T) * sigma
    for t in range(1, T):
        v[t] = intercept + phi * v[t - 1] + eps[t]
    return v


def test_kernel_weights_values():
    x = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
    epa = kernel_weights(x, "epanechnikov")
    assert epa.tolist() == [0.0, 0.0, 0.75, 0.75 * 0.75, 0.0, 0.0]
    uni = kernel_weights(x, "uniform")
    assert uni.tolist() == [0.0, 0.5, 0.5, 0.5, 0.5, 0.0]
    gau = kernel_weights(np.array([0.0]), "gaussian")
    assert gau[0] == pytest.approx(1.0 / np.sqrt(2 * np.pi), rel=1e-15)
    with pytest.raises(ValueError, match="kernel family"):
        kernel_weights(x, "triangular")


def test_kernel_spec_validation():
    with pytest.raises(ValueError, match="bandwidth"):
        KernelSpec("epanechnikov", 0.0)
    with pytest.raises(ValueError, match="bandwidth"):
        KernelSpec("epanechnikov", 1.5)
    with pytest.raises(ValueError, match="family"):
        KernelSpec("tricube", 0.3)


def test_uniform_full_bandwidth_equals_global_least_squares():
    """With every weight equal, the local solve is plain OLS of the
    augmented design [X, (tau-u)X]; compare against an independent solve."""
    rng = np.random.default_rng(7)
    T = 300
    X = np.column_stack([np.ones(T), rng.standard_normal(T)])
    beta = np.array([1.0, 2.0])
    tau = np.arange(1, T + 1) / T
    y = X @ beta + 0.5 * (tau - 0.5) * X[:, 1] + 0.1 * rng.standard_normal(T)
    for u in (0.3, 0.5, 0.8):
        levels, slopes, _ = local_linear(y, X, tau, u, KernelSpec("uniform", 1.0))
        Z = np.column_stack([X, (tau - u)[:, None] * X])
        theta = np.linalg.lstsq(Z, y, rcond=None)[0]
        np.testing.assert_allclose(np.concatenate([levels, slopes]), theta, rtol=1e-8, atol=1e-10)


def test_local_solve_satisfies_weighted_normal_equations():
    rng = np.random.default_rng(8)
    T = 400
    v = ar1_path(0.6, T, seed=8)
    y = v[1:]
    X = np.column_stack([np.ones(T - 1), v[:-1]])
    tau = np.arange(2, T + 1) / T
    for u in (0.25, 0.6, 1.0):
        levels, slopes, _ = local_linear(y, X, tau, u, EPA)
        w = kernel_weights((tau - u) / EPA.bandwidth, "epanechnikov")
        Z = np.column_stack([X, (tau - u)[:, None] * X])
        theta = np.concatenate([levels, slopes])
        resid = y - Z @ theta
        normal_eq = Z.T @ (w * resid)
        scale = np.linalg.norm(Z.T @ (w * y))
        assert np.linalg.norm(normal_eq) < 1e-8 * max(scale, 1.0)


def test_constant_ar1_coefficient_recovery():
    """Constant AR(1) with phi = 0.5, T = 2000, b = 0.3: mean absolute error
    of the estimated coefficient curve stays below 0.06 in most replications."""
    hits = 0
    for seed in range(10):
        v = ar1_path(0.5, 2000, seed=100 + seed)
        fit = fit_tvp_ar(v, 1, EPA)
        if float(np.mean(np.abs(fit.phi[:, 1] - 0.5))) < 0.06:
            hits += 1
    assert hits >= 9


def test_sinusoid_coefficient_recovery_single_run():
    scen = TvpArScenario(
        p=1,
        T=4000,
        coefficients=(Curve("sinusoid", {"base": 0.5, "amplitude": 0.3, "frequency": 1.0}),),
        seed=42,
    )
    res = simulate(scen)
    fit = fit_tvp_ar(res.series.values, 1, KernelSpec("epanechnikov", 0.1))
    truth = 0.5 + 0.3 * np.sin(2 * np.pi * fit.grid)
    mae = float(np.mean(np.abs(fit.phi[:, 1] - truth)))
    assert mae < 0.06


def test_iid_noise_coefficient_near_zero_interior():
    misses = 0
    for seed in range(5):
        rng = np.random.default_rng(200 + seed)
        v = rng.standard_normal(2000)
        fit = fit_tvp_ar(v, 1, EPA)
        interior = (fit.grid >= 0.3) & (fit.grid <= 0.7)
        if float(np.max(np.abs(fit.phi[interior, 1]))) >= 0.1:
            misses += 1
    assert misses == 0


def test_fit_shapes_and_default_grid():
    v = ar1_path(0.5, 500, seed=9)
    fit = fit_tvp_ar(v, 2, EPA)
    T = 500
    assert fit.grid.shape == (T - 2,)
    np.testing.assert_allclose(fit.grid, np.arange(3, T + 1) / T, rtol=0, atol=0)
    assert fit.phi.shape == (T - 2, 3)
    assert fit.residuals.shape == (T - 2,)
    assert np.all(np.isfinite(fit.phi))
    # residual definition: v_t minus the fit at the observation's own u
    t = 100  # row index into the grid
    X_row = np.array([1.0, v[t + 1], v[t]])
    assert fit.residuals[t] == pytest.approx(v[t + 2] - X_row @ fit.phi[t], abs=1e-12)


def test_custom_grid_interpolates_curves():
    v = ar1_path(0.5, 600, seed=10)
    coarse = fit_tvp_ar(v, 1, EPA, grid=np.linspace(0.1, 1.0, 10))
    assert coarse.phi.shape == (10, 2)
    assert len(coarse.residuals) == 599
    fine = fit_tvp_ar(v, 1, EPA)
    # curves agree where the coarse grid hits the same evaluation points
    for g, u in enumerate(coarse.grid):
        idx = np.argmin(np.abs(fine.grid - u))
        if abs(fine.grid[idx] - u) < 1e-12:
            np.testing.assert_allclose(coarse.phi[g], fine.phi[idx], rtol=1e-10)


def test_scale_equivariance():
    v = ar1_path(0.7, 800, seed=11, intercept=3.0)
    c = 4.5
    fit1 = fit_tvp_ar(v, 1, EPA)
    fit2 = fit_tvp_ar(c * v, 1, EPA)
    np.testing.assert_allclose(fit2.phi[:, 0], c * fit1.phi[:, 0], rtol=1e-10)
    np.testing.assert_allclose(fit2.phi[:, 1], fit1.phi[:, 1], rtol=0, atol=1e-10)
    np.testing.assert_allclose(fit2.residuals, c * fit1.residuals, rtol=1e-10, atol=1e-12)


def test_preconditions_enforced():
    v = ar1_path(0.5, 30, seed=12)
    with pytest.raises(EstimationError, match="too short"):
        fit_tvp_ar(v, 1, EPA)
    with pytest.raises(EstimationError, match="order must be >= 1"):
        fit_tvp_ar(ar1_path(0.5, 500, seed=13), 0, EPA)
    with pytest.raises(EstimationError, match="bandwidth"):
        fit_tvp_ar(ar1_path(0.5, 500, seed=14), 1, KernelSpec("epanechnikov", 0.005))


def test_constant_series_is_singular():
    v = np.full(300, 5.0)
    with pytest.raises(EstimationError, match="condition|singular"):
        fit_tvp_ar(v, 1, EPA)


def test_boundary_fit_is_one_sided_and_matches_last_grid_point():
    v = ar1_path(0.6, 700, seed=15)
    levels, slopes, cond = boundary_fit(v, 1, EPA)
    fit = fit_tvp_ar(v, 1, EPA)
    np.testing.assert_allclose(levels, fit.phi[-1], rtol=0, atol=0)  # same solve
    # left boundary uses the first grid point
    levels0, _, _ = boundary_fit(v, 1, EPA, at_end=False)
    np.testing.assert_allclose(levels0, fit.phi[0], rtol=0, atol=0)


def test_local_level_constant_and_zero_series():
    zeros = np.zeros(200)
    curve = local_level(zeros, EPA)
    assert np.all(curve == 0.0)
    const = np.full(200, 7.5)
    curve = local_level(const, EPA)
    np.testing.assert_allclose(curve, 7.5, rtol=1e-10)
    assert local_level(const, EPA, u=1.0) == pytest.approx(7.5, rel=1e-10)


def test_local_level_tracks_linear_trend_exactly():
    # a straight line is inside the local linear model class at every u
    T = 300
    tau = np.arange(1, T + 1) / T
    v = 2.0 + 3.0 * tau
    curve = local_level(v, EPA)
    np.testing.assert_allclose(curve, v, rtol=1e-9)


def test_center_zero_mean_and_length():
    scen = TvpArScenario(
        p=1,
        T=2000,
        coefficients=(Curve("constant", {"value": 0.5}),),
        intercept=Curve("linear", {"start": 2.0, "end": 6.0}),
        seed=21,
    )
    res = simulate(scen)
    fit = fit_tvp_ar(res.series.values, 1, EPA)
    centered = center(fit)
    assert len(centered) == len(res.series.values)
    assert abs(float(np.mean(centered.values))) < 0.05 * float(np.std(res.series.values))
    np.testing.assert_allclose(
        centered.values, res.series.values - centered.trend, rtol=0, atol=0
    )


def test_center_recovers_local_mean_of_persistent_series():
    # the trend curve approximates the unconditional local mean, not the
    # regression intercept: AR(1) with intercept 2, phi 0.9 has mean 20
    v = ar1_path(0.9, 3000, seed=22, intercept=2.0)
    fit = fit_tvp_ar(v, 1, EPA)
    trend = center(fit).trend
    assert abs(float(np.mean(trend)) - 20.0) < 2.0


def test_export_curves(tmp_path):
    v = ar1_path(0.5, 400, seed=23)
    fit = fit_tvp_ar(v, 1, EPA)
    path = str(tmp_path / "curves.csv")
    export_curves(fit, path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "u,phi0,phi1"
    assert len(lines) == 1 + len(fit.grid)
    first = lines[1].split(",")
    assert float(first[0]) == fit.grid[0]
    assert float(first[1]) == fit.phi[0, 0]
    assert float(first[2]) == fit.phi[0, 1]
