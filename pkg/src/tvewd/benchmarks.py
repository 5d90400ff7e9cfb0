"""Benchmark forecasting models sharing the package's estimation machinery.

Models (names match the forecast CSV contract):
    HAR    static heterogeneous autoregression, direct h-step OLS
    TVHAR  same design, coefficients from the local linear boundary fit
    TVAR   time-varying AR(p), iterated recursion with frozen boundary
           coefficients and zero future shocks
    EWD    time-invariant multiscale pipeline on a global OLS AR(p) fit
    TVEWD  the full time-varying multiscale pipeline

Every model consumes one in-sample window and emits point forecasts for the
requested horizons, which is the contract the rolling evaluation harness
drives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forecast import (
    ForecastConfig,
    combine_forecast,
    estimate_weights,
    forecast_scale,
    tvewd_forecast_window,
)
from .locreg import (
    COND_THRESHOLD,
    EstimationError,
    KernelSpec,
    center,
    fit_tvp_ar,
    local_level,
    local_linear,
)
from .wold import MultiscaleConfig, decompose_static

__all__ = [
    "MODEL_NAMES",
    "ModelSpec",
    "har_terms",
    "har_fit_forecast",
    "tvhar_fit_forecast",
    "tvar_forecast",
    "ewd_static_forecast",
]

MODEL_NAMES = ("HAR", "TVHAR", "TVAR", "EWD", "TVEWD")
HAR_LAGS = (1, 5, 22)


def har_terms(values: np.ndarray, t: int) -> tuple[float, float, float]:
    """Daily, weekly and monthly terms at 1-based time t (t >= 22).

    daily = v_t, weekly = mean(v_{t-4..t}), monthly = mean(v_{t-21..t}).
    """
    values = np.asarray(values, dtype=float)
    if t < HAR_LAGS[2]:
        raise ValueError(f"need t >= {HAR_LAGS[2]}, got t={t}")
    if t > len(values):
        raise ValueError(f"t={t} beyond series length {len(values)}")
    i = t - 1
    daily = float(values[i])
    weekly = float(np.mean(values[i - 4 : i + 1]))
    monthly = float(np.mean(values[i - 21 : i + 1]))
    return daily, weekly, monthly


def _har_design(values: np.ndarray, h: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Direct h-step design: y = v_{t+h}, rows t = 22..T-h (1-based)."""
    T = len(values)
    if T - h < HAR_LAGS[2]:
        raise EstimationError(f"window of {T} observations too short for horizon {h}")
    t_idx = np.arange(HAR_LAGS[2] - 1, T - h)  # 0-based predictor rows
    daily = values[t_idx]
    csum = np.concatenate(([0.0], np.cumsum(values)))
    weekly = (csum[t_idx + 1] - csum[t_idx - 4]) / 5.0
    monthly = (csum[t_idx + 1] - csum[t_idx - 21]) / 22.0
    X = np.column_stack([np.ones(len(t_idx)), daily, weekly, monthly])
    y = values[t_idx + h]
    tau = (t_idx + 1).astype(float) / T
    return y, X, tau


def _check_har_window(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if len(values) < 100:
        raise EstimationError(f"HAR window must hold at least 100 observations, got {len(values)}")
    return values


def har_fit_forecast(values: np.ndarray, h: int) -> tuple[float, np.ndarray]:
    """Static HAR: OLS of v_{t+h} on (1, daily, weekly, monthly).

    Returns (forecast from the terms at t = T, coefficient vector).
    """
    values = _check_har_window(values)
    y, X, _ = _har_design(values, h)
    coef, _, rank, svals = np.linalg.lstsq(X, y, rcond=None)
    smin = svals[-1] if len(svals) == X.shape[1] else 0.0
    cond = float("inf") if smin <= 0.0 else float(svals[0] / smin)
    if rank < X.shape[1] or cond > COND_THRESHOLD:
        raise EstimationError(f"singular HAR design: condition number {cond:.3g}")
    x_T = np.array([1.0, *har_terms(values, len(values))])
    return float(x_T @ coef), coef


def tvhar_fit_forecast(values: np.ndarray, h: int, kernel: KernelSpec) -> tuple[float, np.ndarray]:
    """Time-varying HAR: boundary (u = 1) local linear fit of the HAR design."""
    values = _check_har_window(values)
    y, X, tau = _har_design(values, h)
    levels, _, _ = local_linear(y, X, tau, 1.0, kernel)
    x_T = np.array([1.0, *har_terms(values, len(values))])
    return float(x_T @ levels), levels


def tvar_forecast(
    values: np.ndarray, p: int, horizons: tuple[int, ...], kernel: KernelSpec
) -> dict[int, float]:
    """Time-varying AR(p): iterate the recursion with boundary coefficients.

    The series is centered with the estimated local level (trend) curve,
    the AR recursion is iterated on centered values with coefficients
    frozen at u = 1 and future shocks set to zero, and the boundary level
    is added back.  p = 0 degenerates to the local level (trend-only)
    forecast.
    """
    values = np.asarray(values, dtype=float)
    if p == 0:
        return {h: local_level(values, kernel, u=1.0) for h in horizons}
    fit = fit_tvp_ar(values, p, kernel)
    centered = center(fit)
    trend = float(centered.trend[-1])  # local level at the u = 1 boundary
    coefs = fit.phi[-1, 1:]  # boundary AR coefficients
    buf = list(centered.values[-p:])  # most recent last
    out: dict[int, float] = {}
    for step in range(1, max(horizons) + 1):
        nxt = float(np.dot(coefs, buf[::-1][:p]))
        buf.append(nxt)
        if step in horizons:
            out[step] = trend + nxt
    return {h: out[h] for h in horizons}


def _ols_ar(values: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Global OLS AR(p) with intercept; returns (coefficients, residuals)."""
    T = len(values)
    if T <= 10 * (p + 1):
        raise EstimationError(f"series too short for OLS AR({p}): {T} observations")
    y = values[p:]
    X = np.empty((T - p, p + 1))
    X[:, 0] = 1.0
    for i in range(1, p + 1):
        X[:, i] = values[p - i : T - i]
    coef, _, rank, svals = np.linalg.lstsq(X, y, rcond=None)
    smin = svals[-1] if len(svals) == p + 1 else 0.0
    cond = float("inf") if smin <= 0.0 else float(svals[0] / smin)
    if rank < p + 1 or cond > COND_THRESHOLD:
        raise EstimationError(f"singular AR design: condition number {cond:.3g}")
    return coef, y - X @ coef


def ewd_static_forecast(
    values: np.ndarray,
    p: int,
    scales: MultiscaleConfig,
    horizons: tuple[int, ...],
    weight_window: int | None = None,
) -> dict[int, float]:
    """Static multiscale pipeline: OLS AR(p), then the same decomposition,
    weight estimation and per-scale forecasting with time-invariant alpha.

    The static analog of the local level is the global OLS straight line in
    rescaled time; centering and the trend forecast use that line.
    """
    values = np.asarray(values, dtype=float)
    coef, residuals = _ols_ar(values, p)
    T = len(values)
    tau = np.arange(1, T + 1, dtype=float) / T
    line, *_ = np.linalg.lstsq(np.column_stack([np.ones(T), tau]), values, rcond=None)
    trend_curve = line[0] + line[1] * tau
    trend = float(trend_curve[-1])
    decomp = decompose_static(coef[1:], residuals, scales)
    centered_rows = values[p:] - trend_curve[p:]
    weights = estimate_weights(centered_rows, decomp.components, weight_window)
    out: dict[int, float] = {}
    for h in horizons:
        parts = np.array(
            [
                forecast_scale(decomp.betas[j - 1][-1], decomp.innovations[j - 1], j, h)
                for j in range(1, scales.J + 1)
            ]
        )
        out[h] = combine_forecast(trend, weights.weights, parts)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """A named, fully-configured forecasting model for the rolling harness."""

    name: str
    p: int = 1
    kernel: KernelSpec = field(default_factory=KernelSpec)
    scales: MultiscaleConfig = field(default_factory=MultiscaleConfig)
    weight_window: int | None = None
    label: str | None = None

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}, expected one of {MODEL_NAMES}")

    @property
    def display(self) -> str:
        return self.label or self.name

    def forecast_all(self, values: np.ndarray, horizons: tuple[int, ...]) -> dict[int, float]:
        """Point forecasts for every horizon from one in-sample window."""
        values = np.asarray(values, dtype=float)
        if self.name == "HAR":
            return {h: har_fit_forecast(values, h)[0] for h in horizons}
        if self.name == "TVHAR":
            return {h: tvhar_fit_forecast(values, h, self.kernel)[0] for h in horizons}
        if self.name == "TVAR":
            return tvar_forecast(values, self.p, horizons, self.kernel)
        if self.name == "EWD":
            return ewd_static_forecast(values, self.p, self.scales, horizons, self.weight_window)
        cfg = ForecastConfig(
            p=self.p, scales=self.scales, kernel=self.kernel, weight_window=self.weight_window
        )
        points = tvewd_forecast_window(values, cfg, horizons)
        return {pt.horizon: pt.value for pt in points}
