"""
Autoregressive models for realized measures.

Fitting is conditional Gaussian maximum likelihood, i.e. OLS on the lag
regression (statsmodels). HAR fits are stored as tied-coefficient AR(5)
models, so forecasting, the MA(inf) recursion and the uncertainty intervals
are shared by both model families.

Log fits (realized variances) are mapped back to levels with the
variance-based bias correction exp(m + v/2), where v is the in-sample
j-step forecast-error variance.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd
import statsmodels.api as sm
from numpy.lib.stride_tricks import sliding_window_view

from robusthedging.errors import (
    DataError,
    DegenerateFitError,
    InsufficientDataError,
    NonStationaryError,
    ZeroDenominatorError,
)
from robusthedging.models.forecast import (
    AdfResult,
    ArModel,
    ForecastPath,
    ForecastSet,
    ThetaMode,
    Transform,
)
from robusthedging.models.series import RealizedSeries

logger = logging.getLogger(__name__)

MIN_EXTRA_OBSERVATIONS = 20
MIN_EMPIRICAL_ERRORS = 30
ADF_CRITICAL_5PCT = -2.86
DEFAULT_TAU_MAX = 10


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _fit_scale(values: np.ndarray, transform: Transform, label: str) -> np.ndarray:
    if transform is Transform.LOG:
        if (values <= 0).any():
            raise DataError("log transform requires strictly positive values", series=label)
        return np.log(values)
    return values


def _lag_matrix(y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows t = p..n-1 of [1, y_{t-1}, ..., y_{t-p}] and the target y_t."""
    lags = sliding_window_view(y, p)[:-1, ::-1]
    X = np.column_stack([np.ones(len(lags)), lags])
    return X, y[p:]


def _ols(X: np.ndarray, Y: np.ndarray, label: str):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateFitError("regressors are perfectly collinear", series=label)
    return sm.OLS(Y, X).fit()


def is_stationary(coeffs: Sequence[float]) -> bool:
    """True when every root of 1 - sum_k phi_k z^k lies outside the unit circle."""
    phi = np.asarray(coeffs, dtype=float)
    if not phi.any():
        return True
    roots = np.roots(np.concatenate([-phi[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


def _recursive(model: ArModel, histories: np.ndarray, tau: int) -> np.ndarray:
    """Plug-in forecasts on the fit scale; histories are (N, >=p), most recent last.

    Elementwise accumulation keeps results independent of the batch size.
    """
    p = model.order
    phi = model.phi
    state = np.array(histories[:, -p:], dtype=float)
    out = np.empty((state.shape[0], tau))
    for j in range(tau):
        nxt = np.full(state.shape[0], model.intercept)
        for k in range(p):
            nxt = nxt + phi[k] * state[:, p - 1 - k]
        out[:, j] = nxt
        state = np.column_stack([state[:, 1:], nxt])
    return out


def log_bias_correct(log_point, error_variance):
    """exp(log_point + v / 2): level forecast from a log forecast with error variance v."""
    v = np.asarray(error_variance, dtype=float)
    if (v < 0).any():
        raise ValueError("error variance must be non-negative")
    result = np.exp(np.asarray(log_point, dtype=float) + v / 2.0)
    return float(result) if result.ndim == 0 else result


def _to_level(model: ArModel, points: np.ndarray) -> np.ndarray:
    if model.target_transform is Transform.LEVEL:
        return points
    tau = points.shape[1]
    return log_bias_correct(points, np.asarray(model.horizon_error_variance[:tau]))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def in_sample_forecasts(model: ArModel, y_fit: np.ndarray, tau: int) -> np.ndarray:
    """Recursive forecasts from every in-sample origin t = p-1..n-2, shape (n-p, tau)."""
    histories = sliding_window_view(y_fit, model.order)[:-1]
    return _recursive(model, histories, tau)


def _horizon_error_variances(model: ArModel, y_fit: np.ndarray, tau_max: int) -> tuple[float, ...]:
    p, n = model.order, len(y_fit)
    forecasts = in_sample_forecasts(model, y_fit, tau_max)
    variances = []
    for j in range(1, tau_max + 1):
        n_valid = n - p - j + 1
        if n_valid < 2:
            raise InsufficientDataError(f"too few in-sample origins for horizon {j}", series=model.label)
        errors = y_fit[p - 1 + j:] - forecasts[:n_valid, j - 1]
        variances.append(float(np.var(errors, ddof=1)))
    return tuple(variances)


def _finish_fit(
    series: RealizedSeries,
    y: np.ndarray,
    results,
    kind: str,
    intercept: float,
    coeffs: tuple[float, ...],
    transform: Transform,
    tau_max: int,
) -> ArModel:
    p = len(coeffs)
    n_eff = int(results.nobs)
    noise_variance = float(results.ssr / (n_eff - p - 1))
    stationary = is_stationary(coeffs)
    if not stationary:
        logger.warning("%s: %s fit is not stationary", series.label, kind)
    draft = ArModel(
        label=series.label,
        kind=kind,
        order=p,
        intercept=intercept,
        coeffs=coeffs,
        noise_variance=noise_variance,
        target_transform=transform,
        stationary=stationary,
        standard_errors=tuple(float(s) for s in results.bse),
        nobs=n_eff,
    )
    hev = _horizon_error_variances(draft, y, tau_max)
    return draft.model_copy(update={"horizon_error_variance": hev})


def fit_ar(
    series: RealizedSeries,
    p: int,
    transform: Transform = Transform.LEVEL,
    tau_max: int = DEFAULT_TAU_MAX,
) -> ArModel:
    """Least-squares AR(p) fit with in-sample j-step error variances for j <= tau_max."""
    transform = Transform(transform)
    if p < 1:
        raise ValueError("order must be at least 1")
    values = series.to_numpy()
    if len(values) < p + MIN_EXTRA_OBSERVATIONS:
        raise InsufficientDataError(
            f"AR({p}) needs {p + MIN_EXTRA_OBSERVATIONS} observations, got {len(values)}",
            series=series.label,
        )
    y = _fit_scale(values, transform, series.label)
    X, Y = _lag_matrix(y, p)
    results = _ols(X, Y, series.label)
    params = np.asarray(results.params, dtype=float)
    logger.info("Fitted AR(%d) on %s (%s), n=%d", p, series.label, transform.value, len(Y))
    return _finish_fit(
        series, y, results, "ar", float(params[0]), tuple(float(c) for c in params[1:]), transform, tau_max
    )


def fit_har(
    series: RealizedSeries,
    transform: Transform = Transform.LEVEL,
    tau_max: int = DEFAULT_TAU_MAX,
) -> ArModel:
    """y_{t+1} = phi0 + phi1 y_t + (phi2 / 4) sum_{i=1..4} y_{t-i}, stored as AR(5).

    ``standard_errors`` holds (phi0, phi1, phi2).
    """
    transform = Transform(transform)
    values = series.to_numpy()
    if len(values) < 5 + MIN_EXTRA_OBSERVATIONS:
        raise InsufficientDataError(
            f"HAR needs {5 + MIN_EXTRA_OBSERVATIONS} observations, got {len(values)}",
            series=series.label,
        )
    y = _fit_scale(values, transform, series.label)
    L, Y = _lag_matrix(y, 5)
    X = np.column_stack([L[:, 0], L[:, 1], L[:, 2:].mean(axis=1)])
    results = _ols(X, Y, series.label)
    phi0, phi1, phi2 = (float(v) for v in results.params)
    tied = phi2 / 4.0
    logger.info("Fitted HAR on %s (%s), n=%d", series.label, transform.value, len(Y))
    return _finish_fit(series, y, results, "har", phi0, (phi1, tied, tied, tied, tied), transform, tau_max)


def dump_model(model: ArModel) -> str:
    return model.model_dump_json(indent=2)


def load_model(payload: str) -> ArModel:
    return ArModel.model_validate_json(payload)


# ---------------------------------------------------------------------------
# MA(inf) representation and forecast-error variances
# ---------------------------------------------------------------------------

def ma_coefficients(model: ArModel | Sequence[float], n: int) -> np.ndarray:
    """psi_0 = 1, psi_i = sum_{k=1..min(i,p)} phi_k psi_{i-k}."""
    phi = model.phi if isinstance(model, ArModel) else np.asarray(model, dtype=float)
    if n < 0:
        raise ValueError("n must be non-negative")
    psi = np.zeros(n + 1)
    psi[0] = 1.0
    for i in range(1, n + 1):
        acc = 0.0
        for k in range(1, min(i, len(phi)) + 1):
            acc += phi[k - 1] * psi[i - k]
        psi[i] = acc
    return psi


def step_error_variance(model: ArModel, j: int) -> float:
    """Var of the j-step forecast error: sigma^2 * sum_{i<j} psi_i^2."""
    if j < 1:
        raise ValueError("j must be at least 1")
    psi = ma_coefficients(model, j - 1)
    return float(np.sum(psi * psi) * model.noise_variance)


def integrated_error_variance(model: ArModel, tau: int) -> float:
    """Var(sum_{j=1..tau} e_{t+j}) = sigma^2 * sum_{m=1..tau} (sum_{i=0..tau-m} psi_i)^2."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    cumulative = np.cumsum(ma_coefficients(model, tau - 1))
    return float(np.sum(cumulative * cumulative) * model.noise_variance)


def integrated_error_variance_by_covariances(model: ArModel, tau: int) -> float:
    """Same quantity as integrated_error_variance, summed as variances plus cross covariances."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    psi = ma_coefficients(model, tau - 1)
    diagonal = sum(float(np.sum(psi[:j] ** 2)) for j in range(1, tau + 1))
    cross = 0.0
    for j in range(1, tau + 1):
        for k in range(1, tau + 1):
            if j == k:
                continue
            for l in range(max(0, j - k), j):
                cross += psi[l] * psi[k - j + l]
    return (diagonal + cross) * model.noise_variance


def in_sample_integrated_errors(model: ArModel, series: RealizedSeries, tau: int) -> np.ndarray:
    """Level-scale integrated tau-step errors over the series the model was fitted on."""
    if tau > model.tau_max:
        raise InsufficientDataError(f"tau={tau} exceeds tau_max={model.tau_max}", series=model.label)
    level = series.to_numpy()
    y = _fit_scale(level, model.target_transform, series.label)
    p, n = model.order, len(y)
    n_valid = n - p - tau + 1
    if n_valid < 1:
        return np.empty(0)
    forecasts = _to_level(model, in_sample_forecasts(model, y, tau)[:n_valid])
    realized = sliding_window_view(level[p:], tau)[:n_valid].sum(axis=1)
    return realized - forecasts.sum(axis=1)


def theta_scale(model: ArModel, mode: ThetaMode) -> Transform:
    if ThetaMode(mode) is ThetaMode.CLOSED_FORM:
        return model.target_transform
    return Transform.LEVEL


def uncertainty_theta(
    model: ArModel,
    tau: int,
    mode: ThetaMode = ThetaMode.CLOSED_FORM,
    in_sample_errors: np.ndarray | None = None,
) -> float:
    """Theta_tau: std of the integrated tau-step forecast error.

    closed_form is on the model's fit scale (see theta_scale); empirical is the
    sample std of level-scale in-sample errors.
    """
    mode = ThetaMode(mode)
    if mode is ThetaMode.CLOSED_FORM:
        return float(np.sqrt(integrated_error_variance(model, tau)))
    errors = np.asarray(in_sample_errors if in_sample_errors is not None else [], dtype=float)
    if errors.size < MIN_EMPIRICAL_ERRORS:
        raise InsufficientDataError(
            f"empirical theta needs {MIN_EMPIRICAL_ERRORS} errors, got {errors.size}",
            series=model.label,
        )
    return float(np.std(errors, ddof=1))


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------

def _check_horizon(model: ArModel, tau: int) -> None:
    if tau < 1:
        raise ValueError("tau must be at least 1")
    needs_variances = model.target_transform is Transform.LOG or model.horizon_error_variance
    if needs_variances and tau > model.tau_max:
        raise InsufficientDataError(
            f"tau={tau} exceeds tau_max={model.tau_max}", series=model.label
        )


def forecast_path(
    model: ArModel,
    history: Sequence[float],
    tau: int,
    theta_mode: ThetaMode = ThetaMode.CLOSED_FORM,
    in_sample_errors: np.ndarray | None = None,
    origin_date=None,
) -> ForecastPath:
    """tau-step forecast from the last p fit-scale values in ``history`` (most recent last)."""
    _check_horizon(model, tau)
    h = np.asarray(history, dtype=float)
    if h.size < model.order:
        raise InsufficientDataError(
            f"history needs {model.order} values, got {h.size}", series=model.label
        )
    points = _to_level(model, _recursive(model, h[None, :], tau))[0]
    point = tuple(float(v) for v in points)
    return ForecastPath(
        origin_date=pd.Timestamp(origin_date).date() if origin_date is not None else None,
        tau=tau,
        point=point,
        integrated_point=math.fsum(point),
        theta=uncertainty_theta(model, tau, theta_mode, in_sample_errors),
        theta_mode=ThetaMode(theta_mode),
        theta_scale=theta_scale(model, theta_mode),
    )


def forecast_set(
    model: ArModel,
    series: RealizedSeries,
    origins: pd.DatetimeIndex,
    tau: int,
    theta: float,
    theta_mode: ThetaMode = ThetaMode.CLOSED_FORM,
) -> ForecastSet:
    """Forecast from each origin date using the realized history up to and including it."""
    _check_horizon(model, tau)
    y = _fit_scale(series.to_numpy(), model.target_transform, series.label)
    positions = series.dates.get_indexer(origins)
    if (positions < 0).any():
        raise DataError("forecast origin missing from series", series=series.label)
    if len(positions) and positions.min() < model.order - 1:
        raise InsufficientDataError("not enough history before the first origin", series=series.label)
    windows = sliding_window_view(y, model.order)
    histories = windows[positions - (model.order - 1)] if len(positions) else np.empty((0, model.order))
    points = _to_level(model, _recursive(model, histories, tau))
    return ForecastSet(
        series.label, tau, pd.DatetimeIndex(origins), points, theta, ThetaMode(theta_mode), theta_scale(model, theta_mode)
    )


def theta_comparison(model: ArModel, series: RealizedSeries, taus: Sequence[int]) -> list[dict]:
    """Closed-form vs empirical Theta_tau on the fit series (meaningful for level fits)."""
    rows = []
    for tau in taus:
        errors = in_sample_integrated_errors(model, series, tau)
        rows.append(
            {
                "series": model.label,
                "tau": int(tau),
                "theta_closed_form": uncertainty_theta(model, tau, ThetaMode.CLOSED_FORM),
                "theta_empirical": uncertainty_theta(model, tau, ThetaMode.EMPIRICAL, errors),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def equilibrium(model: ArModel) -> float:
    """phi0 / (1 - sum phi): the unconditional mean of a stationary fit."""
    if not is_stationary(model.coeffs):
        raise NonStationaryError("equilibrium undefined for a non-stationary model", series=model.label)
    return model.intercept / (1.0 - float(np.sum(model.phi)))


def impulse_response_delta(model_SF: ArModel, model_F: ArModel, h: int) -> float:
    """Deviation of the hedge ratio from its equilibrium h steps after a unit shock."""
    sf_inf = equilibrium(model_SF)
    f_inf = equilibrium(model_F)
    psi_sf = ma_coefficients(model_SF, h)[h]
    psi_f = ma_coefficients(model_F, h)[h]
    denominator = f_inf + psi_f
    if f_inf == 0 or denominator == 0:
        raise ZeroDenominatorError("zero variance equilibrium in impulse response", series=model_F.label)
    return (sf_inf + psi_sf) / denominator - sf_inf / f_inf


def impulse_response_curve(model_SF: ArModel, model_F: ArModel, horizon: int) -> np.ndarray:
    return np.array([impulse_response_delta(model_SF, model_F, h) for h in range(horizon + 1)])


def adf_test(series: RealizedSeries, lag_order: int, transform: Transform = Transform.LEVEL) -> AdfResult:
    """Constant-only ADF regression on the fit scale; rejects the unit root when t < -2.86."""
    y = _fit_scale(series.to_numpy(), transform, series.label)
    if len(y) < lag_order + MIN_EXTRA_OBSERVATIONS:
        raise InsufficientDataError(
            f"ADF with {lag_order} lags needs {lag_order + MIN_EXTRA_OBSERVATIONS} observations",
            series=series.label,
        )
    dy = np.diff(y)
    rows = np.arange(lag_order, len(dy))
    columns = [np.ones(len(rows)), y[rows]]
    columns += [dy[rows - k] for k in range(1, lag_order + 1)]
    X = np.column_stack(columns)
    results = _ols(X, dy[rows], series.label)
    statistic = float(results.tvalues[1])
    return AdfResult(
        statistic=statistic,
        reject_unit_root=statistic < ADF_CRITICAL_5PCT,
        lag_order=lag_order,
        nobs=int(results.nobs),
        critical_value=ADF_CRITICAL_5PCT,
    )


def rmse(forecasts, realized) -> float:
    f = np.asarray(forecasts, dtype=float)
    r = np.asarray(realized, dtype=float)
    if f.size == 0 or f.shape != r.shape:
        raise InsufficientDataError("forecasts and realized values must be aligned and non-empty")
    return float(np.sqrt(np.mean((f - r) ** 2)))


def rmse_ratio(forecasts_a, forecasts_b, realized, base) -> tuple[float, float]:
    """(RMSE_a / RMSE_base, RMSE_b / RMSE_base)."""
    base_rmse = rmse(base, realized)
    if base_rmse == 0:
        raise ZeroDenominatorError("base model RMSE is zero")
    return rmse(forecasts_a, realized) / base_rmse, rmse(forecasts_b, realized) / base_rmse
