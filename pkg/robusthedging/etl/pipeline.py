"""
Concrete hedging pipeline.

Demonstrates:
- ingest -> screen -> fit -> forecast -> hedge -> backtest -> scatter / bootstrap,
  plus an impulse-response stage off the fitted models
- Every stage receives and returns a context dict (see etl.dag)
- Per-cell fan-out over (series | pair, model, tau) with a deterministic
  ordered parallel map
- Every table validated against its schema and written atomically
"""

from __future__ import annotations

import logging
from importlib import metadata
from itertools import product
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from robusthedging.analytics import backtest as bt
from robusthedging.analytics import inference, market_data, reporting, robust_hedge, ts_models
from robusthedging.errors import DataError, HedgeError, NonStationaryError, StageError
from robusthedging.etl.dag import DAG
from robusthedging.models.backtest import BootstrapScheme
from robusthedging.models.forecast import ArModel, ThetaMode, Transform
from robusthedging.models.series import RealizedSeries
from robusthedging.schemas.config import PairSpec, PipelineConfig, RunManifest, StageRecord
from robusthedging.schemas.outputs import OUTPUT_SCHEMAS
from robusthedging.services.artifacts import ArtifactWriter
from robusthedging.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

STAGES = ("ingest", "screen", "fit", "forecast", "hedge", "backtest", "scatter", "bootstrap", "irf")
POOLED = "pooled"


# ---------------------------------------------------------------------------
# Naming helpers
# ---------------------------------------------------------------------------

def rv_key(symbol: str) -> str:
    return f"RV_{symbol}"


def rcv_key(pair: PairSpec) -> str:
    return f"RCV_{pair.label}"


def _cell(*parts: Any) -> str:
    return "__".join(str(p) for p in parts)


def _with_context(exc: Exception, **context: Any) -> Exception:
    if isinstance(exc, HedgeError):
        return exc.with_context(**context)
    return exc


def _fit(series: RealizedSeries, kind: str, order: int, transform: Transform, tau_max: int) -> ArModel:
    if kind == "har":
        return ts_models.fit_har(series, transform, tau_max)
    return ts_models.fit_ar(series, order, transform, tau_max)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def ingest(context: dict[str, Any]) -> dict[str, Any]:
    """Parse bar files, build RV / RCV / daily returns and fix the train/test split."""
    config: PipelineConfig = context["config"]
    writer: ArtifactWriter = context["writer"]
    data_dir = Path(config.data_dir)

    bars, rv, returns = {}, {}, {}
    for symbol in config.all_symbols:
        path = data_dir / f"{symbol}.csv"
        if not path.exists():
            raise DataError(f"no bar file for {symbol}", symbol=symbol, path=str(path))
        try:
            bars[symbol] = market_data.parse_bar_file(path.read_bytes(), symbol, config.window)
        except HedgeError as exc:
            raise exc.with_context(symbol=symbol)
        rv[symbol] = market_data.realized_variance_series(bars[symbol], config.window, config.missing_day_policy)
        returns[symbol] = market_data.daily_close_returns(bars[symbol])
        writer.write_table(f"realized/{rv_key(symbol)}.csv", rv[symbol].to_frame(), "realized")
        writer.write_table(f"realized/R_{symbol}.csv", returns[symbol].to_frame(), "realized")

    rcv = {}
    for pair in config.pairs:
        series = market_data.realized_covariance_series(
            bars[pair.hedged], bars[pair.hedging], config.window, config.missing_day_policy
        )
        _, _, rcv[pair.label] = market_data.align_pair(rv[pair.hedged], rv[pair.hedging], series)
        writer.write_table(f"realized/{rcv_key(pair)}.csv", rcv[pair.label].to_frame(), "realized")

    train_end, test_start = _split(config, rv)
    logger.info("Ingested %d symbols, %d pairs; train ends %s", len(bars), len(rcv), train_end)
    return {"bars": bars, "rv": rv, "returns": returns, "rcv": rcv, "train_end": train_end, "test_start": test_start}


def _split(config: PipelineConfig, rv: dict[str, RealizedSeries]) -> tuple[pd.Timestamp | None, pd.Timestamp | None]:
    if config.train_end is not None:
        return pd.Timestamp(config.train_end), pd.Timestamp(config.test_start)
    dates = pd.DatetimeIndex([])
    for series in rv.values():
        dates = dates.union(series.dates)
    if len(dates) < 2:
        return None, None
    cut = min(max(int(len(dates) * config.train_fraction), 1), len(dates) - 1)
    return dates[cut - 1], dates[cut]


def _fit_series(context: dict[str, Any]) -> dict[str, tuple[RealizedSeries, Transform]]:
    """Every series the grid models: RV of each pair leg and RCV of each pair."""
    config: PipelineConfig = context["config"]
    series: dict[str, tuple[RealizedSeries, Transform]] = {}
    for pair in config.pairs:
        for symbol in (pair.hedged, pair.hedging):
            series[rv_key(symbol)] = (context["rv"][symbol], config.rv_transform)
        series[rcv_key(pair)] = (context["rcv"][pair.label], config.rcv_transform)
    return series


def _train(series: RealizedSeries, context: dict[str, Any]) -> RealizedSeries:
    return series.between(None, context["train_end"])


def screen(context: dict[str, Any]) -> dict[str, Any]:
    """ADF unit-root screen of every modelled series on its fit scale."""
    config: PipelineConfig = context["config"]
    rows = []
    for key, (series, transform) in _fit_series(context).items():
        try:
            result = ts_models.adf_test(series, config.adf_lag_order, transform)
        except HedgeError as exc:
            raise exc.with_context(series=key)
        if not result.reject_unit_root:
            logger.warning("%s: unit root not rejected (ADF t=%.3f)", key, result.statistic)
        rows.append(
            {
                "series": key,
                "kind": series.kind.value,
                "statistic": result.statistic,
                "critical_value": result.critical_value,
                "reject_unit_root": result.reject_unit_root,
                "lag_order": result.lag_order,
                "nobs": result.nobs,
            }
        )
    frame = pd.DataFrame(rows, columns=list(_columns("adf")))
    context["writer"].write_table("adf.csv", frame.astype({"lag_order": "int64", "nobs": "int64"}), "adf")
    return {"adf": frame}


def fit(context: dict[str, Any]) -> dict[str, Any]:
    config: PipelineConfig = context["config"]
    writer: ArtifactWriter = context["writer"]
    cells = list(product(_fit_series(context).items(), config.models))

    def run(cell) -> ArModel:
        (key, (series, transform)), spec = cell
        try:
            return _fit(_train(series, context), spec.kind, spec.order, transform, config.tau_max)
        except Exception as exc:
            raise _with_context(exc, series=key, model=spec.name)

    fitted = ordered_map(run, cells, config.workers)
    fits = {}
    for ((key, _), spec), model in zip(cells, fitted):
        fits[(key, spec.name)] = model
        writer.write_document(f"models/{_cell(key, spec.name)}.json", ts_models.dump_model(model), "model")
    return {"fits": fits}


def _origins(series: RealizedSeries, context: dict[str, Any]) -> pd.DatetimeIndex:
    """Test-window dates that still have a following observation."""
    if context["test_start"] is None:
        return pd.DatetimeIndex([])
    dates = series.dates[:-1]
    return dates[dates >= context["test_start"]]


def forecast(context: dict[str, Any]) -> dict[str, Any]:
    """Out-of-sample forecasts, RMSE against the base model, closed-form vs empirical theta."""
    config: PipelineConfig = context["config"]
    writer: ArtifactWriter = context["writer"]
    series_map = _fit_series(context)
    cells = list(product(series_map, config.models, config.tau))

    def run(cell):
        key, spec, tau = cell
        series, _ = series_map[key]
        model = context["fits"][(key, spec.name)]
        try:
            if config.theta_mode is ThetaMode.EMPIRICAL:
                errors = ts_models.in_sample_integrated_errors(model, _train(series, context), tau)
                theta = ts_models.uncertainty_theta(model, tau, ThetaMode.EMPIRICAL, errors)
            else:
                theta = ts_models.uncertainty_theta(model, tau, ThetaMode.CLOSED_FORM)
            return ts_models.forecast_set(model, series, _origins(series, context), tau, theta, config.theta_mode)
        except Exception as exc:
            raise _with_context(exc, series=key, model=spec.name, tau=tau)

    forecasts = {}
    for (key, spec, tau), result in zip(cells, ordered_map(run, cells, config.workers)):
        forecasts[(key, spec.name, tau)] = result
        writer.write_table(f"forecasts/{_cell(key, spec.name, f'tau{tau}')}.csv", result.to_frame(), "forecast")

    rmse_rows = []
    for key, tau in product(series_map, config.tau):
        series, _ = series_map[key]
        values = series.to_numpy()
        base = forecasts[(key, config.base_model, tau)]
        positions = series.dates.get_indexer(base.origin_dates)
        keep = positions + tau <= len(values) - 1
        if not keep.any():
            continue
        cumulative = np.concatenate([[0.0], np.cumsum(values)])
        realized = cumulative[positions[keep] + tau + 1] - cumulative[positions[keep] + 1]
        base_integrated = base.integrated[keep]
        for spec in config.models:
            integrated = forecasts[(key, spec.name, tau)].integrated[keep]
            ratio = ts_models.rmse_ratio(integrated, base_integrated, realized, base=base_integrated)[0]
            rmse_rows.append(
                {"series": key, "model": spec.name, "tau": tau,
                 "rmse": ts_models.rmse(integrated, realized), "ratio": ratio}
            )
    rmse = pd.DataFrame(rmse_rows, columns=list(_columns("rmse")))
    writer.write_table("rmse.csv", rmse.astype({"tau": "int64"}), "rmse")

    base_spec = config.model_spec(config.base_model)
    theta_rows = []
    for key, (series, _) in series_map.items():
        train = _train(series, context)
        level = _fit(train, base_spec.kind, base_spec.order, Transform.LEVEL, config.tau_max)
        try:
            comparison = ts_models.theta_comparison(level, train, range(1, config.tau_max + 1))
        except HedgeError as exc:
            raise exc.with_context(series=key)
        theta_rows += [{**row, "series": key} for row in comparison]
    thetas = pd.DataFrame(theta_rows, columns=list(_columns("theta_comparison")))
    writer.write_table("theta_comparison.csv", thetas.astype({"tau": "int64"}), "theta_comparison")
    return {"forecasts": forecasts, "rmse": rmse, "theta_comparison": thetas}


def hedge(context: dict[str, Any]) -> dict[str, Any]:
    config: PipelineConfig = context["config"]
    writer: ArtifactWriter = context["writer"]
    forecasts = context["forecasts"]
    hedges, dispersion = {}, []
    for pair, spec, tau in product(config.pairs, config.models, config.tau):
        f = forecasts[(rv_key(pair.hedging), spec.name, tau)]
        sf = forecasts[(rcv_key(pair), spec.name, tau)]
        common = f.origin_dates.intersection(sf.origin_dates)
        try:
            path = robust_hedge.hedge_path(
                f.at(common), sf.at(common), tau, config.variance_floor, label=pair.label
            )
        except HedgeError as exc:
            raise exc.with_context(pair=pair.label, model=spec.name, tau=tau)
        hedges[(pair.label, spec.name, tau)] = path
        writer.write_table(f"hedges/{_cell(pair.label, spec.name, f'tau{tau}')}.csv", path.to_frame(), "hedge")
        if len(path) >= 2:
            dispersion.append(
                {"pair": pair.label, "model": spec.name, "tau": tau, **bt.hedge_ratio_dispersion(path)}
            )
    frame = pd.DataFrame(dispersion, columns=list(_columns("dispersion")))
    writer.write_table("dispersion.csv", frame.astype({"tau": "int64"}), "dispersion")
    return {"hedges": hedges, "dispersion": frame}


def backtest(context: dict[str, Any]) -> dict[str, Any]:
    """Hedged returns and metrics for every (pair, model, tau, bp, method) cell."""
    config: PipelineConfig = context["config"]
    writer: ArtifactWriter = context["writer"]
    returns = context["returns"]
    delta = None if config.delta == "quartile" else float(config.delta)

    correlations = {}
    for pair in config.pairs:
        correlations[pair.label] = market_data.pair_correlation(
            returns[pair.hedged], returns[pair.hedging], None, context["train_end"]
        )

    cells = list(product(config.pairs, config.models, config.tau, config.bp, bt.HEDGE_METHODS))

    def run(cell):
        pair, spec, tau, bp, method = cell
        path = context["hedges"][(pair.label, spec.name, tau)]
        try:
            hedged = bt.hedged_returns(returns[pair.hedged], returns[pair.hedging], path, method, bp / 1e4)
            report = bt.performance_report(hedged, delta, config.annualization, config.omega_cap)
        except Exception as exc:
            raise _with_context(exc, pair=pair.label, model=spec.name, tau=tau, bp=bp, method=method)
        return hedged, report

    rows, net = [], {}
    for (pair, spec, tau, bp, method), (hedged, report) in zip(cells, ordered_map(run, cells, config.workers)):
        net[(pair.label, spec.name, tau, bp, method)] = hedged
        metrics = report.model_dump()
        rows.append(
            {
                "pair": pair.label, "hedged": pair.hedged, "hedging": pair.hedging,
                "model": spec.name, "tau": tau, "bp": float(bp), "method": method,
                **{k: metrics[k] for k in ("HE", "HE_C", "HE_R", *bt.DIFFERENCE_METRICS)},
                "delta_threshold": metrics["delta_threshold"], "total_costs": metrics["total_costs"],
                "omega_capped": metrics["omega_capped"], "correlation": correlations[pair.label],
            }
        )
    report = pd.DataFrame(rows, columns=list(_columns("report"))).astype({"tau": "int64"})
    writer.write_table("report.csv", report, "report")
    writer.write_document("report.json", report.to_json(orient="records", indent=2, double_precision=15), "report_document", len(report))

    differences = bt.metric_differences(report) if len(report) else pd.DataFrame(columns=list(_columns("differences")))
    writer.write_table("differences.csv", differences[list(_columns("differences"))], "differences")
    return {"report": report, "net_returns": net, "correlations": correlations}


def scatter(context: dict[str, Any]) -> dict[str, Any]:
    config: PipelineConfig = context["config"]
    frame = reporting.emit_scatter_data(
        context["report"],
        config.scatter.metrics,
        config.scatter.color_key,
        correlations=context["correlations"],
        asset_classes=config.asset_classes,
    )
    context["writer"].write_table("scatter.csv", frame, "scatter")
    return {"scatter": frame}


def bootstrap(context: dict[str, Any]) -> dict[str, Any]:
    """Robust-vs-standard bootstrap per pair and pooled, random block and MEB."""
    config: PipelineConfig = context["config"]
    settings = config.bootstrap
    net = context["net_returns"]
    draw_fns = {"random_block": inference.block_draws, "max_entropy": inference.meb_draws}

    rows = []
    for metric in settings.metrics:
        pooled: dict[str, list[inference.BootstrapDraws]] = {s: [] for s in settings.schemes}
        for pair in config.pairs:
            key = (pair.label, settings.model, settings.tau, settings.bp)
            if (*key, "robust") not in net:
                raise DataError("bootstrap cell missing from backtest grid", pair=pair.label, bp=settings.bp)
            robust, standard = net[(*key, "robust")].r_net, net[(*key, "standard")].r_net
            results = {}
            for scheme in settings.schemes:
                try:
                    draws = draw_fns[scheme](
                        robust, standard, metric, settings.block_length, settings.reps, settings.seed, config.workers
                    )
                except HedgeError as exc:
                    raise exc.with_context(pair=pair.label, metric=metric)
                pooled[scheme].append(draws)
                results[scheme] = inference.summarize(draws, metric, settings.block_length, BootstrapScheme(scheme))
            rows.append(_bootstrap_row(metric, pair.label, results, settings))
        if config.pairs:
            results = {
                scheme: inference.pooled_bootstrap(pooled[scheme], metric, settings.block_length, BootstrapScheme(scheme))
                for scheme in settings.schemes
            }
            rows.append(_bootstrap_row(metric, POOLED, results, settings))

    frame = pd.DataFrame(rows, columns=list(_columns("bootstrap")))
    frame = frame.astype({"replications": "int64", "block_length": "int64"})
    context["writer"].write_table("bootstrap.csv", frame, "bootstrap")
    return {"bootstrap": frame}


def _bootstrap_row(metric: str, pair: str, results: dict, settings) -> dict[str, Any]:
    block = results.get("random_block")
    meb = results.get("max_entropy")
    return {
        "measure": metric,
        "pair": pair,
        "mean_difference": block.mean_difference if block else float("nan"),
        "p_value": block.p_value if block else float("nan"),
        "mean_difference_temporal": meb.mean_difference if meb else float("nan"),
        "p_value_temporal": meb.p_value if meb else float("nan"),
        "replications": settings.reps,
        "block_length": settings.block_length,
    }


def irf(context: dict[str, Any]) -> dict[str, Any]:
    """Hedge-ratio impulse response for every pair and model, on level fits."""
    config: PipelineConfig = context["config"]
    rows = []
    for pair, spec in product(config.pairs, config.models):
        model_sf = context["fits"][(rcv_key(pair), spec.name)]
        if model_sf.target_transform is not Transform.LEVEL:
            logger.warning("%s: RCV fit is not in levels, impulse response skipped", pair.label)
            continue
        rv_f = _train(context["rv"][pair.hedging], context)
        model_f = _fit(rv_f, spec.kind, spec.order, Transform.LEVEL, config.tau_max)
        try:
            curve = ts_models.impulse_response_curve(model_sf, model_f, config.irf_horizon)
        except NonStationaryError:
            logger.warning("%s/%s: non-stationary fit, impulse response skipped", pair.label, spec.name)
            continue
        except HedgeError as exc:
            raise exc.with_context(pair=pair.label, model=spec.name)
        rows += [{"pair": pair.label, "model": spec.name, "h": h, "delta": float(d)} for h, d in enumerate(curve)]
    frame = pd.DataFrame(rows, columns=list(_columns("irf"))).astype({"h": "int64"})
    context["writer"].write_table("irf.csv", frame, "irf")
    return {"irf": frame}


def _columns(schema_name: str) -> list[str]:
    return OUTPUT_SCHEMAS[schema_name]["properties"]["columns"]["const"]


# ---------------------------------------------------------------------------
# Pipeline factory and runner
# ---------------------------------------------------------------------------

def build_hedging_pipeline() -> DAG:
    dag = DAG("robust_hedging")
    dag.add_task("ingest", ingest)
    dag.add_task("screen", screen, depends_on=["ingest"])
    dag.add_task("fit", fit, depends_on=["ingest"])
    dag.add_task("forecast", forecast, depends_on=["fit"])
    dag.add_task("hedge", hedge, depends_on=["forecast"])
    dag.add_task("backtest", backtest, depends_on=["hedge"])
    dag.add_task("scatter", scatter, depends_on=["backtest"])
    dag.add_task("bootstrap", bootstrap, depends_on=["backtest"])
    dag.add_task("irf", irf, depends_on=["fit"])
    return dag


class _WarningCollector(logging.Handler):
    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(f"{record.name}: {record.getMessage()}")


def _versions() -> dict[str, str]:
    versions = {}
    for package in ("numpy", "pandas", "scipy", "statsmodels", "pydantic"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def run_pipeline(config: PipelineConfig, targets: list[str] | None = None) -> RunManifest:
    """
    Run the pipeline (or the ancestors of ``targets``) and write manifest.json.

    Raises StageError for the first stage that failed, after the manifest
    recording the failure has been written.
    """
    writer = ArtifactWriter(config.output_dir)
    dag = build_hedging_pipeline()
    collector = _WarningCollector()
    package_logger = logging.getLogger("robusthedging")
    package_logger.addHandler(collector)
    try:
        summary = dag.run({"config": config, "writer": writer}, targets=targets)
    finally:
        package_logger.removeHandler(collector)

    manifest = RunManifest(
        config_hash=config.config_hash(),
        versions=_versions(),
        seeds={"bootstrap": config.bootstrap.seed},
        stages={
            name: StageRecord(status=info["status"], error=info["error"])
            for name, info in summary["tasks"].items()
        },
        outputs=list(writer.records),
        warnings=collector.messages,
        status=summary["status"],
    )
    writer.write_document("manifest.json", manifest.model_dump_json(indent=2), "manifest")

    failed = summary["failed_task"]
    if failed:
        raise StageError(failed, dag.tasks[failed].exception)
    logger.info("Run %s: %d files written", manifest.config_hash[:12], len(manifest.outputs))
    return manifest

