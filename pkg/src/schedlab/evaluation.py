"""Prediction-quality reports: regression metrics, over/under/exact error
breakdown and effectiveness against the user-supplied walltime.

All quantities are in minutes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

EXACT_TOLERANCE_MINUTES = 0.5 / 60.0
ERROR_THRESHOLD_MINUTES = 60.0


def _pair(predictions, actuals, *more):
    arrays = [np.asarray(a, dtype=float).ravel() for a in (predictions, actuals, *more)]
    n = len(arrays[0])
    if n == 0 or any(len(a) != n for a in arrays):
        raise ValidationError("inputs must have equal, non-zero lengths")
    return arrays


@dataclass(frozen=True)
class RegressionReport:
    mae: float
    mse: float
    rmse: float
    r2: float
    error_interval_95: tuple[float, float]
    r2_defined: bool = True


@dataclass(frozen=True)
class ClassStats:
    share: float
    min_error: float
    max_error: float
    avg_error: float
    share_below_threshold: float


@dataclass(frozen=True)
class ErrorBreakdown:
    over: ClassStats
    under: ClassStats
    exact_share: float


@dataclass(frozen=True)
class EffectivenessReport:
    general: float
    valid: float


def regression_metrics(predictions, actuals) -> RegressionReport:
    pred, actual = _pair(predictions, actuals)
    err = pred - actual
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot > 0:
        r2, defined = 1.0 - ss_res / ss_tot, True
    else:
        r2, defined = math.nan, False
    q95 = float(np.percentile(np.abs(err), 95, method="linear"))
    return RegressionReport(mae, mse, math.sqrt(mse), r2, (0.0, q95), defined)


def _class_stats(abs_err: np.ndarray, n_total: int, threshold: float) -> ClassStats:
    if abs_err.size == 0:
        return ClassStats(0.0, math.nan, math.nan, math.nan, math.nan)
    return ClassStats(
        share=100.0 * abs_err.size / n_total,
        min_error=float(abs_err.min()),
        max_error=float(abs_err.max()),
        avg_error=float(abs_err.mean()),
        share_below_threshold=100.0 * float(np.count_nonzero(abs_err < threshold)) / abs_err.size,
    )


def classify(predictions, actuals, exact_tolerance: float = EXACT_TOLERANCE_MINUTES) -> np.ndarray:
    """Per-sample label: ``"exact"``, ``"over"`` or ``"under"``."""
    pred, actual = _pair(predictions, actuals)
    err = pred - actual
    return np.where(np.abs(err) <= exact_tolerance, "exact", np.where(err > 0, "over", "under"))


def error_breakdown(predictions, actuals, exact_tolerance: float = EXACT_TOLERANCE_MINUTES,
                    threshold: float = ERROR_THRESHOLD_MINUTES) -> ErrorBreakdown:
    pred, actual = _pair(predictions, actuals)
    labels = classify(pred, actual, exact_tolerance)
    abs_err = np.abs(pred - actual)
    n = len(pred)
    return ErrorBreakdown(
        over=_class_stats(abs_err[labels == "over"], n, threshold),
        under=_class_stats(abs_err[labels == "under"], n, threshold),
        exact_share=100.0 * float(np.count_nonzero(labels == "exact")) / n,
    )


def effectiveness(predictions, actuals, time_limits,
                  exact_tolerance: float = EXACT_TOLERANCE_MINUTES) -> EffectivenessReport:
    """Share of jobs (%) where the prediction is at least as close to the
    runtime as the walltime; ``valid`` restricts to non-underestimates."""
    pred, actual, limit = _pair(predictions, actuals, time_limits)
    beats = np.abs(pred - actual) <= np.abs(limit - actual)
    valid = pred >= actual - exact_tolerance
    general = 100.0 * float(np.count_nonzero(beats)) / len(pred)
    n_valid = int(np.count_nonzero(valid))
    valid_share = 100.0 * float(np.count_nonzero(beats & valid)) / n_valid if n_valid else math.nan
    return EffectivenessReport(general, valid_share)


def _r4(value: float):
    return None if value is None or not math.isfinite(value) else round(float(value), 4)


def report_document(regression: RegressionReport, breakdown: ErrorBreakdown,
                    eff: EffectivenessReport) -> dict:
    """Flat, diffable document: one human-readable key per reported quantity."""
    doc = {
        "MAE": _r4(regression.mae),
        "MSE": _r4(regression.mse),
        "RMSE": _r4(regression.rmse),
        "R2": _r4(regression.r2),
        "Confidence interval (95%)": [_r4(v) for v in regression.error_interval_95],
    }
    for title, stats in (("OVERESTIMATION", breakdown.over), ("UNDERESTIMATION", breakdown.under)):
        doc[f"{title} / Total cases"] = _r4(stats.share)
        doc[f"{title} / min error"] = _r4(stats.min_error)
        doc[f"{title} / max error"] = _r4(stats.max_error)
        doc[f"{title} / avg error"] = _r4(stats.avg_error)
        doc[f"{title} / error < 60 minutes"] = _r4(stats.share_below_threshold)
    doc["EXACT ESTIMATION / Total cases"] = _r4(breakdown.exact_share)
    doc["EFFECTIVENESS / General"] = _r4(eff.general)
    doc["EFFECTIVENESS / Valid prediction"] = _r4(eff.valid)
    return doc


def evaluate_predictions(predictions, actuals, time_limits) -> dict:
    return report_document(regression_metrics(predictions, actuals),
                           error_breakdown(predictions, actuals),
                           effectiveness(predictions, actuals, time_limits))
