"""Regression quality measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ShapeError


class RSquared(NamedTuple):
    determination: float
    pearson_sq: float
    degenerate: bool = False


@dataclass(frozen=True)
class MetricReport:
    r2_determination: float
    r2_pearson: float
    rmse: float
    mae: float
    n: int
    degenerate: bool = False


def _pair(pred, actual, min_len: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.shape != a.shape:
        raise ShapeError(f"length mismatch: {p.size} predictions vs {a.size} actual values")
    if p.size < min_len:
        raise ShapeError(f"need at least {min_len} values, got {p.size}")
    return p, a


def r_squared(pred, actual) -> RSquared:
    """Coefficient of determination and squared Pearson correlation.

    A constant ``actual`` vector is flagged as degenerate: the Pearson term
    is reported as 0, and determination is 1 for an exact match and ``-inf``
    otherwise.
    """
    p, a = _pair(pred, actual, 2)
    resid = a - p
    ss_res = float(resid @ resid)
    da = a - a.mean()
    ss_tot = float(da @ da)
    if ss_tot == 0.0:
        return RSquared(1.0 if ss_res == 0.0 else -math.inf, 0.0, True)
    determination = 1.0 - ss_res / ss_tot
    dp = p - p.mean()
    ss_pred = float(dp @ dp)
    if ss_pred == 0.0:
        return RSquared(determination, 0.0, True)
    corr = float(dp @ da) / math.sqrt(ss_pred * ss_tot)
    return RSquared(determination, min(corr * corr, 1.0), False)


def rmse(pred, actual) -> float:
    p, a = _pair(pred, actual, 1)
    return math.sqrt(float(np.mean(np.square(p - a))))


def mae(pred, actual) -> float:
    p, a = _pair(pred, actual, 1)
    return float(np.mean(np.abs(p - a)))


def metric_report(pred, actual) -> MetricReport:
    r2 = r_squared(pred, actual)
    return MetricReport(
        r2_determination=r2.determination,
        r2_pearson=r2.pearson_sq,
        rmse=rmse(pred, actual),
        mae=mae(pred, actual),
        n=int(np.size(actual)),
        degenerate=r2.degenerate,
    )
