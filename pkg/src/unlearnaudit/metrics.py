"""AUC and the two degradation measures comparing attack and baseline."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError


@dataclass(frozen=True)
class EvalRecord:
    b: bool
    p_u: float
    p_m: float


@dataclass(frozen=True)
class MetricsReport:
    auc_ours: float
    auc_baseline: float
    deg_count: float
    deg_rate: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def auc(scores, labels) -> float:
    """Exact ROC AUC via the Mann-Whitney rank sum; tied scores count 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise DataError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both labels")
    ranks = rankdata(s)  # average ranks for ties
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _columns(records):
    if len(records) == 0:
        raise DataError("no evaluation records")
    b = np.array([r.b for r in records], dtype=bool)
    pu = np.array([r.p_u for r in records], dtype=np.float64)
    pm = np.array([r.p_m for r in records], dtype=np.float64)
    return b, pu, pm


def deg_count(records) -> float:
    """Share of samples where the attack is strictly more confident in the truth."""
    b, pu, pm = _columns(records)
    return float(np.mean(np.where(b, pu > pm, pu < pm)))


def deg_rate(records) -> float:
    """Mean signed confidence gain of the attack over the baseline on the truth."""
    b, pu, pm = _columns(records)
    return float(np.mean(np.where(b, pu - pm, pm - pu)))


def evaluate(records) -> MetricsReport:
    b, pu, pm = _columns(records)
    return MetricsReport(auc(pu, b), auc(pm, b), deg_count(records),
                         deg_rate(records), len(records))
