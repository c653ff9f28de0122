"""Estimators for correlators and single-side averages from shot counts."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .chsh import BELL_SIGNS, CorrelatorTable, SettingCorrelators
from .simulation import CountsRecord
from .states import SETTING_PAIRS


@dataclass(frozen=True)
class EstimatedQuantity:
    value: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("standard error must be non-negative")


def _pm_mean(plus: int, minus: int, n: int) -> EstimatedQuantity:
    """Mean of a +-1 variable and the standard error sqrt((1 - m^2) / n)."""
    if n <= 0:
        raise ValueError("no shots recorded")
    m = (plus - minus) / n
    return EstimatedQuantity(m, math.sqrt(max(1.0 - m * m, 0.0) / n), n)


def _unpack(counts):
    n_pp, n_pm, n_mp, n_mm = (int(c) for c in counts)
    if min(n_pp, n_pm, n_mp, n_mm) < 0:
        raise ValueError("negative count")
    return n_pp, n_pm, n_mp, n_mm, n_pp + n_pm + n_mp + n_mm


def correlator_from_counts(counts) -> EstimatedQuantity:
    n_pp, n_pm, n_mp, n_mm, n = _unpack(counts)
    return _pm_mean(n_pp + n_mm, n_pm + n_mp, n)


def marginals_from_counts(counts) -> tuple[EstimatedQuantity, EstimatedQuantity]:
    n_pp, n_pm, n_mp, n_mm, n = _unpack(counts)
    return _pm_mean(n_pp + n_pm, n_mp + n_mm, n), _pm_mean(n_pp + n_mp, n_pm + n_mm, n)


def bell_stderr(stderrs) -> float:
    """Standard error of S, treating the four settings as independent runs."""
    stderrs = list(stderrs)
    if any(s < 0 for s in stderrs):
        raise ValueError("standard errors must be non-negative")
    return math.sqrt(math.fsum(s * s for s in stderrs))


def sigmas_above_classical(S: EstimatedQuantity, bound: float = 2.0) -> float:
    if S.stderr <= 0:
        raise ValueError("significance needs a positive standard error")
    return (S.value - bound) / S.stderr


def table_from_counts(record: CountsRecord) -> CorrelatorTable:
    entries = {}
    for pair in SETTING_PAIRS:
        e = correlator_from_counts(record[pair])
        ma, mb = marginals_from_counts(record[pair])
        entries[pair] = SettingCorrelators(e.value, ma.value, mb.value, e.stderr, ma.stderr, mb.stderr)
    # empirical frequencies always form a joint distribution; tolerate only rounding
    return CorrelatorTable(entries, tolerance=1e-12)


def bell_estimate(record: CountsRecord) -> EstimatedQuantity:
    parts = {pair: correlator_from_counts(record[pair]) for pair in SETTING_PAIRS}
    value = math.fsum(BELL_SIGNS[p] * parts[p].value for p in SETTING_PAIRS)
    return EstimatedQuantity(
        value,
        bell_stderr(parts[p].stderr for p in SETTING_PAIRS),
        sum(parts[p].n for p in SETTING_PAIRS),
    )
