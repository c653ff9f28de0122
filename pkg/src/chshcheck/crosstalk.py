"""Crosstalk parameters from single-side averages and their relation to eta.

Without crosstalk, side A's average under setting x cannot depend on whether B
measured b or b' (and likewise for B), so

    delta_x = |mA(x, b) - mA(x, b')|,   delta_y = |mB(a, y) - mB(a', y)|

vanish. Each delta_x is bounded by eta(x, b) + eta(x, b'), each delta_y by
eta(a, y) + eta(a', y).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .chsh import CorrelatorTable, EtaTable
from .linalg import TOL_NUM

DELTA_LABELS = ("a", "a_prime", "b", "b_prime")

# setting pairs whose single-side averages are compared for each parameter,
# together with the side ("A" or "B") being read
DELTA_PAIRS = {
    "a": (("a", "b"), ("a", "b_prime"), "A"),
    "a_prime": (("a_prime", "b"), ("a_prime", "b_prime"), "A"),
    "b": (("a", "b"), ("a_prime", "b"), "B"),
    "b_prime": (("a", "b_prime"), ("a_prime", "b_prime"), "B"),
}


@dataclass(frozen=True)
class DeltaTable:
    delta_a: float
    delta_a_prime: float
    delta_b: float
    delta_b_prime: float
    stderr: Optional[dict] = None  # label -> propagated standard error

    def __post_init__(self):
        for label in DELTA_LABELS:
            v = self[label]
            if not (math.isfinite(v) and 0.0 <= v <= 2.0 + TOL_NUM):
                raise ValueError(f"delta_{label}={v} outside [0, 2]")

    def __getitem__(self, label: str) -> float:
        return getattr(self, f"delta_{label}")

    def as_dict(self) -> dict[str, float]:
        return {label: self[label] for label in DELTA_LABELS}

    @property
    def total(self) -> float:
        return math.fsum(self.as_dict().values())

    def noise_dominated(self, n_sigma: float = 3.0) -> dict[str, bool]:
        """Per parameter: is delta within ``n_sigma`` propagated standard errors of zero?"""
        if self.stderr is None:
            return {label: False for label in DELTA_LABELS}
        return {label: self[label] <= n_sigma * self.stderr[label] for label in DELTA_LABELS}


def signed_deltas(table: CorrelatorTable) -> dict[str, float]:
    out = {}
    for label, (p1, p2, side) in DELTA_PAIRS.items():
        attr = "mA" if side == "A" else "mB"
        out[label] = getattr(table[p1], attr) - getattr(table[p2], attr)
    return out


def crosstalk_parameters(table: CorrelatorTable) -> DeltaTable:
    values = {label: abs(v) for label, v in signed_deltas(table).items()}
    stderr = None
    errs = {}
    for label, (p1, p2, side) in DELTA_PAIRS.items():
        attr = "mA_err" if side == "A" else "mB_err"
        e1, e2 = getattr(table[p1], attr), getattr(table[p2], attr)
        if e1 is None or e2 is None:
            break
        errs[label] = math.hypot(e1, e2)
    else:
        stderr = errs
    return DeltaTable(
        values["a"], values["a_prime"], values["b"], values["b_prime"], stderr=stderr
    )


@dataclass(frozen=True)
class BoundSlack:
    label: str
    delta: float
    eta_sum: float
    signed_delta: Optional[float] = None

    @property
    def slack(self) -> float:
        """delta minus its eta bound; positive means the bound is violated."""
        return self.delta - self.eta_sum


def delta_eta_bounds_check(deltas: DeltaTable, etas: EtaTable, signed: dict | None = None) -> dict[str, BoundSlack]:
    report = {}
    for label, (p1, p2, _) in DELTA_PAIRS.items():
        report[label] = BoundSlack(
            label,
            deltas[label],
            etas[p1] + etas[p2],
            None if signed is None else signed[label],
        )
    return report


def bounds_violated(report: dict[str, BoundSlack], tol: float = TOL_NUM) -> list[str]:
    return [label for label, s in report.items() if s.slack > tol]


def rough_total_estimate(deltas: DeltaTable) -> float:
    """Heuristic estimate of the summed eta: treats the error terms as unbiased, so that delta tracks eta.

    Not a bound: settings chosen by optimization can make it arbitrarily optimistic.
    """
    return deltas.total


def asymmetry_index(deltas: DeltaTable) -> float:
    total = deltas.total
    if total == 0.0:
        return 0.0
    side_a = deltas.delta_a + deltas.delta_a_prime
    side_b = deltas.delta_b + deltas.delta_b_prime
    return abs(side_a - side_b) / total
