"""Bell signal, trace-norm error terms and the corrected classical bound."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .linalg import TOL_NUM, expectation, trace_norm
from .simulation import CrosstalkModel, true_states
from .states import SETTING_PAIRS, ZZ, SettingsQuad, Z_A, Z_B

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
# coefficient of each correlator in the Bell signal; the (a, b') term is subtracted
BELL_SIGNS = {
    ("a", "b"): 1.0,
    ("a", "b_prime"): -1.0,
    ("a_prime", "b"): 1.0,
    ("a_prime", "b_prime"): 1.0,
}
DEFAULT_VERDICT_SIGMAS = 3.0


@dataclass(frozen=True)
class SettingCorrelators:
    """Correlator and single-side averages for one setting pair, with optional standard errors."""

    E: float
    mA: float
    mB: float
    E_err: Optional[float] = None
    mA_err: Optional[float] = None
    mB_err: Optional[float] = None


def consistency_defects(entry: SettingCorrelators) -> tuple[float, float]:
    """How far ``1 + E >= |mA + mB|`` and ``1 - E >= |mA - mB|`` are violated (<= 0 if they hold)."""
    return (
        abs(entry.mA + entry.mB) - (1.0 + entry.E),
        abs(entry.mA - entry.mB) - (1.0 - entry.E),
    )


@dataclass(frozen=True)
class CorrelatorTable:
    entries: Mapping[tuple[str, str], SettingCorrelators]
    tolerance: float = TOL_NUM

    def __post_init__(self):
        entries = {}
        for pair, entry in self.entries.items():
            pair = tuple(pair)
            if pair not in SETTING_PAIRS:
                raise ValueError(f"unknown setting pair {pair}")
            entries[pair] = entry
        missing = [p for p in SETTING_PAIRS if p not in entries]
        if missing:
            raise ValueError(f"missing setting {missing[0]}")
        tol = self.tolerance
        for pair, e in entries.items():
            for name in ("E", "mA", "mB"):
                value = getattr(e, name)
                if not (math.isfinite(value) and -1.0 - tol <= value <= 1.0 + tol):
                    raise ValueError(f"setting {pair}: {name}={value} outside [-1, 1]")
            for name in ("E_err", "mA_err", "mB_err"):
                err = getattr(e, name)
                if err is not None and not err >= 0.0:
                    raise ValueError(f"setting {pair}: {name} must be non-negative")
            if max(consistency_defects(e)) > tol:
                raise ValueError(f"setting {pair}: correlator and marginals admit no joint distribution")
        object.__setattr__(self, "entries", {p: entries[p] for p in SETTING_PAIRS})

    def __getitem__(self, pair) -> SettingCorrelators:
        return self.entries[tuple(pair)]

    @classmethod
    def from_values(cls, E: Mapping, mA: Mapping | None = None, mB: Mapping | None = None) -> "CorrelatorTable":
        mA = mA or {}
        mB = mB or {}
        return cls({p: SettingCorrelators(E[p], mA.get(p, 0.0), mB.get(p, 0.0)) for p in SETTING_PAIRS})


@dataclass(frozen=True)
class EtaTable:
    """Trace-norm distance between the true and ideal post-gate states, per setting pair."""

    values: Mapping[tuple[str, str], float]

    def __post_init__(self):
        values = {}
        for pair in SETTING_PAIRS:
            if pair not in self.values:
                raise ValueError(f"missing setting {pair}")
            v = float(self.values[pair])
            if not -TOL_NUM <= v <= 2.0 + TOL_NUM:
                raise ValueError(f"eta {pair}={v} outside [0, 2]")
            values[pair] = max(v, 0.0)
        object.__setattr__(self, "values", values)

    def __getitem__(self, pair) -> float:
        return self.values[tuple(pair)]

    @property
    def total(self) -> float:
        return math.fsum(self.values.values())


class Verdict(str, enum.Enum):
    NO_VIOLATION = "NO_VIOLATION"
    WITHIN_ERROR_BUDGET = "WITHIN_ERROR_BUDGET"
    VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class BellOutcome:
    S: float
    sigma_S: Optional[float]
    bound: float
    verdict: Verdict


def bell_signal(table: CorrelatorTable) -> float:
    """S = E_ab + E_a'b - E_ab' + E_a'b'."""
    return math.fsum(BELL_SIGNS[p] * table[p].E for p in SETTING_PAIRS)


def correlators_from_state(
    rho, settings: SettingsQuad, channel: CrosstalkModel | None = None, validate: bool = True
) -> CorrelatorTable:
    model = channel or CrosstalkModel.none()
    states = true_states(rho, settings, model, validate=validate)
    return CorrelatorTable(
        {
            pair: SettingCorrelators(
                expectation(rho1, ZZ), expectation(rho1, Z_A), expectation(rho1, Z_B)
            )
            for pair, (_, rho1) in states.items()
        }
    )


def eta(rho1, rho0) -> float:
    return trace_norm(rho1 - rho0)


def eta_table(states: Mapping) -> EtaTable:
    """EtaTable from ``{pair: (rho0, rho1)}`` as returned by ``simulation.true_states``."""
    return EtaTable({pair: eta(rho1, rho0) for pair, (rho0, rho1) in states.items()})


def max_error_bound(etas: EtaTable) -> float:
    """Upper bound on |S1 - S0|: each |Tr((rho1 - rho0) ZZ)| is at most eta_xy."""
    return etas.total


def corrected_classical_bound(etas: EtaTable) -> float:
    return CLASSICAL_BOUND + etas.total


def verdict(S: float, bound: float, sigma_S: float | None = None, n_sigma: float = DEFAULT_VERDICT_SIGMAS) -> Verdict:
    if bound < CLASSICAL_BOUND:
        raise ValueError(f"bound {bound} is below the classical limit")
    sigma = sigma_S or 0.0
    if S <= CLASSICAL_BOUND:
        return Verdict.NO_VIOLATION
    if S - bound > n_sigma * sigma:
        return Verdict.VIOLATION
    return Verdict.WITHIN_ERROR_BUDGET


def bell_outcome(S: float, bound: float, sigma_S: float | None = None) -> BellOutcome:
    return BellOutcome(S, sigma_S, bound, verdict(S, bound, sigma_S))
