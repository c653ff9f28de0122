"""Maximizing the measured Bell signal over the measurement angles.

The search runs Nelder-Mead over the eight angles (theta, phi for a, a', b, b')
from random starting points.  Angles are wrapped to [0, 2pi) before every
evaluation, so the search space is effectively the 8-torus.  Restart k draws its
starting point from ``SeedSequence(seed, spawn_key=(k,))``; restarts are
independent and the merged result does not depend on their order.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .chsh import BELL_SIGNS, EtaTable, correlators_from_state, eta_table
from .crosstalk import DELTA_PAIRS, DeltaTable, asymmetry_index, crosstalk_parameters
from .simulation import ChannelKind, CrosstalkModel, sample_shots, true_states
from .states import SETTING_PAIRS, TWO_PI, SettingsQuad, wrap_angle

# Z kron Z eigenvalues on the computational basis |00>, |01>, |10>, |11>
_ZZ_DIAG = np.array([1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class OptimizationConfig:
    max_evaluations: int = 5000  # per restart
    restarts: int = 20
    initial_simplex_scale: float = 0.5
    convergence_tolerance: float = 1e-8
    seed: int = 0
    shots_per_evaluation: Optional[int] = None  # None: exact expectations

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.convergence_tolerance > 0:
            raise ValueError("convergence_tolerance must be positive")
        if not self.initial_simplex_scale > 0:
            raise ValueError("initial_simplex_scale must be positive")
        if self.shots_per_evaluation is not None and self.shots_per_evaluation < 1:
            raise ValueError("shots_per_evaluation must be positive")


def objective(rho, model: CrosstalkModel, settings: SettingsQuad) -> float:
    """Exact measured Bell signal S1 for the given settings."""
    states = true_states(rho, settings, model, validate=False)
    return math.fsum(
        BELL_SIGNS[p] * float(np.dot(_ZZ_DIAG, np.real(np.diag(states[p][1])))) for p in SETTING_PAIRS
    )


def sampled_objective(rho, model: CrosstalkModel, settings: SettingsQuad, shots: int, rng: np.random.Generator) -> float:
    states = true_states(rho, settings, model, validate=False)
    total = 0.0
    for p in SETTING_PAIRS:
        counts = sample_shots(states[p][1], shots, int(rng.integers(0, 2**63)))
        total += BELL_SIGNS[p] * float(np.dot(_ZZ_DIAG, counts)) / shots
    return total


@dataclass
class RestartResult:
    index: int
    start: np.ndarray
    best_x: np.ndarray
    best_value: float
    evaluations: int
    converged: bool
    log: list = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class OptimizationResult:
    settings: SettingsQuad
    S_best: float
    evaluations: int
    restarts: tuple
    budget_exhausted: bool  # some restart ran out of evaluations before converging

    @property
    def evaluation_log(self) -> list:
        return [v for r in self.restarts for v in r.log]


def _wrap(x) -> np.ndarray:
    return np.array([wrap_angle(v) for v in x])


def _run_restart(rho, model, config: OptimizationConfig, index: int) -> RestartResult:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(index,))))
    x0 = rng.uniform(0.0, TWO_PI, size=8)
    log: list[float] = []
    best = {"value": -math.inf, "x": _wrap(x0)}

    def neg_signal(x):
        xw = _wrap(x)
        settings = SettingsQuad.from_vector(xw)
        if config.shots_per_evaluation is None:
            value = objective(rho, model, settings)
        else:
            value = sampled_objective(rho, model, settings, config.shots_per_evaluation, rng)
        log.append(value)
        if value > best["value"]:
            best["value"], best["x"] = value, xw
        return -value

    simplex = np.vstack([x0] + [x0 + config.initial_simplex_scale * e for e in np.eye(8)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            neg_signal,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": config.max_evaluations,
                "maxiter": 10 * config.max_evaluations,
                "xatol": config.convergence_tolerance,
                "fatol": 1e-14,
                "initial_simplex": simplex,
            },
        )
    return RestartResult(index, _wrap(x0), best["x"], best["value"], len(log), bool(res.success), log)


def optimize(rho, model: CrosstalkModel, config: OptimizationConfig | None = None) -> OptimizationResult:
    config = config or OptimizationConfig()
    rho = np.asarray(rho, dtype=complex)
    runs = [_run_restart(rho, model, config, k) for k in range(config.restarts)]
    # ties go to the lowest restart index, independent of completion order
    best = max(runs, key=lambda r: (r.best_value, -r.index))
    return OptimizationResult(
        settings=SettingsQuad.from_vector(best.best_x),
        S_best=best.best_value,
        evaluations=sum(r.evaluations for r in runs),
        restarts=tuple(runs),
        budget_exhausted=any(not r.converged for r in runs),
    )


@dataclass(frozen=True)
class BiasStudyReport:
    settings: SettingsQuad
    S_optimized: float
    deltas: DeltaTable
    etas: EtaTable
    ratios: dict  # delta label -> delta / (sum of the two etas bounding it), None if that sum is 0
    asymmetry: float
    rough_factor: float
    rough_estimate_holds: bool
    optimization: OptimizationResult

    @property
    def delta_total(self) -> float:
        return self.deltas.total

    @property
    def eta_total(self) -> float:
        return self.etas.total


def rough_estimate_holds(delta_total: float, eta_total: float, factor: float = 2.0) -> bool:
    """Whether delta_total agrees with eta_total within a multiplicative ``factor``."""
    if eta_total == 0.0:
        return delta_total == 0.0
    return eta_total / factor <= delta_total <= eta_total * factor


def evaluate_settings(rho, model: CrosstalkModel, settings: SettingsQuad) -> tuple[DeltaTable, EtaTable]:
    """Exact crosstalk parameters and eta values at fixed settings."""
    deltas = crosstalk_parameters(correlators_from_state(rho, settings, model))
    etas = eta_table(true_states(rho, settings, model))
    return deltas, etas


def ratio_table(deltas: DeltaTable, etas: EtaTable) -> dict:
    out = {}
    for label, (p1, p2, _) in DELTA_PAIRS.items():
        denom = etas[p1] + etas[p2]
        out[label] = deltas[label] / denom if denom > 0 else None
    return out


def bias_study(rho, model: CrosstalkModel, config: OptimizationConfig | None = None, rough_factor: float = 2.0) -> BiasStudyReport:
    if model.kind is ChannelKind.NONE:
        raise ValueError("bias study needs a crosstalk model other than NONE")
    result = optimize(rho, model, config)
    deltas, etas = evaluate_settings(rho, model, result.settings)
    return BiasStudyReport(
        settings=result.settings,
        S_optimized=result.S_best,
        deltas=deltas,
        etas=etas,
        ratios=ratio_table(deltas, etas),
        asymmetry=asymmetry_index(deltas),
        rough_factor=rough_factor,
        rough_estimate_holds=rough_estimate_holds(deltas.total, etas.total, rough_factor),
        optimization=result,
    )
