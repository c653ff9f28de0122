"""Crosstalk channels acting on post-gate states, and Born-rule shot sampling.

Random streams: every sampling call draws from ``numpy.random.Generator(PCG64)``.
In :func:`run_experiment` the stream of the k-th setting pair (order of
``SETTING_PAIRS``) is seeded with ``SeedSequence(seed, spawn_key=(k,))``, so each
setting's outcomes depend only on ``(seed, k)`` and that setting's own state.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TOL_STRUCT,
    DensityError,
    Violation,
    check_density,
    kron,
)
from .states import (
    SETTING_PAIRS,
    SIDE_A,
    SIDE_B,
    MeasurementAngles,
    SettingsQuad,
    prepare_ideal_state,
    rotation_gate,
)

RNG_NAME = "numpy.PCG64 seeded by SeedSequence(seed, spawn_key=(setting_index,))"
OUTCOMES = ("pp", "pm", "mp", "mm")


class ChannelKind(str, enum.Enum):
    NONE = "none"
    LOCAL_DEPOLARIZING = "local_depolarizing"
    ZZ_COUPLING = "zz_coupling"
    MEASUREMENT_CROSSTALK = "measurement_crosstalk"


# p_ab: A's outcome flips when B reads "+"; p_ba: B's flips when A reads "+"
CHANNEL_PARAMETERS = {
    ChannelKind.NONE: (),
    ChannelKind.LOCAL_DEPOLARIZING: ("p_a", "p_b"),
    ChannelKind.ZZ_COUPLING: ("chi",),
    ChannelKind.MEASUREMENT_CROSSTALK: ("p_ab", "p_ba"),
}
PROBABILITY_PARAMETERS = {"p_a", "p_b", "p_ab", "p_ba"}


def _check_parameters(kind: ChannelKind, params: Mapping[str, float]) -> dict[str, float]:
    allowed = CHANNEL_PARAMETERS[kind]
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ValueError(f"parameters {unknown} do not apply to channel {kind.value}")
    out = {}
    for name, value in params.items():
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"channel parameter {name} is not finite")
        if name in PROBABILITY_PARAMETERS and not 0.0 <= value <= 1.0:
            raise ValueError(f"channel parameter {name}={value} is not a probability")
        out[name] = value
    return out


@dataclass(frozen=True)
class CrosstalkModel:
    """Error model turning the ideal post-gate state into the true one.

    ``params`` hold the default parameter values; ``per_setting`` optionally
    overrides them for individual setting pairs such as ``("a", "b_prime")``.
    Missing parameters default to zero.
    """

    kind: ChannelKind = ChannelKind.NONE
    params: Mapping[str, float] = field(default_factory=dict)
    per_setting: Mapping[tuple[str, str], Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        kind = ChannelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", _check_parameters(kind, self.params))
        overrides = {}
        for pair, values in self.per_setting.items():
            pair = tuple(pair)
            if pair not in SETTING_PAIRS:
                raise ValueError(f"unknown setting pair {pair}")
            overrides[pair] = _check_parameters(kind, values)
        object.__setattr__(self, "per_setting", overrides)

    @property
    def setting_dependent(self) -> bool:
        return bool(self.per_setting)

    def parameters_for(self, setting: tuple[str, str]) -> dict[str, float]:
        values = {name: 0.0 for name in CHANNEL_PARAMETERS[self.kind]}
        values.update(self.params)
        values.update(self.per_setting.get(tuple(setting), {}))
        return values

    @classmethod
    def none(cls) -> "CrosstalkModel":
        return cls(ChannelKind.NONE)

    @classmethod
    def local_depolarizing(cls, p_a: float, p_b: float, per_setting=None) -> "CrosstalkModel":
        return cls(ChannelKind.LOCAL_DEPOLARIZING, {"p_a": p_a, "p_b": p_b}, per_setting or {})

    @classmethod
    def zz_coupling(cls, chi: float, per_setting=None) -> "CrosstalkModel":
        return cls(ChannelKind.ZZ_COUPLING, {"chi": chi}, per_setting or {})

    @classmethod
    def measurement_crosstalk(cls, p_ab: float, p_ba: float = 0.0, per_setting=None) -> "CrosstalkModel":
        return cls(ChannelKind.MEASUREMENT_CROSSTALK, {"p_ab": p_ab, "p_ba": p_ba}, per_setting or {})


def partial_trace_a(rho) -> np.ndarray:
    return np.einsum("abad->bd", np.asarray(rho).reshape(2, 2, 2, 2))


def partial_trace_b(rho) -> np.ndarray:
    return np.einsum("abcb->ac", np.asarray(rho).reshape(2, 2, 2, 2))


def depolarize(rho, p_a: float, p_b: float) -> np.ndarray:
    """Replace each side by I/2 with its own probability."""
    out = np.asarray(rho, dtype=complex)
    if p_a:
        out = (1.0 - p_a) * out + p_a * np.kron(np.eye(2) / 2.0, partial_trace_a(out))
    if p_b:
        out = (1.0 - p_b) * out + p_b * np.kron(partial_trace_b(out), np.eye(2) / 2.0)
    return out


def apply_kraus(rho, kraus) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(k @ rho @ k.conj().T for k in kraus)


def apply_local_kraus(rho, kraus_a, kraus_b) -> np.ndarray:
    """Product channel with single-qubit Kraus sets acting on A and B."""
    return apply_kraus(rho, [kron(ka, kb) for ka in kraus_a for kb in kraus_b])


def readout_crosstalk_kraus(p_ab: float, p_ba: float) -> list[np.ndarray]:
    """Kraus operators of the conditional readout-flip map.

    Acting on the computational-basis populations, A's bit flips with
    probability ``p_ab`` when B's projected bit is "+" (index 0), and B's bit
    flips with probability ``p_ba`` when A's projected bit is "+"; both
    conditions refer to the outcomes before any flip.
    """
    kraus = []
    for flip_a in (0, 1):
        for flip_b in (0, 1):
            k = np.zeros((4, 4))
            for a in (0, 1):
                for b in (0, 1):
                    pa = p_ab if b == 0 else 0.0
                    pb = p_ba if a == 0 else 0.0
                    weight = (pa if flip_a else 1.0 - pa) * (pb if flip_b else 1.0 - pb)
                    k[2 * (a ^ flip_a) + (b ^ flip_b), 2 * a + b] = math.sqrt(weight)
            if np.any(k):
                kraus.append(k.astype(complex))
    return kraus


def _local_generator(angles: MeasurementAngles) -> np.ndarray:
    # rotation_gate(angles) == expm(-1j * _local_generator(angles))
    axis = math.sin(angles.phi) * PAULI_X - math.cos(angles.phi) * PAULI_Y
    return 0.5 * angles.theta * axis


def zz_coupled_state(rho0, chi: float, angles=None) -> np.ndarray:
    """Post-gate state when a ZZ coupling of angle ``chi`` is on while the gates act.

    Without ``angles`` the coupling is a plain conjugation by
    ``exp(-i chi/2 Z kron Z)``. With ``angles = (angles_x, angles_y)`` the gates
    and the coupling share one evolution, ``V = exp(-i(H_x + H_y + chi/2 ZZ))``,
    and the ideal gates are undone from ``rho0`` before ``V`` is applied.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    zz = kron(PAULI_Z, PAULI_Z)
    if angles is None:
        diag = np.exp(-0.5j * chi * np.diag(zz).real)
        return diag[:, None] * rho0 * diag.conj()[None, :]
    ax, ay = angles
    gates = kron(rotation_gate(ax), rotation_gate(ay))
    generator = (
        np.kron(_local_generator(ax), np.eye(2))
        + np.kron(np.eye(2), _local_generator(ay))
        + 0.5 * chi * zz
    )
    v = scipy.linalg.expm(-1j * generator) @ gates.conj().T
    return v @ rho0 @ v.conj().T


def apply_channel(rho0, model: CrosstalkModel, setting=("a", "b"), angles=None, validate: bool = True) -> np.ndarray:
    """True post-gate state for one setting pair.

    ``angles`` (the pair of MeasurementAngles of the setting) is only used by
    ``ZZ_COUPLING``, whose coupling acts during the gates.
    """
    params = model.parameters_for(setting)
    kind = model.kind
    if kind is ChannelKind.NONE:
        out = np.array(rho0, dtype=complex)
    elif kind is ChannelKind.LOCAL_DEPOLARIZING:
        out = depolarize(rho0, params["p_a"], params["p_b"])
    elif kind is ChannelKind.ZZ_COUPLING:
        out = zz_coupled_state(rho0, params["chi"], angles)
    elif kind is ChannelKind.MEASUREMENT_CROSSTALK:
        out = apply_kraus(rho0, readout_crosstalk_kraus(params["p_ab"], params["p_ba"]))
    else:  # pragma: no cover
        raise ValueError(f"unsupported channel {kind}")
    if validate:
        check_density(out, f"channel {kind.value} at setting {setting}")
    return out


def born_probabilities(rho) -> np.ndarray:
    """Outcome probabilities (pp, pm, mp, mm) in the Z kron Z eigenbasis."""
    p = np.real(np.diag(np.asarray(rho, dtype=complex))).copy()
    if np.min(p) < -TOL_STRUCT:
        raise DensityError([Violation("positivity", float(-np.min(p)))], "born_probabilities")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(seed))


def setting_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(index),))


def sample_shots(rho, n: int, seed) -> np.ndarray:
    """Draw ``n`` outcome pairs; returns counts ``[n_pp, n_pm, n_mp, n_mm]``."""
    n = int(n)
    if n < 1:
        raise ValueError("number of shots must be positive")
    probs = born_probabilities(rho)
    return _generator(seed).multinomial(n, probs).astype(np.int64)


@dataclass(frozen=True)
class CountsRecord:
    """Shot counts per setting pair, ordered (n_pp, n_pm, n_mp, n_mm)."""

    counts: Mapping[tuple[str, str], tuple[int, int, int, int]]

    def __post_init__(self):
        clean = {}
        for pair, row in self.counts.items():
            pair = tuple(pair)
            if pair not in SETTING_PAIRS:
                raise ValueError(f"unknown setting pair {pair}")
            row = tuple(int(c) for c in row)
            if len(row) != 4:
                raise ValueError(f"setting {pair}: expected 4 counts, got {len(row)}")
            if min(row) < 0:
                raise ValueError(f"setting {pair}: negative count")
            if sum(row) == 0:
                raise ValueError(f"setting {pair}: no shots recorded")
            clean[pair] = row
        missing = [p for p in SETTING_PAIRS if p not in clean]
        if missing:
            raise ValueError(f"missing setting {missing[0]}")
        object.__setattr__(self, "counts", {p: clean[p] for p in SETTING_PAIRS})

    def __getitem__(self, pair) -> tuple[int, int, int, int]:
        return self.counts[tuple(pair)]

    def total(self, pair) -> int:
        return sum(self.counts[tuple(pair)])


@dataclass(frozen=True)
class ExperimentResult:
    counts: CountsRecord
    ideal_states: dict  # setting pair -> rho0_xy
    true_states: dict  # setting pair -> rho1_xy
    seed: int
    rng: str = RNG_NAME


def true_states(rho, settings: SettingsQuad, model: CrosstalkModel, validate: bool = True):
    """``{pair: (rho0_xy, rho1_xy)}`` for all four setting pairs."""
    gates = {label: rotation_gate(settings[label]) for label in SIDE_A + SIDE_B}
    out = {}
    for x, y in SETTING_PAIRS:
        rho0 = prepare_ideal_state(rho, gates[x], gates[y], validate=validate)
        rho1 = apply_channel(rho0, model, (x, y), angles=(settings[x], settings[y]), validate=validate)
        out[(x, y)] = (rho0, rho1)
    return out


def run_experiment(rho, settings: SettingsQuad, model: CrosstalkModel, n_per_setting: int, seed: int) -> ExperimentResult:
    rho = check_density(rho, "initial state")
    states = true_states(rho, settings, model)
    counts = {}
    for k, pair in enumerate(SETTING_PAIRS):
        counts[pair] = tuple(sample_shots(states[pair][1], n_per_setting, setting_seed(seed, k)))
    return ExperimentResult(
        counts=CountsRecord(counts),
        ideal_states={p: s[0] for p, s in states.items()},
        true_states={p: s[1] for p, s in states.items()},
        seed=int(seed),
    )


def exact_counts(probabilities: Mapping[tuple[str, str], np.ndarray], n: int) -> CountsRecord:
    """Counts proportional to given outcome probabilities, without sampling.

    Each row is rounded to integers summing to ``n`` (largest remainders get
    the leftover shots), so every frequency is within 1/n of its probability.
    """
    rows = {}
    for pair in SETTING_PAIRS:
        p = np.asarray(probabilities[pair], dtype=float)
        raw = p * n
        base = np.floor(raw + 1e-9).astype(np.int64)
        short = int(n - base.sum())
        if short > 0:
            order = np.argsort(-(raw - base), kind="stable")
            base[order[:short]] += 1
        rows[pair] = tuple(int(c) for c in base)
    return CountsRecord(rows)


__all__ = [
    "ChannelKind",
    "CrosstalkModel",
    "CountsRecord",
    "ExperimentResult",
    "OUTCOMES",
    "RNG_NAME",
    "SIDE_A",
    "SIDE_B",
    "apply_channel",
    "apply_kraus",
    "apply_local_kraus",
    "born_probabilities",
    "depolarize",
    "exact_counts",
    "readout_crosstalk_kraus",
    "run_experiment",
    "sample_shots",
    "setting_seed",
    "true_states",
    "zz_coupled_state",
]
