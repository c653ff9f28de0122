from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from chshcheck.simulation import ChannelKind, CrosstalkModel
from chshcheck.states import SETTING_PAIRS, SIDE_A, SIDE_B, rotation_gate, MeasurementAngles

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_lines: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    _acceptance_lines.append(f"[{status}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def random_channel(rng: np.random.Generator) -> CrosstalkModel:
    """A random error model of any kind, often with per-setting parameters."""
    kind = list(ChannelKind)[rng.integers(len(ChannelKind))]
    per_setting_used = rng.random() < 0.5

    def draw():
        if kind is ChannelKind.LOCAL_DEPOLARIZING:
            return {"p_a": rng.uniform(0, 0.3), "p_b": rng.uniform(0, 0.3)}
        if kind is ChannelKind.ZZ_COUPLING:
            return {"chi": rng.uniform(-0.5, 0.5)}
        if kind is ChannelKind.MEASUREMENT_CROSSTALK:
            return {"p_ab": rng.uniform(0, 0.2), "p_ba": rng.uniform(0, 0.2)}
        return {}

    params = draw()
    per_setting = {pair: draw() for pair in SETTING_PAIRS} if per_setting_used and params else {}
    return CrosstalkModel(kind, params, per_setting)


def random_qubit_kraus(rng: np.random.Generator, n_ops: int = 3) -> list[np.ndarray]:
    """Random CPTP single-qubit channel from an isometry."""
    g = rng.normal(size=(2 * n_ops, 2)) + 1j * rng.normal(size=(2 * n_ops, 2))
    q, _ = np.linalg.qr(g)
    return [q[2 * k : 2 * k + 2, :] for k in range(n_ops)]


def random_local_channel_family(rng: np.random.Generator) -> dict:
    """Per side and own setting a Kraus set: {label: kraus list} for a, a', b, b'."""
    return {label: random_qubit_kraus(rng, int(rng.integers(1, 4))) for label in SIDE_A + SIDE_B}


def planar_singlet_correlator(theta_x: float, theta_y: float) -> float:
    return -math.cos(theta_x - theta_y)


__all__ = [
    "FIXTURES",
    "MeasurementAngles",
    "planar_singlet_correlator",
    "random_channel",
    "random_local_channel_family",
    "random_qubit_kraus",
    "record_criterion",
    "rotation_gate",
]
