"""Measurement settings, local rotation gates and the ideal post-gate states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    I2,
    I4,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TOL_NUM,
    TOL_UNITARY,
    OperatorError,
    as_operator,
    check_density,
    is_unitary,
    kron,
    pure_state,
)

TWO_PI = 2.0 * math.pi

SIDE_A = ("a", "a_prime")
SIDE_B = ("b", "b_prime")
# fixed order used for tables, files and sub-seed derivation
SETTING_PAIRS = (("a", "b"), ("a", "b_prime"), ("a_prime", "b"), ("a_prime", "b_prime"))

Z_A = kron(PAULI_Z, I2)
Z_B = kron(I2, PAULI_Z)
ZZ = kron(PAULI_Z, PAULI_Z)


def wrap_angle(x: float) -> float:
    y = math.fmod(float(x), TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    return 0.0 if y >= TWO_PI else y


@dataclass(frozen=True)
class MeasurementAngles:
    """Polar angle ``theta`` and azimuth ``phi`` of a measured Bloch direction, in radians."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError(f"non-finite measurement angles ({self.theta}, {self.phi})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    @property
    def direction(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


@dataclass(frozen=True)
class SettingsQuad:
    a: MeasurementAngles
    a_prime: MeasurementAngles
    b: MeasurementAngles
    b_prime: MeasurementAngles

    def __getitem__(self, label: str) -> MeasurementAngles:
        if label not in SIDE_A + SIDE_B:
            raise KeyError(label)
        return getattr(self, label)

    def to_vector(self) -> np.ndarray:
        """Angles as ``[theta_a, phi_a, theta_a', phi_a', theta_b, ...]``."""
        return np.array([v for lab in SIDE_A + SIDE_B for v in (self[lab].theta, self[lab].phi)])

    @classmethod
    def from_vector(cls, x) -> "SettingsQuad":
        x = [float(v) for v in x]
        if len(x) != 8:
            raise ValueError(f"expected 8 angles, got {len(x)}")
        return cls(*(MeasurementAngles(x[2 * i], x[2 * i + 1]) for i in range(4)))

    @classmethod
    def planar(cls, theta_a, theta_a_prime, theta_b, theta_b_prime) -> "SettingsQuad":
        return cls(
            MeasurementAngles(theta_a),
            MeasurementAngles(theta_a_prime),
            MeasurementAngles(theta_b),
            MeasurementAngles(theta_b_prime),
        )


def canonical_settings() -> SettingsQuad:
    """Planar settings giving S = +2*sqrt(2) on the singlet.

    With E(theta_x, theta_y) = -cos(theta_x - theta_y) and the minus sign on
    the (a, b') term, b and b' sit at 5pi/4 and 7pi/4.
    """
    return SettingsQuad.planar(0.0, math.pi / 2, 5 * math.pi / 4, 7 * math.pi / 4)


def rotation_gate(angles: MeasurementAngles) -> np.ndarray:
    """Single-qubit unitary U with U^dag Z U = cos(theta) Z + sin(theta)(cos(phi) X + sin(phi) Y).

    U = exp(-i theta/2 (sin(phi) X - cos(phi) Y)), a rotation about an
    in-plane axis perpendicular to the target azimuth.
    """
    half = 0.5 * angles.theta
    axis = math.sin(angles.phi) * PAULI_X - math.cos(angles.phi) * PAULI_Y
    return math.cos(half) * I2 - 1j * math.sin(half) * axis


def rotated_observable(angles: MeasurementAngles) -> np.ndarray:
    nx, ny, nz = angles.direction
    return nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z


def _unitary_2(u) -> np.ndarray:
    u = as_operator(u, dims=(2,))
    if not is_unitary(u, TOL_UNITARY):
        raise OperatorError("gate is not unitary")
    return u


def prepare_ideal_state(rho, ux, uy, validate: bool = True) -> np.ndarray:
    """``(ux kron uy) rho (ux kron uy)^dag``: the post-gate state without crosstalk.

    ``validate=False`` skips the unitarity and density checks (optimizer inner loop).
    """
    if validate:
        ux, uy = _unitary_2(ux), _unitary_2(uy)
    g = np.kron(ux, uy)
    out = g @ np.asarray(rho, dtype=complex) @ g.conj().T
    if validate:
        check_density(out, "prepare_ideal_state")
    return out


def observable_picture_correlator(rho, angles_x: MeasurementAngles, angles_y: MeasurementAngles) -> float:
    """Tr(rho (U_x^dag Z U_x) kron (U_y^dag Z U_y)) without rotating the state."""
    obs = kron(rotated_observable(angles_x), rotated_observable(angles_y))
    value = np.trace(np.asarray(rho, dtype=complex) @ obs)
    assert abs(value.imag) <= TOL_NUM
    return float(value.real)


def singlet() -> np.ndarray:
    return pure_state([0, 1, -1, 0])


def maximally_mixed() -> np.ndarray:
    return I4 / 4.0


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    return pure_state(psi)


def random_density(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    """Random mixed state from a 4 x rank Ginibre matrix."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_settings(rng: np.random.Generator) -> SettingsQuad:
    return SettingsQuad.from_vector(rng.uniform(0.0, TWO_PI, size=8))
