"""Readers and writers for counts files, run configs and delta/eta tables.

Counts file: UTF-8 CSV with header ``setting_x,setting_y,n_pp,n_pm,n_mp,n_mm``,
one row per setting pair, labels ``a``/``a_prime`` and ``b``/``b_prime``. Lines
starting with ``#`` are comments.

Config and table files: one ``key = value`` per line, ``#`` starts a comment.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import TOL_STRUCT, DensityError, hermitian_eig, validate_density
from .optimizer import OptimizationConfig
from .simulation import CHANNEL_PARAMETERS, ChannelKind, CountsRecord, CrosstalkModel
from .states import (
    SETTING_PAIRS,
    SIDE_A,
    SIDE_B,
    SettingsQuad,
    canonical_settings,
    maximally_mixed,
    pure_state,
    singlet,
)

COUNTS_HEADER = ("setting_x", "setting_y", "n_pp", "n_pm", "n_mp", "n_mm")

STATE_PRESETS = {
    "singlet": singlet,
    "mixed": maximally_mixed,
    "phi_plus": lambda: pure_state([1, 0, 0, 1]),
    "product_00": lambda: pure_state([1, 0, 0, 0]),
    "plus_plus_i": lambda: pure_state([1, 1j, 1, 1j]),
}


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}:"
        super().__init__(f"{where} {message}" if where else message)


class ConfigError(ValueError):
    pass


def pair_key(pair) -> str:
    return f"{pair[0]},{pair[1]}"


def parse_pair_key(key: str) -> tuple[str, str]:
    parts = tuple(key.replace(".", ",").split(","))
    if parts not in SETTING_PAIRS:
        raise ValueError(f"unknown setting pair {key!r}")
    return parts


# --- counts -----------------------------------------------------------------


def read_counts(text: str, path=None) -> CountsRecord:
    rows: dict[tuple[str, str], tuple[int, ...]] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([line]))]
        if not header_seen:
            if tuple(fields) != COUNTS_HEADER:
                raise FormatError(f"expected header {','.join(COUNTS_HEADER)}", lineno, path)
            header_seen = True
            continue
        if len(fields) != len(COUNTS_HEADER):
            raise FormatError(f"expected {len(COUNTS_HEADER)} fields, got {len(fields)}", lineno, path)
        x, y = fields[0], fields[1]
        if x not in SIDE_A:
            raise FormatError(f"unknown setting_x {x!r}", lineno, path)
        if y not in SIDE_B:
            raise FormatError(f"unknown setting_y {y!r}", lineno, path)
        counts = []
        for name, value in zip(COUNTS_HEADER[2:], fields[2:]):
            try:
                c = int(value)
            except ValueError:
                raise FormatError(f"malformed field {name}={value!r}", lineno, path) from None
            if c < 0:
                raise FormatError(f"negative count {name}={c}", lineno, path)
            counts.append(c)
        if (x, y) in rows:
            raise FormatError(f"duplicate setting ({x}, {y})", lineno, path)
        if sum(counts) == 0:
            raise FormatError(f"setting ({x}, {y}) has no shots", lineno, path)
        rows[(x, y)] = tuple(counts)
    if not header_seen:
        raise FormatError("empty counts file", None, path)
    for pair in SETTING_PAIRS:
        if pair not in rows:
            raise FormatError(f"missing setting ({pair[0]}, {pair[1]})", None, path)
    return CountsRecord(rows)


def parse_counts_file(path) -> CountsRecord:
    path = Path(path)
    return read_counts(path.read_text(encoding="utf-8"), path)


def write_counts(record: CountsRecord, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COUNTS_HEADER)
    for pair in SETTING_PAIRS:
        writer.writerow([*pair, *record[pair]])
    return buf.getvalue()


# --- key = value files --------------------------------------------------------


def read_key_values(text: str, path=None) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError("empty key", lineno, path)
        if key in out:
            raise FormatError(f"duplicate key {key!r}", lineno, path)
        out[key] = value
    return out


def _float(key: str, value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite")
    return v


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


ANGLE_KEYS = tuple(f"{kind}_{label}" for label in SIDE_A + SIDE_B for kind in ("theta", "phi"))
MODEL_PARAMETER_KEYS = ("p_a", "p_b", "chi", "p_ab", "p_ba")
OPTIMIZER_KEYS = (
    "max_evaluations",
    "restarts",
    "initial_simplex_scale",
    "convergence_tolerance",
    "shots_per_evaluation",
)
CONFIG_KEYS = ("state", "rho", "model", "shots", "seed", "rough_factor") + ANGLE_KEYS + MODEL_PARAMETER_KEYS + OPTIMIZER_KEYS


def _is_override_key(key: str) -> bool:
    # e.g. "chi.a.b_prime" overrides chi for setting pair (a, b_prime)
    parts = key.split(".")
    return len(parts) == 3 and parts[0] in MODEL_PARAMETER_KEYS and (parts[1], parts[2]) in SETTING_PAIRS


@dataclass(frozen=True)
class RunConfig:
    rho: np.ndarray
    state_label: str
    settings: SettingsQuad
    model: CrosstalkModel
    shots: int = 100_000
    seed: int = 0
    optimizer: OptimizationConfig = field(default_factory=OptimizationConfig)
    rough_factor: float = 2.0
    source: dict = field(default_factory=dict)  # the raw key/value pairs


def parse_density(text: str, tol: float = TOL_STRUCT) -> np.ndarray:
    """32 reals: interleaved (re, im) pairs of the 4x4 entries in row-major order.

    Defects up to ``tol`` are accepted and then repaired (hermitized, negative
    eigenvalues clipped, trace renormalized) so later strict checks pass.
    """
    vals = [_float("rho", v) for v in text.replace(",", " ").split()]
    if len(vals) != 32:
        raise ConfigError(f"rho: expected 32 numbers, got {len(vals)}")
    arr = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    rho = arr.reshape(4, 4)
    violations = validate_density(rho, tol)
    if violations:
        raise ConfigError(str(DensityError(violations, "rho")))
    if tol > TOL_STRUCT:
        w, v = hermitian_eig(0.5 * (rho + rho.conj().T))
        w = np.clip(w, 0.0, None)
        rho = (v * (w / w.sum())) @ v.conj().T
    return rho


def format_density(rho) -> str:
    rho = np.asarray(rho, dtype=complex).reshape(-1)
    return " ".join(f"{v!r}" for z in rho for v in (float(z.real), float(z.imag)))


def parse_config(text: str, path=None, tol: float = TOL_STRUCT) -> RunConfig:
    kv = read_key_values(text, path)
    unknown = sorted(k for k in kv if k not in CONFIG_KEYS and not _is_override_key(k))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    if "rho" in kv and "state" in kv:
        raise ConfigError("give either 'state' or 'rho', not both")
    if "rho" in kv:
        rho, label = parse_density(kv["rho"], tol), "explicit"
    else:
        label = kv.get("state", "singlet")
        if label not in STATE_PRESETS:
            raise ConfigError(f"state: unknown preset {label!r} (known: {', '.join(STATE_PRESETS)})")
        rho = STATE_PRESETS[label]()

    vec = canonical_settings().to_vector()
    for i, key in enumerate(ANGLE_KEYS):
        if key in kv:
            vec[i] = _float(key, kv[key])
    settings = SettingsQuad.from_vector(vec)

    try:
        kind = ChannelKind(kv.get("model", "none"))
    except ValueError:
        raise ConfigError(f"model: unknown kind {kv['model']!r}") from None
    allowed = CHANNEL_PARAMETERS[kind]
    params, overrides = {}, {}
    for key, value in kv.items():
        if key in MODEL_PARAMETER_KEYS:
            name, pair = key, None
        elif _is_override_key(key):
            name, x, y = key.split(".")
            pair = (x, y)
        else:
            continue
        if name not in allowed:
            raise ConfigError(f"{key}: parameter does not apply to model {kind.value}")
        if pair is None:
            params[name] = _float(key, value)
        else:
            overrides.setdefault(pair, {})[name] = _float(key, value)
    try:
        model = CrosstalkModel(kind, params, overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    opt_kwargs = {}
    for key in OPTIMIZER_KEYS:
        if key in kv:
            conv = _float if key in ("initial_simplex_scale", "convergence_tolerance") else _int
            opt_kwargs[key] = conv(key, kv[key])
    seed = _int("seed", kv["seed"]) if "seed" in kv else 0
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    try:
        optimizer = OptimizationConfig(seed=seed, **opt_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    shots = _int("shots", kv["shots"]) if "shots" in kv else 100_000
    if shots < 1:
        raise ConfigError("shots: must be positive")
    rough_factor = _float("rough_factor", kv["rough_factor"]) if "rough_factor" in kv else 2.0
    if rough_factor < 1:
        raise ConfigError("rough_factor: must be at least 1")
    return RunConfig(rho, label, settings, model, shots, seed, optimizer, rough_factor, dict(kv))


def load_config(path, tol: float = TOL_STRUCT) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path, tol)


def read_delta_file(path) -> dict[str, float]:
    """Delta table file with keys ``a``, ``a_prime``, ``b``, ``b_prime``."""
    path = Path(path)
    kv = read_key_values(path.read_text(encoding="utf-8"), path)
    expected = set(SIDE_A + SIDE_B)
    if set(kv) != expected:
        raise ConfigError(f"delta file needs exactly the keys {sorted(expected)}")
    return {k: _float(k, kv[k]) for k in SIDE_A + SIDE_B}


def read_eta_file(path) -> dict[tuple[str, str], float]:
    """Eta table file with keys ``a,b``, ``a,b_prime``, ``a_prime,b``, ``a_prime,b_prime``."""
    path = Path(path)
    kv = read_key_values(path.read_text(encoding="utf-8"), path)
    out = {}
    for key, value in kv.items():
        try:
            pair = parse_pair_key(key)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out[pair] = _float(key, value)
    missing = [pair_key(p) for p in SETTING_PAIRS if p not in out]
    if missing:
        raise ConfigError(f"eta file is missing {', '.join(missing)}")
    return out
