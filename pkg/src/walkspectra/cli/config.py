"""Walk configuration documents (JSON, schema version 1).

A document is an object with the fields

``version``        mandatory, must be 1
``preset``         optional name from :data:`PRESETS`; fills ``d``,
                   ``coin_dim`` and ``steps``
``d``              lattice rank
``coin_dim``       coin dimension ``D``
``steps``          list of ``{"offset": [a1, .., ad], "matrix": M}`` where
                   ``M`` is a ``D x D`` nested list of ``[re, im]`` pairs
``initial_state``  list of ``{"site": [x1, .., xd], "vector": [[re, im], ..]}``;
                   default ``delta_0 (x) e_1``
``grid_n``         torus grid points per axis
``horizon``        number of time steps
``tolerances``     optional object with any of ``unitarity``, ``cluster``,
                   ``certify``, ``spread``
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import ConfigError
from ..lattice import LatticeState, PeriodicOperator
from .presets import PRESETS, preset_steps

SCHEMA_VERSION = 1
FIELDS = ("version", "preset", "d", "coin_dim", "steps", "initial_state",
          "grid_n", "horizon", "tolerances")
TOLERANCE_DEFAULTS = {"unitarity": 1e-10, "cluster": 1e-8, "certify": 1e-8, "spread": 1e-6}


@dataclass
class WalkConfig:
    d: int
    coin_dim: int
    steps: dict
    initial_state: dict
    grid_n: int
    horizon: int
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    preset: str | None = None

    def operator(self) -> PeriodicOperator:
        return PeriodicOperator(self.steps)

    def state(self) -> LatticeState:
        return LatticeState(self.initial_state, d=self.d, D=self.coin_dim)

    def digest(self) -> str:
        """SHA-256 of the canonical serialization."""
        text = json.dumps(dump_config(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _int(doc, key, minimum=1) -> int:
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise ConfigError(f"'{key}' must be an integer >= {minimum}, got {val!r}", field=key)
    return val


def _complex(entry, where) -> complex:
    if (not isinstance(entry, (list, tuple)) or len(entry) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)):
        raise ConfigError(f"expected a [re, im] pair, got {entry!r}", field=where)
    return complex(entry[0], entry[1])


def _vector(raw, D, where) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != D:
        raise ConfigError(f"expected {D} entries", field=where)
    return np.array([_complex(e, f"{where}[{i}]") for i, e in enumerate(raw)])


def _matrix(raw, D, where) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != D:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ConfigError(f"expected a {D}x{D} matrix, got {got} rows", field=where)
    return np.stack([_vector(row, D, f"{where}[{i}]") for i, row in enumerate(raw)])


def _site(raw, d, where) -> tuple[int, ...]:
    if not isinstance(raw, list) or len(raw) != d or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in raw):
        raise ConfigError(f"expected {d} integer coordinates, got {raw!r}", field=where)
    return tuple(raw)


def _encode_complex(c) -> list[float]:
    c = complex(c)
    return [float(c.real), float(c.imag)]


def parse_config(document) -> WalkConfig:
    """Validate a configuration given as JSON text, a path or a mapping.

    Raises
    ------
    ConfigError
        With ``field`` naming the offending entry.
    """
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(document) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}", field=unknown[0])
    if "version" not in document:
        raise ConfigError("missing mandatory field 'version'", field="version")
    if document["version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {document['version']!r}", field="version")

    doc = dict(document)
    preset = doc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}",
                              field="preset")
        if "steps" in doc:
            raise ConfigError("'steps' cannot be combined with a preset", field="steps")
        info = PRESETS[preset]
        for key in ("d", "coin_dim"):
            if key in doc and doc[key] != info[key]:
                raise ConfigError(f"preset {preset!r} has {key}={info[key]}, got {doc[key]}",
                                  field=key)
        doc["d"], doc["coin_dim"] = info["d"], info["coin_dim"]
    for key in ("d", "coin_dim"):
        if key not in doc:
            raise ConfigError(f"missing field '{key}'", field=key)
    d, D = _int(doc, "d"), _int(doc, "coin_dim")

    if preset is not None:
        steps = preset_steps(preset)
    else:
        raw_steps = doc.get("steps")
        if not isinstance(raw_steps, list) or not raw_steps:
            raise ConfigError("'steps' must be a nonempty list", field="steps")
        steps = {}
        for i, st in enumerate(raw_steps):
            where = f"steps[{i}]"
            if not isinstance(st, dict) or set(st) != {"offset", "matrix"}:
                raise ConfigError("expected keys 'offset' and 'matrix'", field=where)
            off = _site(st["offset"], d, f"{where}.offset")
            if off in steps:
                raise ConfigError(f"duplicate offset {list(off)}", field=where)
            steps[off] = _matrix(st["matrix"], D, f"{where}.matrix")

    raw_init = doc.get("initial_state")
    if raw_init is None:
        e1 = np.zeros(D, dtype=complex)
        e1[0] = 1.0
        init = {(0,) * d: e1}
    else:
        if not isinstance(raw_init, list) or not raw_init:
            raise ConfigError("'initial_state' must be a nonempty list", field="initial_state")
        init = {}
        for i, ent in enumerate(raw_init):
            where = f"initial_state[{i}]"
            if not isinstance(ent, dict) or set(ent) != {"site", "vector"}:
                raise ConfigError("expected keys 'site' and 'vector'", field=where)
            site = _site(ent["site"], d, f"{where}.site")
            if site in init:
                raise ConfigError(f"duplicate site {list(site)}", field=where)
            init[site] = _vector(ent["vector"], D, f"{where}.vector")

    grid_n = _int(doc, "grid_n", 2) if "grid_n" in doc else (256 if d <= 2 else 32)
    horizon = _int(doc, "horizon", 0) if "horizon" in doc else 256
    tol = dict(TOLERANCE_DEFAULTS)
    raw_tol = doc.get("tolerances") or {}
    if not isinstance(raw_tol, dict):
        raise ConfigError("'tolerances' must be an object", field="tolerances")
    for key, val in raw_tol.items():
        if key not in TOLERANCE_DEFAULTS:
            raise ConfigError(f"unknown tolerance {key!r}", field=f"tolerances.{key}")
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            raise ConfigError(f"tolerance {key!r} must be positive", field=f"tolerances.{key}")
        tol[key] = float(val)
    return WalkConfig(d, D, steps, init, grid_n, horizon, tol, preset)


def dump_config(cfg: WalkConfig) -> dict:
    """Explicit (preset-free) document that parses back to an equal operator."""
    return {
        "version": SCHEMA_VERSION,
        "d": cfg.d,
        "coin_dim": cfg.coin_dim,
        "steps": [{"offset": list(a),
                   "matrix": [[_encode_complex(c) for c in row] for row in np.asarray(C)]}
                  for a, C in sorted(cfg.steps.items())],
        "initial_state": [{"site": list(x), "vector": [_encode_complex(c) for c in v]}
                          for x, v in sorted(cfg.initial_state.items())],
        "grid_n": cfg.grid_n,
        "horizon": cfg.horizon,
        "tolerances": dict(cfg.tolerances),
    }
