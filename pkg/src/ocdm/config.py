"""Sweep configuration files.

A config is a YAML (or JSON) mapping. Shared settings live at the top level
and ``variants`` lists the systems to compare; a variant may override
``qam_order`` and ``antennas``. Example::

    n: 1024
    bandwidth_hz: 1.0e7
    qam_order: 4
    guard: {length: 64, mode: CP}
    channel: {kind: eva}
    ebn0_db: [0, 4, 8, 12]
    seed: 7
    stop: {min_bit_errors: 200, max_blocks: 20000}
    variants:
      - {system: OFDM, equalizer: ZF}
      - {system: OCDM, receiver: R2, equalizer: MMSE}
      - {system: OCDM, receiver: R1_TDE, equalizer: TDE, taps: 64}

Channel kinds: ``eva``, ``ten_ray`` (``max_excess_delay_us``, ``paths``),
``awgn`` and ``custom`` with either ``pdp: [[delay_ns, power_db], ...]``
(Rayleigh taps) or ``taps: [[re, im], ...]`` (fixed response).
``ebn0_db`` is a list or ``{start, stop, step}`` (stop inclusive).
"""
from __future__ import annotations

import copy
import re
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from .channel import CHANNEL_KINDS, TEN_RAY_MAX_DELAY, TEN_RAY_PATHS, ChannelModel
from .equalize import EQUALIZER_KINDS, EqualizerSpec
from .modem import GUARD_MODES, QAM_ORDERS, RECEIVER_VARIANTS, ReceiverSpec
from .sim import SYSTEMS, SimConfig


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e7``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "bandwidth_hz": {"type": "number", "exclusiveMinimum": 0},
        "qam_order": {"enum": list(QAM_ORDERS)},
        "antennas": {"type": "integer", "minimum": 1},
        "guard": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "length": {"type": "integer", "minimum": 0},
                "mode": {"enum": list(GUARD_MODES)},
            },
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(CHANNEL_KINDS)},
                "max_excess_delay_us": {"type": "number", "exclusiveMinimum": 0},
                "paths": {"type": "integer", "minimum": 1},
                "pdp": {"type": "array", "items": _pair, "minItems": 1},
                "taps": {"type": "array", "items": _pair, "minItems": 1},
            },
        },
        "ebn0_db": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["start", "stop", "step"],
                    "properties": {
                        "start": {"type": "number"},
                        "stop": {"type": "number"},
                        "step": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            ]
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "stop": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "min_bit_errors": {"type": ["integer", "null"], "minimum": 1},
                "max_blocks": {"type": "integer", "minimum": 1},
            },
        },
        "on_singular": {"enum": ["count", "abort"]},
        "variants": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["system"],
                "properties": {
                    "system": {"enum": list(SYSTEMS)},
                    "receiver": {"enum": list(RECEIVER_VARIANTS)},
                    "equalizer": {"enum": list(EQUALIZER_KINDS)},
                    "taps": {"type": "integer", "minimum": 1},
                    "qam_order": {"enum": list(QAM_ORDERS)},
                    "antennas": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}

DEFAULTS: dict[str, Any] = {
    "n": 1024,
    "bandwidth_hz": 1e7,
    "qam_order": 4,
    "antennas": 1,
    "guard": {"length": 64, "mode": "CP"},
    "channel": {"kind": "eva"},
    "ebn0_db": [0, 5, 10, 15, 20],
    "seed": 0,
    "stop": {"min_bit_errors": 200, "max_blocks": 20000},
    "on_singular": "count",
    "variants": [
        {"system": "OFDM", "equalizer": "ZF"},
        {"system": "OCDM", "receiver": "R2", "equalizer": "ZF"},
        {"system": "OCDM", "receiver": "R2", "equalizer": "MMSE"},
    ],
}


def _path(parts) -> str:
    return "/".join(str(p) for p in parts)


def normalize(raw: dict[str, Any]) -> dict[str, Any]:
    """Validate ``raw`` and return a fully explicit copy with defaults filled.

    The result is what gets embedded in run manifests; feeding it back
    through :func:`build_configs` reproduces the same sweep.
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a mapping")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e.absolute_path), e.message)

    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if isinstance(value, dict) and key in ("guard", "stop"):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = copy.deepcopy(value)

    grid = cfg["ebn0_db"]
    if isinstance(grid, dict):
        count = int(np.floor((grid["stop"] - grid["start"]) / grid["step"] + 1e-9)) + 1
        grid = [float(grid["start"] + i * grid["step"]) for i in range(max(count, 0))]
    cfg["ebn0_db"] = [float(e) for e in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("ebn0_db", "grid must be strictly increasing")

    if cfg["guard"]["length"] > cfg["n"]:
        raise ConfigError("guard/length", f"guard longer than block length {cfg['n']}")

    ch = cfg["channel"]
    if ch["kind"] == "ten_ray":
        ch.setdefault("max_excess_delay_us", TEN_RAY_MAX_DELAY * 1e6)
        ch.setdefault("paths", TEN_RAY_PATHS)
    if ch["kind"] == "custom" and ("pdp" in ch) == ("taps" in ch):
        raise ConfigError("channel", "custom channel needs exactly one of 'pdp' or 'taps'")
    for key in ("pdp", "taps"):
        if key in ch:
            ch[key] = [[float(a), float(b)] for a, b in ch[key]]

    variants = []
    for i, v in enumerate(cfg["variants"]):
        v = dict(v)
        if v["system"] == "OFDM":
            v.setdefault("equalizer", "ZF")
            v.pop("receiver", None)
        else:
            v.setdefault("receiver", "R1_TDE" if v.get("equalizer") == "TDE" else "R2")
            v.setdefault("equalizer", "TDE" if v["receiver"] == "R1_TDE" else "ZF")
        if v["equalizer"] == "TDE":
            v.setdefault("taps", 64)
        else:
            v.pop("taps", None)
        v.setdefault("qam_order", cfg["qam_order"])
        v.setdefault("antennas", cfg["antennas"])
        variants.append(v)
    cfg["variants"] = variants
    # surface semantic errors with a field path before anything runs
    build_configs(cfg, _checked=True)
    return cfg


def _channel_model(ch: dict[str, Any], sample_rate: float) -> ChannelModel:
    kind = ch["kind"]
    if kind == "ten_ray":
        return ChannelModel(
            "ten_ray",
            sample_rate=sample_rate,
            max_excess_delay=ch["max_excess_delay_us"] * 1e-6,
            n_paths=ch["paths"],
        )
    if kind == "custom":
        if "taps" in ch:
            return ChannelModel("custom", sample_rate, taps=tuple(complex(a, b) for a, b in ch["taps"]))
        return ChannelModel("custom", sample_rate, pdp=tuple((a, b) for a, b in ch["pdp"]))
    return ChannelModel(kind, sample_rate)


def build_configs(cfg: dict[str, Any], _checked: bool = False) -> list[SimConfig]:
    """Turn a normalized config mapping into one :class:`SimConfig` per variant."""
    if not _checked:
        cfg = normalize(cfg)
    try:
        channel = _channel_model(cfg["channel"], cfg["bandwidth_hz"])
        channel.max_delay_samples()
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from None
    if channel.max_delay_samples() >= cfg["n"]:
        raise ConfigError("channel", f"channel delay exceeds block length {cfg['n']}")
    out = []
    for i, v in enumerate(cfg["variants"]):
        try:
            eq = EqualizerSpec(v["equalizer"], taps=v.get("taps"))
            receiver = ReceiverSpec(v.get("receiver", "R2"), eq)
            out.append(
                SimConfig(
                    n=cfg["n"],
                    bandwidth_hz=float(cfg["bandwidth_hz"]),
                    qam_order=v["qam_order"],
                    guard_length=cfg["guard"]["length"],
                    guard_mode=cfg["guard"]["mode"],
                    system=v["system"],
                    receiver=receiver,
                    channel=channel,
                    antennas=v["antennas"],
                    ebn0_grid_db=tuple(cfg["ebn0_db"]),
                    seed=cfg["seed"],
                    min_bit_errors=cfg["stop"]["min_bit_errors"],
                    max_blocks=cfg["stop"]["max_blocks"],
                    on_singular=cfg["on_singular"],
                )
            )
        except ValueError as exc:
            raise ConfigError(f"variants/{i}", str(exc)) from None
    return out


def load_config(path) -> dict[str, Any]:
    """Read and normalize a config file (YAML or JSON).

    A run manifest is accepted too; its embedded config is used.
    """
    text = Path(path).read_text()
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"cannot parse {path}: {exc}") from None
    if isinstance(raw, dict) and raw.get("tool") == "ocdm" and "config" in raw:
        raw = raw["config"]
    return normalize(raw)
