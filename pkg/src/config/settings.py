"""Configuration loading, validation and command-line overrides."""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import typing
from collections.abc import Mapping
from pathlib import Path

import yaml
from dotenv import load_dotenv

from src.errors import ConfigError
from src.models.config import TrainConfig
from src.selectors.ablation import ablation_mode

DATA_ROOT_ENV = "REFLECTSEG_DATA_ROOT"
LR_SCHEDULES = ("poly", "constant")

_FIELD_TYPES: dict[str, object] = typing.get_type_hints(TrainConfig)


def validate_config(cfg: TrainConfig) -> TrainConfig:
    """Validate a configuration and return its normalized form.

    Args:
        cfg: Configuration to check

    Returns:
        Config with ``n_choices`` sorted and de-duplicated

    Raises:
        ConfigError: If any field is out of range or fields are inconsistent
    """
    n_choices = tuple(sorted(set(cfg.n_choices)))
    if not n_choices:
        raise ConfigError("n_choices must not be empty")

    for name in ("alpha", "beta", "lr", "momentum", "weight_decay", "gaussian_sigma"):
        value = getattr(cfg, name)
        if not math.isfinite(value) or value < 0:
            raise ConfigError(f"{name} must be a finite value >= 0, got {value}")
    if not 0.0 <= cfg.ema_lambda <= 1.0:
        raise ConfigError(f"ema_lambda must lie in [0, 1], got {cfg.ema_lambda}")
    if not 0.0 <= cfg.s1_confidence <= 1.0:
        raise ConfigError(f"s1_confidence must lie in [0, 1], got {cfg.s1_confidence}")

    for name in ("image_size", "in_channels", "k_fg", "max_iters", "batch_size"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")
    for name in ("val_interval", "checkpoint_interval", "log_interval"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")

    if min(n_choices) < 1:
        raise ConfigError(f"Every grid size in n_choices must be >= 1, got {n_choices}")
    if cfg.image_size < max(n_choices):
        raise ConfigError(
            f"image_size {cfg.image_size} is smaller than the largest grid size {max(n_choices)}"
        )
    if cfg.fixed_n is not None and not 1 <= cfg.fixed_n <= cfg.image_size:
        raise ConfigError(f"fixed_n must lie in [1, image_size], got {cfg.fixed_n}")

    if not cfg.widths or any(w < 1 for w in cfg.widths):
        raise ConfigError(f"widths must be positive channel counts, got {cfg.widths}")
    stride = 2 ** (len(cfg.widths) - 1)
    if cfg.image_size % stride:
        raise ConfigError(
            f"image_size {cfg.image_size} must be divisible by {stride} for {len(cfg.widths)} U-Net levels"
        )

    if cfg.lr_schedule not in LR_SCHEDULES:
        raise ConfigError(f"lr_schedule must be one of {LR_SCHEDULES}, got {cfg.lr_schedule!r}")
    if not 0 <= cfg.canny_low < cfg.canny_high:
        raise ConfigError(
            f"Canny thresholds need 0 <= canny_low < canny_high, got {cfg.canny_low}, {cfg.canny_high}"
        )
    if cfg.dilation_radius < 1:
        raise ConfigError(f"dilation_radius must be >= 1, got {cfg.dilation_radius}")
    if cfg.ssim_window < 3 or cfg.ssim_window % 2 == 0:
        raise ConfigError(f"ssim_window must be odd and >= 3, got {cfg.ssim_window}")
    if cfg.ssim_k1 <= 0 or cfg.ssim_k2 <= 0 or cfg.ssim_sigma <= 0:
        raise ConfigError("ssim_k1, ssim_k2 and ssim_sigma must be > 0")

    # Raises on contradictory ablation flags
    _ = ablation_mode(cfg)

    return dataclasses.replace(cfg, n_choices=n_choices, widths=tuple(cfg.widths))


def config_from_mapping(data: Mapping[str, object], base: TrainConfig | None = None) -> TrainConfig:
    """Build a validated config from a flat mapping.

    Args:
        data: Flat key/value mapping (YAML document or CLI overrides)
        base: Config supplying values for missing keys

    Returns:
        Validated TrainConfig

    Raises:
        ConfigError: On unknown keys, wrong types or invalid values
    """
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    values = {name: _coerce(name, _FIELD_TYPES[name], value) for name, value in data.items()}
    return validate_config(dataclasses.replace(base or TrainConfig(), **values))


def serialize_config(cfg: TrainConfig) -> str:
    """Serialize a config to a flat YAML document."""
    data: dict[str, object] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        data[f.name] = list(value) if isinstance(value, tuple) else value
    return yaml.safe_dump(data, sort_keys=False)


def parse_config(text: str) -> TrainConfig:
    """Parse a flat YAML document into a validated config."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML config: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a flat key/value mapping")
    return config_from_mapping(typing.cast(dict[str, object], data))


def load_config(path: Path) -> TrainConfig:
    """Load a config file.

    Raises:
        ConfigError: If the file cannot be read or is invalid
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    return parse_config(text)


def save_config(cfg: TrainConfig, path: Path) -> None:
    """Write the effective config snapshot."""
    path.parent.mkdir(parents=True, exist_ok=True)
    _ = path.write_text(serialize_config(cfg), encoding="utf-8")


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """Register one ``--field-name`` flag per TrainConfig field.

    Flags are only set on the namespace when given, so absent flags never
    override the file. Booleans also get ``--no-field-name``; optional integers
    accept ``none`` to clear a value set in the file.
    """
    group = parser.add_argument_group("training configuration")
    for name, hint in _FIELD_TYPES.items():
        flag = "--" + name.replace("_", "-")
        kwargs: dict[str, typing.Any] = {"dest": name, "default": argparse.SUPPRESS}
        if hint is bool:
            _ = group.add_argument(flag, action=argparse.BooleanOptionalAction, **kwargs)
        elif hint == tuple[int, ...]:
            _ = group.add_argument(flag, type=int, nargs="+", **kwargs)
        elif hint is int:
            _ = group.add_argument(flag, type=int, **kwargs)
        elif hint == int | None:
            _ = group.add_argument(flag, type=_optional_int, **kwargs)
        elif hint is float:
            _ = group.add_argument(flag, type=float, **kwargs)
        else:
            _ = group.add_argument(flag, type=str, **kwargs)


def overrides_from_namespace(args: argparse.Namespace) -> dict[str, object]:
    """Collect explicitly given config flags from parsed arguments."""
    given = vars(args)
    return {name: given[name] for name in _FIELD_TYPES if name in given}


def resolve_config(config_path: Path | None, overrides: Mapping[str, object]) -> TrainConfig:
    """Load the config file (if any) and apply CLI overrides on top."""
    base = load_config(config_path) if config_path is not None else TrainConfig()
    return config_from_mapping(overrides, base=base)


def default_data_root() -> Path | None:
    """Data root from the environment (``.env`` honoured), if set."""
    _ = load_dotenv()
    value = os.getenv(DATA_ROOT_ENV)
    return Path(value) if value else None


def _coerce(name: str, hint: object, value: object) -> object:
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}")
        return value
    if hint == int | None:
        if value is None:
            return None
        hint = int
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if hint == tuple[int, ...]:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{name} must be a list of integers, got {value!r}")
        return tuple(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string, got {value!r}")
    return value


def _optional_int(text: str) -> int | None:
    if text.lower() in ("none", "null"):
        return None
    return int(text)
