"""Configuration handling."""

from .settings import (
    config_from_mapping,
    default_data_root,
    load_config,
    parse_config,
    resolve_config,
    save_config,
    serialize_config,
    validate_config,
)

__all__ = [
    "config_from_mapping",
    "default_data_root",
    "load_config",
    "parse_config",
    "resolve_config",
    "save_config",
    "serialize_config",
    "validate_config",
]
