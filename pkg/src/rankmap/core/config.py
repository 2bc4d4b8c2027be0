"""Loading, merging and validating experiment configurations."""

import json
import types
import typing
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ValidationError

from rankmap.core.models import ExperimentConfig, Preset
from rankmap.core.presets import preset_config
from rankmap.utils.errors import ConfigurationError


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a YAML or JSON configuration file into a mapping.

    Raises:
        ConfigurationError: If the file is missing, unparsable or not a mapping
    """
    if not path.exists():
        raise ConfigurationError(f"Configuration file not found: {path}", config_path=path)

    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Could not parse configuration: {e}", config_path=path) from e

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(
            f"Configuration must be a mapping, got {type(raw).__name__}", config_path=path
        )
    return raw


def merge_config(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def _model_class(annotation: Any) -> type[BaseModel] | None:
    """Unwrap ``Model | None`` annotations to the model class."""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    if isinstance(annotation, types.UnionType) or typing.get_origin(annotation) is typing.Union:
        for arg in typing.get_args(annotation):
            found = _model_class(arg)
            if found is not None:
                return found
    return None


def _known_fields(loc: tuple[Any, ...]) -> list[str]:
    """Field names accepted at the parent of ``loc``."""
    model: type[BaseModel] | None = ExperimentConfig
    for part in loc[:-1]:
        if model is None or not isinstance(part, str) or part not in model.model_fields:
            return []
        model = _model_class(model.model_fields[part].annotation)
    return list(model.model_fields) if model is not None else []


def validate_config(raw: dict[str, Any], config_path: Path | None = None) -> ExperimentConfig:
    """Validate a raw mapping into an ExperimentConfig.

    Raises:
        ConfigurationError: On the first validation error, with its dotted field path
    """
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        field_path = ".".join(str(part) for part in loc) or None
        known = _known_fields(loc) if first["type"] == "extra_forbidden" else None
        message = first["msg"]
        if first["type"] == "extra_forbidden":
            message = f"Unknown configuration key '{loc[-1]}'"
        raise ConfigurationError(
            message,
            field_path=field_path,
            known_fields=known,
            config_path=config_path,
        ) from e


def parse_ranks(text: str) -> list[int]:
    """Parse ``"25,50,100"`` into a list of ranks."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigurationError(
            f"Ranks must be comma-separated integers, got '{text}'", field_path="ranks"
        ) from e


def resolve_config(
    preset: Preset | str | None = None,
    config_path: Path | None = None,
    seed: int | None = None,
    ranks: list[int] | None = None,
    output_dir: Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Combine preset, config file, ``overrides`` and flag values, in that order.

    Raises:
        ConfigurationError: If neither a preset nor a config file names an experiment,
            or the combined configuration is invalid
    """
    raw: dict[str, Any] = preset_config(preset) if preset is not None else {}
    if config_path is not None:
        raw = merge_config(raw, load_config_file(config_path))
    if overrides:
        raw = merge_config(raw, overrides)
    if seed is not None:
        raw["seeds"] = [seed]
    if ranks is not None:
        raw["ranks"] = ranks
    if output_dir is not None:
        raw["output_dir"] = str(output_dir)

    if "experiment" not in raw:
        raise ConfigurationError(
            "No experiment selected",
            field_path="experiment",
            config_path=config_path,
        )
    return validate_config(raw, config_path)
