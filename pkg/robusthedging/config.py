import copy
import logging
import os
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from robusthedging.errors import ConfigError
from robusthedging.schemas.config import PipelineConfig, SyntheticSpec

load_dotenv()

logger = logging.getLogger(__name__)


class Settings:
    HEDGE_CONFIG: str = os.getenv("HEDGE_CONFIG", "")
    HEDGE_OUTPUT_DIR: str = os.getenv("HEDGE_OUTPUT_DIR", "")
    HEDGE_WORKERS: int = int(os.getenv("HEDGE_WORKERS", "1"))
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")


settings = Settings()


def _read_yaml(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    return data


def _set_dotted(target: dict[str, Any], key: str, value: Any) -> None:
    """'bootstrap.seed' -> target['bootstrap']['seed'] = value."""
    *parents, leaf = key.split(".")
    node = target
    for part in parents:
        node = node.setdefault(part, {})
    node[leaf] = value


def apply_overrides(raw: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(raw)
    for key, value in overrides.items():
        if value is not None:
            _set_dotted(merged, key, value)
    return merged


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> PipelineConfig:
    """
    Load the YAML experiment config, apply CLI overrides and validate.

    Falls back to HEDGE_CONFIG when no path is given, and to the defaults when
    neither is set. HEDGE_OUTPUT_DIR / HEDGE_WORKERS fill keys the file omits.
    """
    path = path or settings.HEDGE_CONFIG or None
    raw = _read_yaml(path) if path else {}
    if settings.HEDGE_OUTPUT_DIR:
        raw.setdefault("output_dir", settings.HEDGE_OUTPUT_DIR)
    if settings.HEDGE_WORKERS > 1:
        raw.setdefault("workers", settings.HEDGE_WORKERS)
    raw = apply_overrides(raw, overrides or {})
    try:
        config = PipelineConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    logger.info("Loaded config %s (hash %s)", path or "<defaults>", config.config_hash()[:12])
    return config


def load_synthetic_spec(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> SyntheticSpec:
    raw = _read_yaml(path) if path else {}
    raw = apply_overrides(raw, overrides or {})
    try:
        return SyntheticSpec.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid synthetic spec: {exc}") from exc


def dump_config(config: PipelineConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
