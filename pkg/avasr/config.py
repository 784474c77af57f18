"""Configuration management for AVASR runs."""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import pydantic

try:
    import tomllib
except ImportError:
    import tomli as tomllib  # type: ignore[import-not-found,no-redef]

from avasr.exceptions import ConfigurationError
from avasr.models import AVASRConfig, DataConfig, DecodeConfig, TrainConfig


logger = logging.getLogger(__name__)

ENV_PREFIX = "AVASR_"
PROJECT_CONFIG = ".avasr.toml"
RESOLVED_CONFIG = "resolved_config.toml"

SECTIONS: dict[str, type[pydantic.BaseModel]] = {
    "model": AVASRConfig,
    "train": TrainConfig,
    "data": DataConfig,
    "decode": DecodeConfig,
}
KEYS: dict[str, str] = {
    key: section for section, model in SECTIONS.items() for key in model.model_fields
}


class Config:
    """Run configuration with multi-source support.

    Every key of :class:`AVASRConfig`, :class:`TrainConfig`,
    :class:`DataConfig` and :class:`DecodeConfig` is a flat key.

    Configuration priority (highest to lowest):
    1. Explicit overrides (CLI flags, keyword arguments)
    2. Environment variables (``AVASR_<KEY>``)
    3. Config file passed explicitly
    4. Project-level config (./.avasr.toml)
    5. User-level config (~/.avasr/config)
    6. Default values

    Config files are TOML. Keys may sit at top level or inside a table named
    after ``config_env``; the table wins over top-level keys.
    """

    def __init__(
        self,
        overrides: Mapping[str, Any] | None = None,
        config_file: Path | None = None,
        config_env: str = "default",
    ):
        """Initialize configuration.

        Args:
            overrides: Explicit values; ``None`` values are ignored
            config_file: Run config file
            config_env: Table selected inside config files

        Raises:
            ConfigurationError: On unknown keys, unreadable files or values
                that fail validation
        """
        self.config_env = config_env
        self.config_file = Path(config_file) if config_file else None

        explicit = {k: v for k, v in (overrides or {}).items() if v is not None}
        self._check_keys(explicit, "overrides")

        # Load from config files
        user_config = self._section(self._load_user_config(), "user config")
        project_config = self._section(self._load_project_config(), "project config")
        file_config = (
            self._section(self._load_toml_file(self.config_file), str(self.config_file))
            if self.config_file
            else {}
        )

        self.values: dict[str, Any] = {}
        for key in KEYS:
            value = self._get_value(
                key,
                explicit=explicit.get(key),
                env_var=f"{ENV_PREFIX}{key.upper()}",
                file_config=file_config,
                project_config=project_config,
                user_config=user_config,
            )
            if value is not None:
                self.values[key] = value

        self.model: AVASRConfig = self._build("model")  # type: ignore[assignment]
        self.train: TrainConfig = self._build("train")  # type: ignore[assignment]
        self.data: DataConfig = self._build("data")  # type: ignore[assignment]
        self.decode: DecodeConfig = self._build("decode")  # type: ignore[assignment]

    def _get_value(
        self,
        key: str,
        explicit: Any = None,
        env_var: str | None = None,
        file_config: dict[str, Any] | None = None,
        project_config: dict[str, Any] | None = None,
        user_config: dict[str, Any] | None = None,
    ) -> Any:
        """Get configuration value with priority; None means "use the default"."""
        # 1. Explicit parameter (highest priority)
        if explicit is not None:
            return explicit

        # 2. Environment variable
        if env_var and (env_value := os.environ.get(env_var)):
            return env_value

        # 3. Explicit config file
        if file_config and key in file_config:
            return file_config[key]

        # 4. Project-level config
        if project_config and key in project_config:
            return project_config[key]

        # 5. User-level config
        if user_config and key in user_config:
            return user_config[key]

        return None

    def _build(self, section: str) -> pydantic.BaseModel:
        model = SECTIONS[section]
        fields = {k: v for k, v in self.values.items() if KEYS[k] == section}
        try:
            return model(**fields)
        except pydantic.ValidationError as e:
            bad = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
            raise ConfigurationError(
                f"Invalid {section} configuration: {e}",
                error_code="INVALID_CONFIG",
                details={"section": section, "keys": bad},
            ) from e

    def _section(self, data: dict[str, Any], source: str) -> dict[str, Any]:
        flat = {k: v for k, v in data.items() if not isinstance(v, dict)}
        table = data.get(self.config_env)
        if isinstance(table, dict):
            flat.update(table)
        self._check_keys(flat, source)
        return flat

    @staticmethod
    def _check_keys(values: Mapping[str, Any], source: str) -> None:
        unknown = sorted(set(values) - set(KEYS))
        if unknown:
            raise ConfigurationError(
                f"Unknown configuration keys in {source}: {', '.join(unknown)}",
                error_code="UNKNOWN_CONFIG_KEY",
                details={"source": source, "keys": unknown},
            )

    def _load_user_config(self) -> dict[str, Any]:
        """Load user-level configuration from ~/.avasr/config."""
        return self._load_toml_file(Path.home() / ".avasr" / "config")

    def _load_project_config(self) -> dict[str, Any]:
        """Load project-level configuration from ./.avasr.toml."""
        return self._load_toml_file(Path.cwd() / PROJECT_CONFIG)

    def _load_toml_file(self, path: Path) -> dict[str, Any]:
        """Load TOML configuration file."""
        if not path.exists():
            if path == self.config_file:
                raise ConfigurationError(
                    f"Config file {path} does not exist",
                    error_code="CONFIG_NOT_FOUND",
                    details={"path": str(path)},
                )
            return {}

        try:
            with path.open("rb") as f:
                return tomllib.load(f)
        except Exception as e:
            raise ConfigurationError(
                f"Failed to load config file {path}: {e}",
                error_code="CONFIG_LOAD_ERROR",
                details={"path": str(path), "error": str(e)},
            ) from e

    def resolved(self) -> dict[str, Any]:
        """Every key with its effective value, defaults included."""
        out: dict[str, Any] = {}
        for section in SECTIONS:
            out.update(getattr(self, section).model_dump())
        return out

    def dumps(self) -> str:
        """Resolved configuration as flat TOML, grouped by section."""
        lines = []
        for section in SECTIONS:
            lines.append(f"# {section}")
            for key, value in getattr(self, section).model_dump().items():
                if value is None:
                    lines.append(f"# {key} is unset")
                else:
                    lines.append(f"{key} = {_toml_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def write_resolved(self, directory: Path) -> Path:
        """Persist the resolved echo next to a run's outputs."""
        path = Path(directory) / RESOLVED_CONFIG
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        logger.info("Resolved config written to %s", path)
        return path

    def __repr__(self) -> str:
        """Return string representation of config."""
        return (
            f"Config("
            f"config_env={self.config_env}, "
            f"config_file={self.config_file}, "
            f"d_model={self.model.d_model}, "
            f"gamma={self.train.gamma}, "
            f"seed={self.train.seed}, "
            f"beam_size={self.decode.beam_size})"
        )


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return json.dumps(str(value))
