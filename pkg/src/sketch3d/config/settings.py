"""
Configuration Settings for Sketch3D
Process settings via pydantic-settings, JSON run configs and logging setup
"""

import json
import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..errors import ConfigError
from .schema import RunConfig

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings(BaseSettings):
    """Process-level settings with environment variable support (prefix S3D_)"""

    model_config = SettingsConfigDict(
        env_prefix="S3D_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # Application Settings
    APP_NAME: str = "Sketch3D"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # Logging Settings
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_MAX_SIZE_MB: int = 10
    LOG_BACKUP_COUNT: int = 5

    # Compute Settings
    NUM_THREADS: int = 1
    OUTPUT_DIR: str = "runs"

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level

    @field_validator("NUM_THREADS")
    @classmethod
    def validate_threads(cls, v):
        if v < 1:
            raise ValueError("NUM_THREADS must be >= 1")
        return v

    def create_directories(self):
        """Create log and output directories"""
        directories = [Path(self.OUTPUT_DIR)]
        if self.LOG_FILE:
            directories.append(Path(self.LOG_FILE).parent)
        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)


class DevelopmentSettings(Settings):
    """Development environment settings"""
    DEBUG: bool = True
    LOG_LEVEL: str = "DEBUG"


class ProductionSettings(Settings):
    """Production environment settings"""
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"
    LOG_FILE: Optional[str] = "logs/sketch3d.log"


class TestingSettings(Settings):
    """Testing environment settings"""
    DEBUG: bool = True
    LOG_LEVEL: str = "DEBUG"


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get global settings instance (singleton pattern)"""
    global _settings
    if _settings is None:
        _settings = get_settings_for_environment()
    return _settings


def get_settings_for_environment(environment: Optional[str] = None) -> Settings:
    """Get settings for specific environment"""
    if environment is None:
        environment = os.getenv("ENVIRONMENT", "development")

    settings_map = {
        "development": DevelopmentSettings,
        "production": ProductionSettings,
        "testing": TestingSettings,
    }

    settings_class = settings_map.get(environment, Settings)
    return settings_class()


def configure_logging(settings: Settings) -> None:
    """Install a console handler on the root logger, plus a rotating file handler when LOG_FILE is set"""
    root = logging.getLogger()
    root.setLevel(settings.LOG_LEVEL)
    for handler in list(root.handlers):
        root.removeHandler(handler)

    console = logging.StreamHandler()
    console.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(console)

    if settings.LOG_FILE:
        settings.create_directories()
        file_handler = RotatingFileHandler(
            settings.LOG_FILE,
            maxBytes=settings.LOG_MAX_SIZE_MB * 1024 * 1024,
            backupCount=settings.LOG_BACKUP_COUNT,
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)


def validate_configuration(config: RunConfig) -> List[str]:
    """Validate cross-section choices and return a list of warnings"""
    warnings = []

    resolution = config.data.resolution
    if config.augment.erode_kernel > resolution // 4:
        warnings.append(
            f"erode_kernel {config.augment.erode_kernel} is large for resolution "
            f"{resolution}; thin strokes will vanish"
        )

    n_train = config.data.count * config.data.splits["train"]
    if n_train < config.train.batch_size:
        warnings.append("train split smaller than one batch")

    if config.train.checkpoint_interval > config.train.steps:
        warnings.append("checkpoint_interval exceeds steps; only the final checkpoint is written")

    if config.tsne.momentum_switch > config.tsne.iterations:
        warnings.append("tsne momentum switch never reached")

    if config.loss.lambda_sv == 0 and config.loss.lambda_ce == 0 and config.loss.lambda_dice == 0:
        warnings.append("all loss weights are zero; training will not move parameters")

    return warnings


class ConfigLoader:
    """Run configuration loader with support for different sources"""

    @staticmethod
    def from_dict(config_dict: Dict[str, Any]) -> RunConfig:
        """Load configuration from dictionary"""
        try:
            config = RunConfig(**config_dict)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
        for warning in validate_configuration(config):
            logger.warning(warning)
        return config

    @staticmethod
    def from_json_file(file_path: str) -> RunConfig:
        """Load configuration from JSON file"""
        path = Path(file_path)
        if not path.is_file():
            raise ConfigError(f"Configuration file not found: {path}")
        try:
            with open(path, "r") as f:
                config_dict = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration file {path} is not valid JSON: {e}") from e
        return ConfigLoader.from_dict(config_dict)

    @staticmethod
    def default() -> RunConfig:
        """Default run configuration (desk scale)"""
        return RunConfig()


__all__ = [
    "Settings",
    "get_settings",
    "get_settings_for_environment",
    "configure_logging",
    "validate_configuration",
    "ConfigLoader",
    "DevelopmentSettings",
    "ProductionSettings",
    "TestingSettings",
]
