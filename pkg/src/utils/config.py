"""
Configuration Module

This module loads experiment configurations from YAML files, applies
command-line overrides and resolves the default output directory.

The output directory comes from the config, then from the
COURNOT_GA_OUTPUT_DIR environment variable (a .env file is honoured), then
falls back to ./results.
"""

import logging
import os
from typing import Any, Dict, Iterable, Optional

import yaml
from dotenv import load_dotenv

from src.harness.experiment import ExperimentConfig
from src.utils.errors import ConfigurationError

# Configure logging
logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "COURNOT_GA_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"


def key_lines(text: str) -> Dict[str, int]:
    """1-based line of every top-level key of a YAML mapping document."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {key.value: key.start_mark.line + 1 for key, _ in node.value}


def parse_override(item: str) -> Dict[str, Any]:
    """
    Parse one `key=value` override; the value is read as YAML.

    Raises:
        ConfigurationError: Missing '=' or unparseable value
    """
    if "=" not in item:
        raise ConfigurationError(f"Override '{item}' is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Cannot parse value of override '{key}': {e}", key=key) from None
    return {key: value}


class ConfigManager:
    """
    Manager for experiment configuration files.
    """

    def __init__(self, env_file: Optional[str] = None):
        """
        Initialize the configuration manager.

        Args:
            env_file: Optional .env file; the default search is used when omitted
        """
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()
        logger.debug("Initialized configuration manager")

    @staticmethod
    def default_output_dir() -> str:
        return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR

    def load_text(self, text: str, overrides: Iterable[str] = (), source: str = "<config>") -> ExperimentConfig:
        """
        Parse a YAML experiment configuration.

        Args:
            text: YAML document
            overrides: `key=value` strings applied on top of the document
            source: Name used in log messages

        Returns:
            ExperimentConfig

        Raises:
            ConfigurationError: Malformed YAML or invalid settings, with the
                line of the offending key when it comes from the document
        """
        try:
            data = yaml.safe_load(text) if text.strip() else {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigurationError(f"{source}: malformed YAML ({getattr(e, 'problem', e)})", line=line) from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{source}: expected a mapping of settings", line=1)

        lines = key_lines(text)
        overridden = set()
        for item in overrides:
            override = parse_override(item)
            data.update(override)
            overridden.update(override)

        try:
            config = ExperimentConfig.from_dict(data)
        except ConfigurationError as e:
            line = None if e.key in overridden else lines.get(e.key)
            origin = "override" if e.key in overridden else source
            raise type(e)(f"{origin}: {e.detail}", line=line, key=e.key) from None

        if not config.output_dir:
            config.output_dir = self.default_output_dir()
        logger.info(f"Loaded configuration from {source}")
        return config

    def load(self, path: str, overrides: Iterable[str] = ()) -> ExperimentConfig:
        """
        Load an experiment configuration file.

        Args:
            path: YAML file
            overrides: `key=value` strings

        Returns:
            ExperimentConfig
        """
        if not os.path.exists(path):
            raise ConfigurationError(f"Config file {path} not found")
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
        return self.load_text(text, overrides, source=path)

    def from_overrides(self, overrides: Iterable[str] = ()) -> ExperimentConfig:
        """Configuration built from defaults and overrides only."""
        return self.load_text("", overrides, source="command line")

    @staticmethod
    def dump(config: ExperimentConfig) -> str:
        """Serialize a configuration to YAML."""
        return yaml.safe_dump(config.to_dict(), sort_keys=False)

    def save(self, config: ExperimentConfig, path: str) -> None:
        """
        Save configuration to file.

        Args:
            config: ExperimentConfig
            path: Target YAML file
        """
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dump(config))
        logger.info(f"Saved configuration to {path}")
