"""
Configuration loading for rbm-phase.
Priority: $RBM_PHASE_CONFIG > config.yaml > config.template.yaml
"""

import logging
import os
from typing import Any, Optional

import yaml
from dotenv import load_dotenv
from yaml.loader import SafeLoader

from numerics.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "RBM_PHASE_CONFIG"
LOG_LEVEL_ENV_VAR = "RBM_PHASE_LOG_LEVEL"
TEMPLATE_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.template.yaml")

REQUIRED_SECTIONS = (
    "logging",
    "quadrature",
    "roots",
    "power_iteration",
    "curie_weiss",
    "mean_field",
    "particles",
    "stationary",
    "output",
)


def _load_yaml_config(path: str) -> dict:
    with open(path) as file:
        config = yaml.load(file, Loader=SafeLoader)
    if not isinstance(config, dict):
        raise ConfigError(f"Configuration file '{path}' does not contain a mapping")
    return config


def load_config(config_path: Optional[str] = None) -> dict:
    """
    Load configuration from YAML.

    `.env` is read first, so RBM_PHASE_CONFIG may come from there. Without an
    explicit path and without config.yaml, the bundled template supplies every
    default.

    Args:
        config_path: Explicit config file (overrides the environment)

    Returns:
        Configuration dictionary
    """
    load_dotenv()

    path = config_path or os.getenv(CONFIG_ENV_VAR)
    if path:
        try:
            config = _load_yaml_config(path)
            logger.info("Loaded configuration from %s", path)
        except FileNotFoundError:
            raise ConfigError(f"Configuration file '{path}' not found")
        except yaml.YAMLError as e:
            raise ConfigError(f"Error parsing configuration '{path}': {e}")
    elif os.path.exists("config.yaml"):
        config = _load_yaml_config("config.yaml")
        logger.info("Loaded configuration from config.yaml")
    elif os.path.exists(TEMPLATE_PATH):
        config = _load_yaml_config(TEMPLATE_PATH)
        logger.debug("Using default configuration from %s", TEMPLATE_PATH)
    else:
        raise ConfigError(f"No config.yaml found and template '{TEMPLATE_PATH}' is missing")

    # fill sections a partial user config leaves out
    if os.path.exists(TEMPLATE_PATH) and path != TEMPLATE_PATH:
        defaults = _load_yaml_config(TEMPLATE_PATH)
        for section, values in defaults.items():
            merged = dict(values) if isinstance(values, dict) else values
            if isinstance(merged, dict):
                merged.update(config.get(section) or {})
                config[section] = merged
            else:
                config.setdefault(section, merged)

    level = os.getenv(LOG_LEVEL_ENV_VAR)
    if level:
        config.setdefault("logging", {})["level"] = level.upper()

    return config


def check_config(config: dict) -> list:
    """
    List structural problems in a configuration.

    Returns:
        List of error messages (empty when the config is complete)
    """
    problems = []
    for section in REQUIRED_SECTIONS:
        if not isinstance(config.get(section), dict):
            problems.append(f"Missing section '{section}'")
    return problems


def get_setting(config: dict, dotted_key: str, default: Any = None) -> Any:
    """
    Look up a nested setting such as "stationary.k_max".

    Args:
        config: Configuration dictionary
        dotted_key: Dot-separated path
        default: Returned when any part of the path is missing

    Returns:
        The setting value or default
    """
    node: Any = config
    for part in dotted_key.split("."):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node
