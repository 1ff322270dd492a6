"""
Runner factory for the elderly-treatment models
"""

import importlib
import os

from .errors import ConfigError


def _load_config(config_class):
    if not isinstance(config_class, str):
        return config_class
    module_name, _, class_name = config_class.rpartition('.')
    try:
        return getattr(importlib.import_module(module_name), class_name)
    except (ImportError, AttributeError, ValueError) as exc:
        raise ConfigError(f"Cannot load configuration {config_class!r}: {exc}") from exc


def create_runner(config_class='config.DevelopmentConfig'):
    """Create and configure a ScenarioRunner"""
    config = _load_config(config_class)

    # Override from environment variable if set
    if os.getenv('ELDERCULTURE_CONFIG'):
        config = _load_config(os.getenv('ELDERCULTURE_CONFIG'))

    # Setup logger
    from .utils.logger import setup_logger
    setup_logger(config)

    from .runner import ScenarioRunner
    return ScenarioRunner(config)
