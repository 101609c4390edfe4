from .config import BrokerConfig, ConfigError, load_yaml_with_lines
from .broker import BLOCK_LOG_NAME, Broker

__all__ = ["BrokerConfig", "ConfigError", "load_yaml_with_lines",
           "BLOCK_LOG_NAME", "Broker"]
