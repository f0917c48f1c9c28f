from .config_parser import ConfigError, parse_config

__all__ = [
	'ConfigError',
	'parse_config',
]
