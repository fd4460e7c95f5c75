class ConfigError(ValueError):
    """Raised for invalid scenario parameters, before any simulation work."""
