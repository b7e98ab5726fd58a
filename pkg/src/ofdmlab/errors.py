"""Error taxonomy shared by the library and the command line."""


class ConfigError(ValueError):
    """Bad or inconsistent experiment configuration (CLI exit code 1)."""


class NumericError(RuntimeError):
    """Numeric or validation failure during a run (CLI exit code 2)."""
