"""Exception types shared across the harness.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
TrainingError -> 4.
"""


class ModharnessError(Exception):
    """Base class for all harness errors."""


class ConfigError(ModharnessError):
    """Bad run configuration or CLI usage."""


class DataError(ModharnessError):
    """Unreadable, malformed, or schema-violating input data."""


class TrainingError(ModharnessError):
    """Fine-tuning could not start or finish."""
