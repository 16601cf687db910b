"""Global configuration for ajive-cli."""

from dataclasses import dataclass

DEFAULT_REPLICATES = 1000
OUTPUT_DIR_ENVVAR = "AJIVE_OUTPUT_DIR"


@dataclass
class Config:
    """Global configuration settings."""

    n_jobs: int = 1
    """Number of joblib workers used for resampling and simulation loops."""


# Global config instance
config: Config = Config()
