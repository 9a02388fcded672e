"""Configuration settings for the simulator."""
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from psiotdr.errors import ConfigurationError

# Define base directory
BASE_DIR = Path(__file__).parent.parent.parent

# Load environment variables from .env file
env_file = ".env.test" if os.getenv("ENV") == "test" else ".env"
load_dotenv(env_file)


# Define data directories from environment variables
DATA_DIR = Path(os.getenv("PSIOTDR_DATA_DIR", "./data"))
LOG_DIR = Path(os.getenv("PSIOTDR_LOG_DIR", "./logs"))

# Simulation limits
MAX_HISTOGRAM_BINS = 2**26  # memory guard for one histogram
DEFAULT_GUARD_S = 10e-6  # dead interval between the last echo and the next pulse


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes", "on")


def ensure_directories() -> None:
    """Ensure all required directories exist."""
    for directory in (DATA_DIR, LOG_DIR):
        directory.mkdir(parents=True, exist_ok=True)


@dataclass
class PathSettings:
    """Path configuration settings."""
    base_dir: Path = BASE_DIR
    data_dir: Path = DATA_DIR
    log_dir: Path = LOG_DIR


@dataclass
class LoggingSettings:
    """Logging configuration settings."""
    level: str = os.getenv("LOG_LEVEL", "INFO")
    format: str = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    dir: Optional[str] = os.getenv("LOG_DIR")
    rotation: str = os.getenv("LOG_FILE_ROTATION", "midnight")
    interval: int = int(os.getenv("LOG_FILE_ROTATION_INTERVAL", "1"))
    backup_count: int = int(os.getenv("LOG_FILE_ROTATION_BACKUP_COUNT", "30"))


@dataclass
class SimulationSettings:
    """Monte Carlo engine settings."""
    threads: int = int(os.getenv("PSIOTDR_THREADS", "1"))
    chunk_shots: int = int(os.getenv("PSIOTDR_CHUNK_SHOTS", "65536"))  # rounded to whole 4096-shot random blocks
    guard_s: float = float(os.getenv("PSIOTDR_GUARD_S", str(DEFAULT_GUARD_S)))
    max_bins: int = int(os.getenv("PSIOTDR_MAX_BINS", str(MAX_HISTOGRAM_BINS)))
    progress: bool = _env_bool("PSIOTDR_PROGRESS", "false")


@dataclass
class AnalysisSettings:
    """Trace analysis settings."""
    min_prominence_db: float = float(os.getenv("PSIOTDR_MIN_PROMINENCE_DB", "1.0"))
    min_peak_significance: float = float(os.getenv("PSIOTDR_MIN_PEAK_SIGNIFICANCE", "5.0"))
    resolvable_dip_db: float = float(os.getenv("PSIOTDR_RESOLVABLE_DIP_DB", "3.0"))
    noise_percentile: float = float(os.getenv("PSIOTDR_NOISE_PERCENTILE", "98"))
    asymmetry_threshold: float = float(os.getenv("PSIOTDR_ASYMMETRY_THRESHOLD", "0.15"))
    beat_peak_ratio: float = float(os.getenv("PSIOTDR_BEAT_PEAK_RATIO", "3.0"))
    min_fit_samples: int = int(os.getenv("PSIOTDR_MIN_FIT_SAMPLES", "50"))
    min_bins_per_fwhm: float = float(os.getenv("PSIOTDR_MIN_BINS_PER_FWHM", "4"))
    pileup_correction: bool = _env_bool("PSIOTDR_PILEUP_CORRECTION", "true")


@dataclass
class MonitoringSettings:
    """Metrics exporter settings."""
    port: Optional[int] = int(os.environ["PSIOTDR_METRICS_PORT"]) if os.getenv("PSIOTDR_METRICS_PORT") else None


def get_path_settings() -> PathSettings:
    """Get path settings."""
    return PathSettings()


def get_logging_settings() -> LoggingSettings:
    """Get logging settings."""
    return LoggingSettings()


def get_simulation_settings() -> SimulationSettings:
    """Get simulation settings."""
    return SimulationSettings()


def get_analysis_settings() -> AnalysisSettings:
    """Get analysis settings."""
    return AnalysisSettings()


def get_monitoring_settings() -> MonitoringSettings:
    """Get monitoring settings."""
    return MonitoringSettings()


@dataclass
class Settings:
    """Main settings class that combines all configuration settings."""
    paths: PathSettings = field(default_factory=get_path_settings)
    logging: LoggingSettings = field(default_factory=get_logging_settings)
    simulation: SimulationSettings = field(default_factory=get_simulation_settings)
    analysis: AnalysisSettings = field(default_factory=get_analysis_settings)
    monitoring: MonitoringSettings = field(default_factory=get_monitoring_settings)

    def validate(self) -> None:
        """Validate settings and raise ConfigurationError if invalid."""
        problems = []
        if self.simulation.threads < 1:
            problems.append("PSIOTDR_THREADS must be positive")
        if self.simulation.chunk_shots < 1:
            problems.append("PSIOTDR_CHUNK_SHOTS must be positive")
        if self.simulation.guard_s < 0:
            problems.append("PSIOTDR_GUARD_S cannot be negative")
        if self.simulation.max_bins < 1:
            problems.append("PSIOTDR_MAX_BINS must be positive")
        if not 0 < self.analysis.noise_percentile < 100:
            problems.append("PSIOTDR_NOISE_PERCENTILE must be between 0 and 100")
        if self.analysis.min_prominence_db <= 0:
            problems.append("PSIOTDR_MIN_PROMINENCE_DB must be positive")
        if self.analysis.resolvable_dip_db <= 0:
            problems.append("PSIOTDR_RESOLVABLE_DIP_DB must be positive")
        if self.analysis.min_fit_samples < 2:
            problems.append("PSIOTDR_MIN_FIT_SAMPLES must be at least 2")
        if self.analysis.beat_peak_ratio <= 0:
            problems.append("PSIOTDR_BEAT_PEAK_RATIO must be positive")
        if problems:
            raise ConfigurationError(problems)


# Create global settings instance
settings = Settings()
settings.validate()
