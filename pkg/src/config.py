"""Application configuration."""
from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Simulator settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="RAKESIM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # System scale: T_s = spread_length * chip_period_ns
    chip_period_ns: float = 1.0
    spread_length: int = 12

    # Information rate
    quad_points: int = 4096
    solver_tolerance_db: float = 1e-4
    snr_bracket_low_db: float = -60.0
    snr_bracket_high_db: float = 80.0

    # Tap window
    window_start_symbols: int = 8
    window_cap_symbols: int = 1024
    window_tolerance: float = 1e-8
    oversampling: int = 64

    # Sweeps
    desk_channels: int = 200
    full_channels: int = 1000
    threads: int = 1
    show_progress: bool = True
    output_dir: Path = Path("results")
    run_timezone: str = "UTC"

    # Application
    log_level: str = "INFO"
    environment: str = "development"

    def validate_config(self):
        """Validate cross-field constraints"""
        assert self.chip_period_ns > 0, "RAKESIM_CHIP_PERIOD_NS must be positive"
        assert self.spread_length >= 1, "RAKESIM_SPREAD_LENGTH must be >= 1"
        assert self.quad_points >= 64, "RAKESIM_QUAD_POINTS must be >= 64"
        assert self.quad_points & (self.quad_points - 1) == 0, "RAKESIM_QUAD_POINTS must be a power of two"
        assert self.solver_tolerance_db > 0, "RAKESIM_SOLVER_TOLERANCE_DB must be positive"
        assert self.snr_bracket_low_db < self.snr_bracket_high_db, "SNR bracket is empty"
        assert 1 <= self.window_start_symbols <= self.window_cap_symbols, "Bad tap window limits"
        assert self.threads >= 1, "RAKESIM_THREADS must be >= 1"


# Global settings instance
settings = Settings()
