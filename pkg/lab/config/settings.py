"""
Configuration settings for Attractor Lab
"""
from pydantic import Field
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    """Application settings"""

    # Logging
    log_level: str = Field(default="INFO")
    log_file: str = Field(default="")

    # Integrator
    blowup_threshold: float = Field(default=1e12, gt=0)
    history_nodes: int = Field(default=64, ge=2)

    # Memory kernels
    tail_epsilon: float = Field(default=1e-10, gt=0, lt=1)
    kernel_grid_points: int = Field(default=2001, ge=3)
    c_fit: float = Field(default=100.0, gt=0)
    diagnostic_samples: int = Field(default=400, ge=3)

    # Measures
    cauchy_tolerance: float = Field(default=1e-6, gt=0)
    burn_in_rate_multiple: float = Field(default=20.0, gt=0)
    default_burn_in_delays: float = Field(default=20.0, ge=0)
    falsify_samples: int = Field(default=10000, ge=1)
    threads: int = Field(default=1, ge=1)

    # Output
    float_digits: int = Field(default=17, ge=1, le=17)

    model_config = {
        "env_file": ".env",
        "env_prefix": "ATTRACTOR_LAB_",
        "case_sensitive": False,
        "extra": "ignore"  # Allow extra fields from .env file
    }

# Global settings instance
settings = Settings()
