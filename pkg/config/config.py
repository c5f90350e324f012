"""
Configuration management for the ant-foraging simulation engine
Loads settings from environment variables and .env file
"""

from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Logging
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    show_progress: bool = True

    # Output (FORAGING_OUTPUT_DIR overrides the scenario's output_dir)
    output_dir: Optional[str] = None

    # Internal parallelism, 0 means all cores
    threads: int = 0

    # Time stepping
    cfl: float = 0.4
    dt_max: float = 1e-3
    dt_floor: float = 1e-10
    implicit_rel_tol: float = 1e-10
    blowup_factor: float = 1e3

    # Elliptic solver
    elliptic_rel_tol: float = 1e-10
    elliptic_max_iter: int = 20000

    # Heat kernel oracle
    kernel_truncation: float = 12.0  # in units of sqrt(t)
    duhamel_substeps: int = 16
    bound_safety_factor: float = 2.0

    # Estimate verification
    eps_plus: float = 0.05
    envelope_t_min: float = 0.01
    linf_beta_limit: float = 1.1
    mass_tolerance: float = 1e-9
    positivity_tolerance: float = 1e-12
    degiorgi_ratio_limit: float = 0.5
    degiorgi_a: float = 0.5
    degiorgi_q: float = 2.0
    degiorgi_constant: float = 1.0
    degiorgi_k_max: int = 8
    stability_rate_spread: float = 0.2
    gns_samples: int = 1000
    degiorgi_t_star_fraction: float = 0.5

    class Config:
        """Pydantic config"""
        env_file = ".env"
        env_prefix = "FORAGING_"
        case_sensitive = False


# Create global settings instance
settings = Settings()
