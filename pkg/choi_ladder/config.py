"""
Configuration for choi-ladder.

Loads tolerances and solver limits from environment variables and .env file.
"""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="CHOI_LADDER_",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    debug: bool = Field(False, description="Enable debug logging")
    log_level: str = Field("WARNING", description="Log threshold when debug is off")

    # Verdict tolerances
    psd_tol: float = Field(
        1e-9, gt=0, description="Relative PSD and Hermiticity tolerance"
    )
    rank_tol: float = Field(
        1e-10, gt=0, description="Kraus extraction cutoff relative to the top eigenvalue"
    )
    subchannel_tol: float = Field(
        1e-9, gt=0, description="Allowed excess of the trace matrix over the identity"
    )
    trace_tol: float = Field(
        1e-9, gt=0, description="Allowed deviation from trace preservation"
    )

    # Eigensolver
    eigensolver: Literal["jacobi", "lapack"] = Field(
        "jacobi", description="Hermitian eigensolver used by every spectral routine"
    )
    jacobi_max_sweeps: int = Field(100, ge=1, description="Jacobi sweep budget")
    jacobi_rel_offdiag: float = Field(
        1e-14, gt=0, description="Stop when off-diagonal mass < this * ||A||_F"
    )

    # Convergence diagnostics
    convergence_eps: float = Field(
        1e-9, gt=0, description="Residual below which a truncation counts as converged"
    )

    # Dimensions and schedules
    max_dimension: int = Field(4096, ge=1, description="Cap on Kronecker outputs")
    default_schedule: list[int] = Field(
        default=[2, 4, 8, 16, 32], description="Truncation ladder used when none is given"
    )

    # Constructions
    environment_cutoff: float = Field(
        1e-12, ge=0, description="Environment eigenvalues below this emit no Kraus operator"
    )

    # Randomized checks
    dual_samples: int = Field(10, ge=1, description="Random pairs for the duality check")
    seed: int = Field(0, description="Default seed for random builtins and probes")


# Global settings instance
settings = Settings()
