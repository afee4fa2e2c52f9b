# settings.py

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Caps and tolerances shared by every module. Override with TYPICALITY_* variables or a .env file."""
    model_config = SettingsConfigDict(env_prefix="TYPICALITY_", env_file=".env", extra="ignore")

    enumeration_cap: int = Field(default=10_000_000, gt=0, description="Maximum number of type classes to enumerate.")
    summation_cap: int = Field(
        default=1_000_000_000, gt=0, description="Maximum number of type classes a streamed probability sum may visit."
    )
    member_cap: int = Field(default=1_000_000, gt=0, description="Maximum number of typical sequences to list explicitly.")
    dense_cap: int = Field(default=4096, gt=0, description="Maximum d**n for dense tensor-power operators.")

    membership_slack: float = Field(default=1e-12, ge=0, description="Absolute slack on |H - h| <= eps comparisons.")
    eigen_cluster_gap: float = Field(default=1e-10, gt=0, description="Eigenvalues closer than this are treated as degenerate.")
    psd_tolerance: float = Field(default=1e-10, ge=0, description="Most negative eigenvalue accepted for a density matrix.")

    bisection_tol: float = Field(default=1e-9, gt=0, description="Default entropy tolerance (bits) of the basis search.")
    bisection_max_iter: int = Field(default=200, gt=0, description="Bisection iteration cap.")

    rank_rtol: float = Field(default=1e-8, gt=0, description="Relative singular-value threshold for numerical rank.")
    significant_digits: int = Field(default=12, gt=0, le=17, description="Significant digits written to CSV/JSON output.")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
