"""Application settings using pydantic-settings."""
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from pydantic import model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class GridProfile(str, Enum):
    """Named grid families for verification and eigen-solves."""

    COARSE = "coarse"
    STANDARD = "standard"
    FINE = "fine"

    @property
    def spacings3d(self) -> Tuple[int, ...]:
        """Points per axis of the 3D grids used for residual decay fits."""
        return {
            GridProfile.COARSE: (32, 48, 64),
            GridProfile.STANDARD: (48, 64, 96),
            GridProfile.FINE: (64, 96, 128),
        }[self]

    @property
    def start_size(self) -> int:
        """Interior node count of the first 1D refinement level."""
        return {GridProfile.COARSE: 255, GridProfile.STANDARD: 511, GridProfile.FINE: 1023}[self]


class BoundaryCondition(str, Enum):
    """Endpoint treatment for the angular problems on [0, 2π]."""

    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


class Settings(BaseSettings):
    """Application configuration from environment variables."""

    # Execution
    threads: int = 4
    seed: int = 7

    # Numerics
    grid_profile: GridProfile = GridProfile.STANDARD
    residual_tol: float = 1e-4
    claim_tol: float = 1e-5
    min_order: float = 1.7
    stencil_order: int = 4  # Hamiltonian stencil in residual checks
    residual_floor: float = 1e-10
    truncation_tol: float = 1e-8
    angular_bc: BoundaryCondition = BoundaryCondition.DIRICHLET

    # Paths
    manifest_path: Optional[Path] = None  # None selects the packaged manifest
    output_dir: Path = Path("./output")

    # Logging
    log_level: str = "INFO"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="PDM_", case_sensitive=False)

    @model_validator(mode="after")
    def validate_numerics(self) -> "Settings":
        """Reject settings the solvers cannot honour."""
        if self.threads < 1:
            raise ValueError("PDM_THREADS must be at least 1.")
        if self.claim_tol < 1e-10:
            raise ValueError("PDM_CLAIM_TOL below 1e-10 is not supported by the refinement loop.")
        if self.residual_tol <= 0 or self.residual_floor <= 0:
            raise ValueError("Residual tolerances must be positive.")
        if self.min_order <= 0:
            raise ValueError("PDM_MIN_ORDER must be positive.")
        if self.stencil_order not in (2, 4):
            raise ValueError("PDM_STENCIL_ORDER must be 2 or 4.")
        return self


# Global settings instance
settings = Settings()
