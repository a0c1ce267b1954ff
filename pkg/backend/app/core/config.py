from pathlib import Path
from typing import Optional
from pydantic_settings import BaseSettings
from functools import lru_cache


REPO_ROOT = Path(__file__).resolve().parents[3]


class Settings(BaseSettings):
    """Application configuration"""
    
    # System
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""
    
    # Output directory override (takes precedence over --out)
    PD_FLOW_OUT: str = ""
    
    # Integrator defaults (no solver tolerances are published for the experiments)
    DEFAULT_RTOL: float = 1e-6
    DEFAULT_ATOL: float = 1e-9
    DEFAULT_H_INIT: float = 1e-3
    DEFAULT_SAMPLE_EVERY: float = 0.05
    
    # Experiments
    EXPERIMENTS_DIR: str = str(REPO_ROOT / "experiments")
    COMPARE_WORKERS: int = 1
    
    class Config:
        env_file = ".env"
        case_sensitive = True
    
    def output_dir(self, cli_out: Optional[str] = None) -> Path:
        """Resolve the output directory, honouring the PD_FLOW_OUT override"""
        if self.PD_FLOW_OUT:
            return Path(self.PD_FLOW_OUT)
        return Path(cli_out or "out")
    
    @property
    def experiments_path(self) -> Path:
        """Directory holding the shipped experiment configs"""
        return Path(self.EXPERIMENTS_DIR)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
