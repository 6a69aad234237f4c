"""Application configuration and settings"""

from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings and configuration"""

    # API Settings
    app_name: str = "ARRDE Benchmark Harness"
    app_version: str = "1.0.0"
    debug: bool = False

    # Paths
    base_dir: Path = Path(__file__).parent.parent.parent
    results_dir: Path = base_dir / "results"
    logs_dir: Path = base_dir / "logs"

    # Campaign Settings
    threads: Optional[int] = None  # ARRDE_BENCH_THREADS; --threads wins
    checkpoint_every: int = 100
    log_level: str = "INFO"

    class Config:
        env_prefix = "ARRDE_BENCH_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        # Create directories if they don't exist
        self.results_dir.mkdir(parents=True, exist_ok=True)
        self.logs_dir.mkdir(parents=True, exist_ok=True)

    def resolve_threads(self, flag: Optional[int] = None, configured: Optional[int] = None) -> int:
        """
        Resolve the parallel degree of a campaign

        Args:
            flag: Value of the --threads command line flag
            configured: Value from the experiment file's [output] section

        Returns:
            Number of worker processes, at least 1
        """
        for candidate in (flag, self.threads, configured):
            if candidate is not None:
                return max(1, int(candidate))
        return 1


# Global settings instance
settings = Settings()
