"""
premcheck Configuration Module
Loads environment variables and provides configuration settings for the
obstruction engines, the command-line front end and the HTTP API.
"""

import os
from dataclasses import dataclass
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


@dataclass
class Config:
    """Application configuration settings."""

    # ============ API Settings ============
    API_HOST: str = os.getenv("API_HOST", "127.0.0.1")
    API_PORT: int = int(os.getenv("API_PORT", "8000"))
    API_LOG_LEVEL: str = os.getenv("API_LOG_LEVEL", "info")

    # ============ Truncation ============
    # Default truncation level for Magnus expansions and automorphism towers (--cap)
    DEFAULT_CAP: int = int(os.getenv("PREM_DEFAULT_CAP", "4"))
    MAX_CAP: int = int(os.getenv("PREM_MAX_CAP", "12"))

    # Reduced tensor ring: full basis is materialized only up to this rank
    DENSE_BASIS_MAX_RANK: int = int(os.getenv("PREM_DENSE_BASIS_MAX_RANK", "8"))

    # ============ Batch Analyses ============
    MAX_WORKERS: int = int(os.getenv("PREM_MAX_WORKERS", "4"))

    # ============ Reports ============
    REPORT_INDENT: int = int(os.getenv("PREM_REPORT_INDENT", "2"))
    SELFTEST_SEED: int = int(os.getenv("PREM_SELFTEST_SEED", "20240601"))

    def validate_cap(self, cap: int) -> int:
        """Check a user supplied truncation level and return it."""
        if cap < 2 or cap > self.MAX_CAP:
            raise ValueError(f"Truncation cap must lie in 2..{self.MAX_CAP}, got {cap}")
        return cap

    def is_dense_rank(self, d: int) -> bool:
        """Whether the reduced ring of rank d gets a materialized basis."""
        return d <= self.DENSE_BASIS_MAX_RANK


# Global config instance
config = Config()
