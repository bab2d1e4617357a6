import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


def _env_flag(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    """Runtime settings, read from the environment (and .env when present)"""
    strict_check: bool = Field(True, description="Require computed answers to equal the certificate")
    scope_cap: int = Field(24, ge=1, description="Maximum number of variables in one abstract value")
    log_level: str = Field("WARNING", description="Root logging level of the command-line tool")
    reuse_deletions: bool = Field(False, description="Ship an empty incremental certificate for pure deletions")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings once per process"""
    return Settings(
        strict_check=_env_flag("ACC_STRICT", True),
        scope_cap=int(os.getenv("ACC_SCOPE_CAP", 24)),
        log_level=os.getenv("ACC_LOG_LEVEL", "WARNING").upper(),
        reuse_deletions=_env_flag("ACC_REUSE_DELETIONS", False),
    )
