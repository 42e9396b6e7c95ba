"""Environment-driven settings."""

import hashlib
import json
import os
from pathlib import Path

from pydantic import BaseModel, Field


class Settings(BaseModel):
    """Values the environment may supply; CLI flags override every field."""

    config_path: Path | None = Field(default=None, description="Scenario file")
    out_dir: Path | None = Field(default=None, description="Artifact directory")
    threads: int | None = Field(default=None, ge=1, description="Worker threads for the solver")
    resolution: int | None = Field(default=None, ge=4, description="Grid cells per lattice constant")
    preset: str | None = Field(default=None, description="Geometry preset name")
    seed: int | None = Field(default=None, ge=0, lt=2**64, description="Seed for synthetic noise")
    log_level: str = Field(default="INFO")


_ENV_KEYS = {
    "config_path": "NANOBEAM_CONFIG",
    "out_dir": "NANOBEAM_OUT",
    "threads": "NANOBEAM_THREADS",
    "resolution": "NANOBEAM_RESOLUTION",
    "preset": "NANOBEAM_PRESET",
    "seed": "NANOBEAM_SEED",
    "log_level": "NANOBEAM_LOG_LEVEL",
}


def database_url_from_env() -> str:
    """Resolve the catalog database URL from DATABASE_URL or DATABASE_PATH."""
    url = os.getenv("DATABASE_URL")
    if url:
        # Convert sync URL to async if needed
        if url.startswith("sqlite:///"):
            url = url.replace("sqlite:///", "sqlite+aiosqlite:///")
        return url
    db_path = Path(os.getenv("DATABASE_PATH", "./nanobeam_catalog.db"))
    db_path.parent.mkdir(parents=True, exist_ok=True)
    return f"sqlite+aiosqlite:///{db_path}"


def load_settings(environ: dict[str, str] | None = None) -> Settings:
    """Build settings from environment variables.

    Args:
        environ: Mapping to read instead of ``os.environ`` (tests).

    Returns:
        Validated settings.
    """
    env = os.environ if environ is None else environ
    values: dict[str, str] = {}
    for field, key in _ENV_KEYS.items():
        if env.get(key):
            values[field] = env[key]
    return Settings.model_validate(values)


def config_hash(model: BaseModel) -> str:
    """Short content hash of a configuration model.

    sha256 over the canonical (sorted-key) JSON dump, truncated to 16 hex chars.
    """
    payload = json.dumps(model.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
