"""Run configuration loading for vortex_mather."""

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, TypeVar

from dotenv import load_dotenv
from pydantic import ValidationError

from vortex_mather.errors import ConfigError
from vortex_mather.schemas import RunConfig

load_dotenv()

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "VORTEX_MATHER_OUTPUT_DIR"

T = TypeVar("T")
R = TypeVar("R")


def load_config(path: str | Path | None = None) -> RunConfig:
    """Read and validate a JSON run configuration.

    With no path the built-in defaults (zero perturbation, epsilon 1) are used.

    Raises:
        ConfigError: If the file is missing, is not JSON, or fails validation.
    """
    if path is None:
        return RunConfig()

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"config file {path} is invalid:\n{e}") from e

    logger.info("Loaded config %s (epsilon=%s, %d leading terms)", path,
                config.perturbation.epsilon, len(config.perturbation.leading_terms))
    return config


def resolve_output_dir(config: RunConfig) -> Path:
    """Output directory, with the environment variable taking precedence."""
    out = Path(os.getenv(OUTPUT_DIR_ENV) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the configuration."""
    canonical = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Map `fn` over `items`, in a process pool when jobs > 1.

    Results come back in input order either way. `fn` must be picklable
    (a module-level function or a functools.partial of one).
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
