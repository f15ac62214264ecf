import logging
import os
from pathlib import Path
from typing import Optional, Union

import yaml
from dotenv import load_dotenv

from cube_hamiltonian.types import WorkbenchSettings

logger = logging.getLogger(__name__)

DEFAULTS = Path(__file__).resolve().parent.parent / "config" / "defaults.yaml"
ENV_PREFIX = "CUBE_HAMILTONIAN_"


def _flatten(raw: dict) -> dict:
    flat = {}
    for section in ("tolerances", "budgets"):
        flat.update(raw.get(section) or {})
    demo = raw.get("demo") or {}
    flat.update({f"demo_{key}": value for key, value in demo.items()})
    return flat


def load_settings(path: Optional[Union[str, Path]] = None) -> WorkbenchSettings:
    """defaults.yaml, then an optional override file, then CUBE_HAMILTONIAN_* variables."""
    load_dotenv()
    with open(DEFAULTS, "r") as f:
        values = _flatten(yaml.safe_load(f))
    if path is not None:
        with open(path, "r") as f:
            values.update(_flatten(yaml.safe_load(f) or {}))

    for field in WorkbenchSettings.model_fields:
        env = os.getenv(ENV_PREFIX + field.upper())
        if env is not None:
            values[field] = env
    settings = WorkbenchSettings(**values)
    logger.debug("settings: %s", settings.model_dump())
    return settings
