"""
Run configuration for qdwalls.

SPDX-License-Identifier: Apache-2.0
"""

import json
import logging
from pathlib import Path
from typing import Any, Optional, TypedDict

import voluptuous as vol

from .const import (
    CONF_CACHE_DIR,
    CONF_DEBUG,
    CONF_FORMAT,
    CONF_GROUP,
    CONF_ORDER_CAP,
    CONF_SEED,
    CONF_STATE_QUBIT_CAP,
    CONF_TOLERANCE,
    DEFAULT_ORDER_CAP,
    DEFAULT_SEED,
    DEFAULT_STATE_QUBIT_CAP,
    DEFAULT_TOLERANCE,
    MAX_SEED,
    MAX_TOLERANCE,
    OUTPUT_FORMATS,
)
from .exceptions import SchemaException

_LOGGER = logging.getLogger(__name__)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_GROUP): vol.Any(str, dict),
        vol.Optional(CONF_TOLERANCE, default=DEFAULT_TOLERANCE): vol.All(
            vol.Coerce(float),
            vol.Range(min=0, max=MAX_TOLERANCE, min_included=False),
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            vol.Coerce(int), vol.Range(min=0, max=MAX_SEED)
        ),
        vol.Optional(CONF_FORMAT, default="text"): vol.In(OUTPUT_FORMATS),
        vol.Optional(CONF_ORDER_CAP, default=DEFAULT_ORDER_CAP): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_STATE_QUBIT_CAP, default=DEFAULT_STATE_QUBIT_CAP): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_DEBUG, default=False): bool,
        vol.Optional(CONF_CACHE_DIR): str,
    }
)


class RunConfig(TypedDict, total=False):
    """Validated run configuration."""

    group: Any
    tolerance: float
    seed: int
    format: str
    order_cap: int
    state_qubit_cap: int
    debug: bool
    cache_dir: str


def load_run_config(
    overrides: Optional[dict[str, Any]] = None, path: Optional[str] = None
) -> RunConfig:
    """Merge a JSON config file with explicit overrides and validate.

    Overrides whose value is None are ignored so unset command line flags do
    not mask file values.
    """
    raw: dict[str, Any] = {}
    if path:
        try:
            raw.update(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError) as ex:
            raise SchemaException(f"Unable to read config {path}: {ex}") from ex
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        config = RUN_CONFIG_SCHEMA(raw)
    except vol.Invalid as ex:
        raise SchemaException(f"Invalid configuration: {ex}") from ex
    _LOGGER.debug("Loaded run configuration %s", config)
    return RunConfig(**config)
