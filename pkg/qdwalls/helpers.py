"""
Helper functions for qdwalls.

SPDX-License-Identifier: Apache-2.0

Retry wrappers for seeded numerics, integer rounding with residual checks, the
on-disk array cache and the decorator that turns domain exceptions into
command line diagnostics.
"""

import functools
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import wrapt

from .const import (
    DEFAULT_RETRY_LIMIT,
    DEFAULT_ROUNDING_RESIDUAL,
    DEFAULT_SEED,
    ENV_CACHE_DIR,
    EXCEPTION_TEMPLATE,
    EXIT_DIAGNOSTIC,
)
from .exceptions import (
    NegativeMultiplicityException,
    NonIntegerMultiplicityException,
    NumericalFailureException,
    QuantumDoubleException,
)

_LOGGER = logging.getLogger(__name__)


def _short_name(func: Callable) -> str:
    return f"{func.__module__[func.__module__.find('.') + 1 :]}.{func.__name__}"


def retry_seeded(
    limit: int = DEFAULT_RETRY_LIMIT, catch_exceptions: bool = True
) -> Callable:
    """Wrap a seeded function with retry logic.

    The wrapped function must accept a ``seed`` keyword. On a
    NumericalFailureException the call is repeated with the next seed until
    the limit is reached.

    Parameters
    ----------
    limit : int
        The max number of seeds to try.
    catch_exceptions : bool
        Whether numerical failures should be retried or thrown.

    Returns
    -------
    def
        Wrapped function.

    """

    def wrap(func) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, seed: int = DEFAULT_SEED, **kwargs) -> Any:
            _LOGGER.debug(
                "%s: Trying with limit %s seed %s catch_exceptions %s",
                _short_name(func),
                limit,
                seed,
                catch_exceptions,
            )
            last_exception: Optional[Exception] = None
            for retries in range(limit):
                try:
                    return func(*args, seed=seed + retries, **kwargs)
                except NumericalFailureException as ex:
                    if not catch_exceptions:
                        raise
                    last_exception = ex
                    _LOGGER.debug(
                        "%s: Try: %s/%s with seed %s failed: %s",
                        _short_name(func),
                        retries + 1,
                        limit,
                        seed + retries,
                        EXCEPTION_TEMPLATE.format(type(ex).__name__, ex.args),
                    )
            raise NumericalFailureException(
                f"{func.__name__} failed for seeds {seed}..{seed + limit - 1}"
            ) from last_exception

        return wrapper

    return wrap


def round_to_int(
    values,
    labels: Optional[list[str]] = None,
    residual: float = DEFAULT_ROUNDING_RESIDUAL,
    allow_negative: bool = False,
) -> np.ndarray:
    """Round theoretically integral values, checking the rounding residual.

    Args:
        values: real or complex array.
        labels: names used in diagnostics, one per entry of the flattened array.
        residual: largest accepted distance to the nearest integer.
        allow_negative: skip the nonnegativity check.

    """
    array = np.asarray(values)
    flat = array.ravel()
    rounded = np.rint(flat.real)
    distance = np.abs(flat - rounded)
    for position in np.flatnonzero(distance >= residual):
        label = labels[position] if labels else str(position)
        raise NonIntegerMultiplicityException(
            label, complex(flat[position]), float(distance[position])
        )
    if not allow_negative:
        for position in np.flatnonzero(rounded < 0):
            label = labels[position] if labels else str(position)
            raise NegativeMultiplicityException(label, int(rounded[position]))
    return rounded.astype(np.int64).reshape(array.shape)


def cache_dir() -> Optional[Path]:
    """Return the array cache directory, if configured."""
    location = os.environ.get(ENV_CACHE_DIR)
    if not location:
        return None
    path = Path(location)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cache_key(*parts: Any) -> str:
    """Digest arbitrary array and tuple parts into a cache key."""
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            digest.update(str(part.shape).encode())
            digest.update(np.ascontiguousarray(part).tobytes())
        else:
            digest.update(repr(part).encode())
        digest.update(b"|")
    return digest.hexdigest()


def load_cached_array(key: str) -> Optional[np.ndarray]:
    """Load a cached array or return None."""
    directory = cache_dir()
    if directory is None:
        return None
    path = directory / f"{key}.npy"
    if not path.exists():
        return None
    try:
        return np.load(path, allow_pickle=False)
    except (OSError, ValueError) as ex:
        _LOGGER.warning(
            "Ignoring unreadable cache file %s: %s",
            path,
            EXCEPTION_TEMPLATE.format(type(ex).__name__, ex.args),
        )
        return None


def store_cached_array(key: str, array: np.ndarray) -> None:
    """Store an array in the cache directory when one is configured."""
    directory = cache_dir()
    if directory is None:
        return
    path = directory / f"{key}.npy"
    tmp_path = directory / f"{key}.tmp.npy"
    np.save(tmp_path, array, allow_pickle=False)
    os.replace(tmp_path, path)
    _LOGGER.debug("Cached array %s with shape %s", key[:12], array.shape)


def complex_to_json(value: complex) -> list[float]:
    """Encode a complex number as a [real, imag] pair."""
    value = complex(value)
    return [float(value.real), float(value.imag)]


def diagnostic(ex: QuantumDoubleException) -> dict[str, Any]:
    """Build a structured diagnostic from a domain exception."""
    details = {
        key: value for key, value in vars(ex).items() if not key.startswith("_")
    }
    return {"error": type(ex).__name__, "message": str(ex), "details": details}


@wrapt.decorator
def catch_domain_errors(func, instance, args, kwargs) -> Any:
    """Report domain exceptions of a command as a structured diagnostic."""
    try:
        return func(*args, **kwargs)
    except QuantumDoubleException as ex:
        _LOGGER.debug(
            "%s: %s",
            _short_name(func),
            EXCEPTION_TEMPLATE.format(type(ex).__name__, ex.args),
        )
        _LOGGER.error("%s", ex)
        print(json.dumps(diagnostic(ex), default=str))
        return EXIT_DIAGNOSTIC
