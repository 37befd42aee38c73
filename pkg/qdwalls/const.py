"""
Constants for qdwalls.

SPDX-License-Identifier: Apache-2.0

Tolerances, caps and configuration keys shared by every module. Command line
flags and configuration files map onto the ``CONF_*`` keys below.
"""

__version__ = "0.4.0"

SCHEMA_VERSION = "1.0"
MIN_SCHEMA_VERSION = "1.0"

CONF_GROUP = "group"
CONF_TOLERANCE = "tolerance"
CONF_SEED = "seed"
CONF_FORMAT = "format"
CONF_ORDER_CAP = "order_cap"
CONF_STATE_QUBIT_CAP = "state_qubit_cap"
CONF_DEBUG = "debug"
CONF_CACHE_DIR = "cache_dir"

ENV_CACHE_DIR = "QDW_CACHE_DIR"

DEFAULT_TOLERANCE = 1e-8
DEFAULT_ROUNDING_RESIDUAL = 1e-6
DEFAULT_OPERATOR_TOLERANCE = 1e-10
DEFAULT_ORDER_CAP = 128
DEFAULT_STATE_QUBIT_CAP = 26
DEFAULT_ORACLE_CAP = 16
DEFAULT_ABELIAN_MTC_CAP = 8
DEFAULT_SEED = 0
DEFAULT_RETRY_LIMIT = 8
DEFAULT_MAX_SCHEDULE_LEN = 8
DEFAULT_NORM_FLOOR = 1e-12
DEFAULT_SPOT_CHECKS = 20
MAX_TOLERANCE = 1e-3
MAX_SEED = 2**64 - 1

OUTPUT_FORMATS = ["text", "json", "dot", "csv"]

MEASURE_RESTRICT = "T"
MEASURE_QUOTIENT = "L"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIAGNOSTIC = 2

VACUUM_NAME = "1"
CONFINED_NAME = "0"

GOLDEN_GROUPS = ["S3", "D4", "Z2xZ2"]
LISTED_PRESETS = ["Z1", "Z2", "Z3", "Z4", "Z2xZ2", "S3", "D4", "Z2xZ2xZ2", "D5", "D6"]

EXCEPTION_TEMPLATE = "An exception of type {0} occurred. Arguments:\n{1!r}"
