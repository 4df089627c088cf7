"""XML-native data warehouse engine.

Stores multidimensional data as one metadata document, one document per
dimension, and one document per fact class; evaluates OLAP pipelines by
lowering them to a tree-algebra plan over the parsed documents; and can
compile any pipeline to standalone XQuery for execution on an external
processor.
"""

from .model import (
    ALL,
    UNASSIGNED,
    UNKNOWN,
    WarehouseSchema,
    parse_schema,
    read_schema,
    serialize_schema,
    validate_schema,
)
from .olap import CubeView, QueryState, base, evaluate
from .store import (
    WarehouseInstance,
    check_integrity,
    load_dimension,
    load_facts,
    load_warehouse,
)

__version__ = "0.1.0"

__all__ = [
    "ALL",
    "UNASSIGNED",
    "UNKNOWN",
    "CubeView",
    "QueryState",
    "WarehouseInstance",
    "WarehouseSchema",
    "base",
    "check_integrity",
    "evaluate",
    "load_dimension",
    "load_facts",
    "load_warehouse",
    "parse_schema",
    "read_schema",
    "serialize_schema",
    "validate_schema",
    "__version__",
]
