"""Warehouse metadata: parse, validate, and serialize the dw-model.xml document.

The metadata document defines the multidimensional structure of the warehouse:
dimensions with their hierarchy levels and typed attributes, and fact classes
with their measures and dimension references. Several fact classes may share
dimensions (a constellation layout). Depth 1 is the finest level; coarser
levels carry greater depths.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path, PurePosixPath

from .errors import (
    IntegrityError,
    SchemaViolation,
    UnknownDimension,
    UnknownFactClass,
    UnknownLevel,
)
from .xmlio import XmlWriter, parse_xml

SCALAR_TYPES = ("string", "integer", "decimal", "date")
MEASURE_TYPES = ("integer", "decimal")
AGGREGATES = ("sum", "count", "min", "max", "avg")
NUMERIC_TYPES = ("integer", "decimal")

#: Reserved coordinate tokens; member ids may not collide with them.
UNKNOWN = "__unknown__"
UNASSIGNED = "__unassigned__"
ALL = "*"

Scalar = str | int | Decimal | datetime.date


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: offending element path plus a message."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def parse_scalar(text: str, scalar_type: str) -> Scalar:
    """Parse attribute text according to its declared scalar type."""
    try:
        if scalar_type == "string":
            return text
        if scalar_type == "integer":
            return int(text)
        if scalar_type == "decimal":
            return Decimal(text)
        if scalar_type == "date":
            return datetime.date.fromisoformat(text)
    except (ValueError, InvalidOperation):
        raise IntegrityError(f"value {text!r} is not a valid {scalar_type}") from None
    raise IntegrityError(f"unknown scalar type {scalar_type!r}")


def scalar_to_text(value: Scalar) -> str:
    if isinstance(value, Decimal):
        return format(value, "f")
    if isinstance(value, datetime.date):
        return value.isoformat()
    return str(value)


def canon_number(value: int | Decimal) -> str:
    """Canonical numeric rendering: no trailing zeros, no point for integers,
    never exponent notation. Matches the standard XQuery decimal-to-string rules,
    so native and generated-query outputs compare byte-for-byte."""
    if isinstance(value, int):
        return str(value)
    normalized = value.normalize()
    if normalized.as_tuple().exponent >= 0:
        return str(int(normalized))
    return format(normalized, "f")


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    type: str
    key: bool = False


@dataclass(frozen=True)
class LevelSpec:
    id: str
    depth: int
    attributes: tuple[AttributeSpec, ...] = ()

    def attribute(self, name: str) -> AttributeSpec | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None


@dataclass(frozen=True)
class DimensionSpec:
    id: str
    document_path: str
    levels: tuple[LevelSpec, ...]  # stored finest (depth 1) first

    def level(self, level_id: str) -> LevelSpec:
        for lvl in self.levels:
            if lvl.id == level_id:
                return lvl
        raise UnknownLevel(f"dimension {self.id!r} has no level {level_id!r}")

    def has_level(self, level_id: str) -> bool:
        return any(lvl.id == level_id for lvl in self.levels)

    def depth_of(self, level_id: str) -> int:
        return self.level(level_id).depth


@dataclass(frozen=True)
class MeasureSpec:
    name: str
    type: str
    aggregate: str = "sum"


@dataclass(frozen=True)
class DimensionLink:
    dimension: str


@dataclass(frozen=True)
class FactSpec:
    id: str
    document_path: str
    measures: tuple[MeasureSpec, ...]
    dimension_links: tuple[DimensionLink, ...]

    def measure(self, name: str) -> MeasureSpec:
        for m in self.measures:
            if m.name == name:
                return m
        raise UnknownLevel(f"fact class {self.id!r} has no measure {name!r}")

    def links_dimension(self, dimension_id: str) -> bool:
        return any(link.dimension == dimension_id for link in self.dimension_links)


@dataclass(frozen=True)
class WarehouseSchema:
    dimensions: tuple[DimensionSpec, ...]
    fact_classes: tuple[FactSpec, ...]
    base_dir: Path = field(default=Path("."), compare=False)
    source_path: Path | None = field(default=None, compare=False)

    def dimension(self, dim_id: str) -> DimensionSpec:
        for dim in self.dimensions:
            if dim.id == dim_id:
                return dim
        raise UnknownDimension(f"no dimension {dim_id!r} in schema")

    def fact_class(self, fact_id: str) -> FactSpec:
        for fact in self.fact_classes:
            if fact.id == fact_id:
                return fact
        raise UnknownFactClass(f"no fact class {fact_id!r} in schema")

    def resolve(self, document_path: str) -> Path:
        """Resolve a forward-slash relative document path against the base dir."""
        return self.base_dir / PurePosixPath(document_path)


# ---------------------------------------------------------------------------
# parsing

_BOOL = {"true": True, "false": False}


def _require(element, name: str, path: str) -> str:
    value = element.get(name)
    if value is None:
        raise SchemaViolation(f"{path}: missing required attribute @{name}")
    return value


def _parse_level(element, path: str) -> LevelSpec:
    level_id = _require(element, "id", path)
    path = f"{path}[@id={level_id!r}]"
    depth_text = _require(element, "depth", path)
    try:
        depth = int(depth_text)
    except ValueError:
        raise SchemaViolation(f"{path}: @depth {depth_text!r} is not an integer") from None
    if depth < 1:
        raise SchemaViolation(f"{path}: @depth must be positive")
    attrs = []
    for child in element:
        if child.tag != "attribute":
            raise SchemaViolation(f"{path}/{child.tag}: unknown element")
        apath = f"{path}/attribute"
        name = _require(child, "name", apath)
        atype = _require(child, "type", f"{apath}[@name={name!r}]")
        if atype not in SCALAR_TYPES:
            raise SchemaViolation(
                f"{apath}[@name={name!r}]: unknown attribute type {atype!r}"
            )
        key_text = child.get("key", "false")
        if key_text not in _BOOL:
            raise SchemaViolation(f"{apath}[@name={name!r}]: @key must be true or false")
        attrs.append(AttributeSpec(name=name, type=atype, key=_BOOL[key_text]))
    return LevelSpec(id=level_id, depth=depth, attributes=tuple(attrs))


def _parse_dimension(element, path: str) -> DimensionSpec:
    dim_id = _require(element, "id", path)
    path = f"{path}[@id={dim_id!r}]"
    doc_path = _require(element, "path", path)
    levels = []
    for child in element:
        if child.tag != "Level":
            raise SchemaViolation(f"{path}/{child.tag}: unknown element")
        levels.append(_parse_level(child, f"{path}/Level"))
    levels.sort(key=lambda lvl: lvl.depth)
    return DimensionSpec(id=dim_id, document_path=doc_path, levels=tuple(levels))


def _parse_fact(element, path: str) -> FactSpec:
    fact_id = _require(element, "id", path)
    path = f"{path}[@id={fact_id!r}]"
    doc_path = _require(element, "path", path)
    measures = []
    links = []
    for child in element:
        if child.tag == "measure":
            mpath = f"{path}/measure"
            name = _require(child, "name", mpath)
            mtype = _require(child, "type", f"{mpath}[@name={name!r}]")
            if mtype not in MEASURE_TYPES:
                raise SchemaViolation(
                    f"{mpath}[@name={name!r}]: measure type must be one of "
                    f"{', '.join(MEASURE_TYPES)}, got {mtype!r}"
                )
            aggregate = child.get("aggregate", "sum")
            if aggregate not in AGGREGATES:
                raise SchemaViolation(
                    f"{mpath}[@name={name!r}]: unknown aggregate {aggregate!r}"
                )
            measures.append(MeasureSpec(name=name, type=mtype, aggregate=aggregate))
        elif child.tag == "dimension":
            links.append(DimensionLink(dimension=_require(child, "idref", f"{path}/dimension")))
        else:
            raise SchemaViolation(f"{path}/{child.tag}: unknown element")
    return FactSpec(
        id=fact_id,
        document_path=doc_path,
        measures=tuple(measures),
        dimension_links=tuple(links),
    )


def parse_schema(xml_text: str, base_dir: str | Path = ".") -> WarehouseSchema:
    """Parse a dw-model.xml document into a validated WarehouseSchema.

    Raises MalformedXml for ill-formed text and SchemaViolation (naming the
    offending element path) for any structural defect.
    """
    root = parse_xml(xml_text, "dw-model")
    if root.tag != "DW-model":
        raise SchemaViolation(f"/{root.tag}: root element must be DW-model")
    dimensions = []
    facts = []
    for child in root:
        if child.tag == "dimension":
            dimensions.append(_parse_dimension(child, "/DW-model/dimension"))
        elif child.tag == "FactDoc":
            facts.append(_parse_fact(child, "/DW-model/FactDoc"))
        else:
            raise SchemaViolation(f"/DW-model/{child.tag}: unknown element")
    schema = WarehouseSchema(
        dimensions=tuple(dimensions),
        fact_classes=tuple(facts),
        base_dir=Path(base_dir),
    )
    problems = validate_schema(schema)
    if problems:
        raise SchemaViolation(str(problems[0]))
    return schema


def read_schema(path: str | Path) -> WarehouseSchema:
    """Read and parse a metadata document from disk, recording its source path."""
    path = Path(path)
    schema = parse_schema(path.read_text(encoding="utf-8"), base_dir=path.parent)
    object.__setattr__(schema, "source_path", path)
    return schema


# ---------------------------------------------------------------------------
# validation

def validate_schema(schema: WarehouseSchema) -> list[Diagnostic]:
    """Check all schema invariants; returns one diagnostic per violation."""
    out: list[Diagnostic] = []
    if not schema.dimensions:
        out.append(Diagnostic("/DW-model", "schema declares no dimension"))
    if not schema.fact_classes:
        out.append(Diagnostic("/DW-model", "schema declares no FactDoc"))

    seen_dims: set[str] = set()
    for dim in schema.dimensions:
        dpath = f"/DW-model/dimension[@id={dim.id!r}]"
        if dim.id in seen_dims:
            out.append(Diagnostic(dpath, "duplicate dimension id"))
        seen_dims.add(dim.id)
        depths = [lvl.depth for lvl in dim.levels]
        if depths != list(range(1, len(depths) + 1)):
            out.append(
                Diagnostic(dpath, f"non-contiguous depths {depths} (expected 1..{len(depths)})")
            )
        seen_levels: set[str] = set()
        for lvl in dim.levels:
            lpath = f"{dpath}/Level[@id={lvl.id!r}]"
            if lvl.id in seen_levels:
                out.append(Diagnostic(lpath, "duplicate level id"))
            seen_levels.add(lvl.id)
            names = [attr.name for attr in lvl.attributes]
            for name in sorted(set(n for n in names if names.count(n) > 1)):
                out.append(Diagnostic(lpath, f"duplicate attribute name {name!r}"))
            keys = [attr.name for attr in lvl.attributes if attr.key]
            if lvl.attributes and len(keys) != 1:
                out.append(
                    Diagnostic(lpath, f"level must flag exactly one key attribute, found {len(keys)}")
                )

    seen_facts: set[str] = set()
    for fact in schema.fact_classes:
        fpath = f"/DW-model/FactDoc[@id={fact.id!r}]"
        if fact.id in seen_facts:
            out.append(Diagnostic(fpath, "duplicate fact class id"))
        seen_facts.add(fact.id)
        mnames = [m.name for m in fact.measures]
        for name in sorted(set(n for n in mnames if mnames.count(n) > 1)):
            out.append(Diagnostic(fpath, f"duplicate measure name {name!r}"))
        if not fact.dimension_links:
            out.append(Diagnostic(fpath, "fact class links no dimension"))
        linked = [link.dimension for link in fact.dimension_links]
        for name in sorted(set(d for d in linked if linked.count(d) > 1)):
            out.append(Diagnostic(fpath, f"duplicate dimension idref {name!r}"))
        for link in fact.dimension_links:
            if link.dimension not in seen_dims:
                out.append(
                    Diagnostic(
                        f"{fpath}/dimension[@idref={link.dimension!r}]",
                        "idref does not name a declared dimension",
                    )
                )
    return out


# ---------------------------------------------------------------------------
# serialization

def serialize_schema(schema: WarehouseSchema) -> str:
    """Serialize a schema back to dw-model.xml text (deterministic byte-for-byte)."""
    w = XmlWriter()
    w.open("DW-model")
    for dim in schema.dimensions:
        w.open("dimension", [("id", dim.id), ("path", dim.document_path)])
        for lvl in dim.levels:
            if lvl.attributes:
                w.open("Level", [("id", lvl.id), ("depth", lvl.depth)])
                for attr in lvl.attributes:
                    fields = [("name", attr.name), ("type", attr.type)]
                    if attr.key:
                        fields.append(("key", "true"))
                    w.empty("attribute", fields)
                w.close()
            else:
                w.empty("Level", [("id", lvl.id), ("depth", lvl.depth)])
        w.close()
    for fact in schema.fact_classes:
        w.open("FactDoc", [("id", fact.id), ("path", fact.document_path)])
        for m in fact.measures:
            w.empty(
                "measure",
                [("name", m.name), ("type", m.type), ("aggregate", m.aggregate)],
            )
        for link in fact.dimension_links:
            w.empty("dimension", [("idref", link.dimension)])
        w.close()
    w.close()
    return w.text()
