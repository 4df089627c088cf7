"""Load dimension and fact documents into an immutable in-memory instance.

A loaded WarehouseInstance holds, per dimension, a member table with parent
links and per-level document order; per fact class, the fact records in
document order; and per document, the parsed DataTree the query layer's plans
run over. Instances are never mutated after load; reloading produces a new
instance.

Ragged hierarchies are first-class: a member's parent may skip levels, and
ancestor resolution answers the reserved token ``__unassigned__`` when a chain
skips past or ends before the requested level. A fact may omit a dimension
reference entirely, which loads as the reserved member ``__unknown__`` and
participates in grouping as an ordinary coordinate value.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from .errors import (
    IntegrityError,
    MissingDocument,
    UnknownLevel,
    UnknownMember,
)
from .model import (
    ALL,
    UNASSIGNED,
    UNKNOWN,
    Diagnostic,
    DimensionSpec,
    FactSpec,
    Scalar,
    WarehouseSchema,
    parse_scalar,
    read_schema,
)
from .trees import DataTree
from .xmlio import parse_xml

SCHEMA_FILENAME = "dw-model.xml"

_RESERVED_IDS = (UNKNOWN, UNASSIGNED)


@dataclass(frozen=True)
class DimensionMember:
    member_id: str
    level_id: str
    attribute_values: dict[str, Scalar]
    parent: tuple[str, str] | None = None  # (level_id, member_id)


@dataclass
class DimensionTable:
    spec: DimensionSpec
    members: dict[str, DimensionMember]
    level_order: dict[str, list[str]]  # level id -> member ids in document order

    def member(self, member_id: str) -> DimensionMember:
        try:
            return self.members[member_id]
        except KeyError:
            raise UnknownMember(
                f"dimension {self.spec.id!r} has no member {member_id!r}"
            ) from None

    def members_at(self, level_id: str) -> list[DimensionMember]:
        if not self.spec.has_level(level_id):
            raise UnknownLevel(f"dimension {self.spec.id!r} has no level {level_id!r}")
        return [self.members[m] for m in self.level_order.get(level_id, [])]

    def ancestor_at_level(self, member_id: str, target_level: str) -> str:
        """Resolve a member to its ancestor at target_level.

        Walks parent links upward and returns the first ancestor whose level
        equals the target (the member itself when already there). Returns
        ``__unassigned__`` when the chain skips past the target level or ends
        before reaching it, and passes ``__unknown__`` through unchanged.
        """
        target_depth = self.spec.depth_of(target_level)
        if member_id == UNKNOWN:
            return UNKNOWN
        current = self.member(member_id)
        while True:
            depth = self.spec.depth_of(current.level_id)
            if depth == target_depth:
                return current.member_id
            if depth > target_depth or current.parent is None:
                return UNASSIGNED
            current = self.member(current.parent[1])


@dataclass(frozen=True)
class FactRecord:
    ordinal: int
    measure_values: dict[str, int | Decimal]
    dimension_refs: dict[str, str]  # dimension id -> member id or __unknown__


@dataclass
class WarehouseInstance:
    schema: WarehouseSchema
    dimensions: dict[str, DimensionTable]
    facts: dict[str, list[FactRecord]]
    forests: dict[str, DataTree]  # document path -> parsed tree

    def dimension_table(self, dim_id: str) -> DimensionTable:
        self.schema.dimension(dim_id)  # raises UnknownDimension
        return self.dimensions[dim_id]

    def fact_records(self, fact_id: str) -> list[FactRecord]:
        spec = self.schema.fact_class(fact_id)
        return self.facts[spec.id]

    def fact_forest(self, fact_id: str) -> DataTree:
        spec = self.schema.fact_class(fact_id)
        return self.forests[spec.document_path]


def _check_member_id(member_id: str, where: str) -> None:
    if member_id in _RESERVED_IDS or ALL in member_id:
        raise IntegrityError(f"{where}: member id {member_id!r} is reserved")


def load_dimension(xml_text: str, spec: DimensionSpec) -> DimensionTable:
    """Parse one dimension document into an indexed member table."""
    root = parse_xml(xml_text, f"dimension {spec.id!r}")
    where = f"dimension {spec.id!r}"
    if root.tag != "dimension":
        raise IntegrityError(f"{where}: root element must be dimension, got {root.tag!r}")
    if root.get("id") != spec.id:
        raise IntegrityError(
            f"{where}: document id {root.get('id')!r} does not match the schema"
        )
    members: dict[str, DimensionMember] = {}
    level_order: dict[str, list[str]] = {lvl.id: [] for lvl in spec.levels}
    pending_parents: list[tuple[str, str, str]] = []  # (member, parent level, parent id)

    for level_el in root:
        if level_el.tag != "Level":
            raise IntegrityError(f"{where}: unknown element {level_el.tag!r}")
        level_id = level_el.get("id")
        if level_id is None or not spec.has_level(level_id):
            raise IntegrityError(f"{where}: unknown level {level_id!r}")
        level_spec = spec.level(level_id)
        for inst in level_el:
            if inst.tag != "instance":
                raise IntegrityError(f"{where}/Level[@id={level_id!r}]: unknown element {inst.tag!r}")
            member_id = inst.get("id")
            if member_id is None:
                raise IntegrityError(f"{where}/Level[@id={level_id!r}]: instance without @id")
            loc = f"{where}, member {member_id!r}"
            _check_member_id(member_id, loc)
            if member_id in members:
                raise IntegrityError(f"{loc}: duplicate member id")
            values: dict[str, Scalar] = {}
            parent: tuple[str, str] | None = None
            for child in inst:
                if child.tag == "attribute":
                    name = child.get("name")
                    attr_spec = level_spec.attribute(name) if name else None
                    if attr_spec is None:
                        raise IntegrityError(f"{loc}: attribute {name!r} is not declared at level {level_id!r}")
                    if name in values:
                        raise IntegrityError(f"{loc}: duplicate attribute {name!r}")
                    try:
                        values[name] = parse_scalar(child.get("value", ""), attr_spec.type)
                    except IntegrityError as exc:
                        raise IntegrityError(f"{loc}: {exc}") from None
                elif child.tag == "parent":
                    if parent is not None:
                        raise IntegrityError(f"{loc}: more than one parent")
                    plevel = child.get("level")
                    pid = child.get("idref")
                    if plevel is None or pid is None:
                        raise IntegrityError(f"{loc}: parent needs @level and @idref")
                    parent = (plevel, pid)
                    pending_parents.append((member_id, plevel, pid))
                else:
                    raise IntegrityError(f"{loc}: unknown element {child.tag!r}")
            members[member_id] = DimensionMember(
                member_id=member_id,
                level_id=level_id,
                attribute_values=values,
                parent=parent,
            )
            level_order[level_id].append(member_id)

    for member_id, plevel, pid in pending_parents:
        loc = f"{where}, member {member_id!r}"
        if not spec.has_level(plevel):
            raise IntegrityError(f"{loc}: parent level {plevel!r} does not exist")
        target = members.get(pid)
        if target is None:
            raise IntegrityError(f"{loc}: parent references unknown member {pid!r}")
        if target.level_id != plevel:
            raise IntegrityError(
                f"{loc}: parent {pid!r} is at level {target.level_id!r}, not {plevel!r}"
            )
        own_depth = spec.depth_of(members[member_id].level_id)
        if spec.depth_of(plevel) <= own_depth:
            raise IntegrityError(f"{loc}: parent level {plevel!r} is not coarser")

    return DimensionTable(spec=spec, members=members, level_order=level_order)


def load_facts(xml_text: str, spec: FactSpec) -> list[FactRecord]:
    """Parse one fact document into records in document order."""
    root = parse_xml(xml_text, f"fact class {spec.id!r}")
    where = f"fact class {spec.id!r}"
    if root.tag != "FactDoc":
        raise IntegrityError(f"{where}: root element must be FactDoc, got {root.tag!r}")
    if root.get("id") != spec.id:
        raise IntegrityError(f"{where}: document id {root.get('id')!r} does not match the schema")
    declared_measures = {m.name: m for m in spec.measures}
    linked = [link.dimension for link in spec.dimension_links]
    records = []
    for ordinal, fact_el in enumerate(root):
        if fact_el.tag != "fact":
            raise IntegrityError(f"{where}: unknown element {fact_el.tag!r}")
        loc = f"{where}, fact {ordinal}"
        values: dict[str, int | Decimal] = {}
        refs: dict[str, str] = {}
        for child in fact_el:
            if child.tag == "measure":
                name = child.get("name")
                mspec = declared_measures.get(name or "")
                if mspec is None:
                    raise IntegrityError(f"{loc}: measure {name!r} is not declared")
                if name in values:
                    raise IntegrityError(f"{loc}: duplicate measure {name!r}")
                try:
                    values[name] = parse_scalar(child.get("value", ""), mspec.type)  # type: ignore[assignment]
                except IntegrityError as exc:
                    raise IntegrityError(f"{loc}: {exc}") from None
            elif child.tag == "dimension":
                idref = child.get("idref")
                if idref not in linked:
                    raise IntegrityError(f"{loc}: dimension idref {idref!r} is not linked")
                if idref in refs:
                    raise IntegrityError(f"{loc}: duplicate dimension idref {idref!r}")
                value_id = child.get("value-id")
                if value_id is None:
                    raise IntegrityError(f"{loc}: dimension {idref!r} reference without @value-id")
                refs[idref] = value_id
            else:
                raise IntegrityError(f"{loc}: unknown element {child.tag!r}")
        missing = [name for name in declared_measures if name not in values]
        if missing:
            raise IntegrityError(f"{loc}: missing measure element {missing[0]!r}")
        for dim in linked:
            refs.setdefault(dim, UNKNOWN)
        records.append(
            FactRecord(ordinal=ordinal, measure_values=values, dimension_refs=refs)
        )
    return records


def check_integrity(instance: WarehouseInstance) -> list[Diagnostic]:
    """Verify that every non-sentinel fact reference resolves to a member."""
    out = []
    for fact in instance.schema.fact_classes:
        for record in instance.facts[fact.id]:
            for link in fact.dimension_links:
                ref = record.dimension_refs[link.dimension]
                if ref == UNKNOWN:
                    continue
                table = instance.dimensions[link.dimension]
                if ref not in table.members:
                    out.append(
                        Diagnostic(
                            f"FactDoc[@id={fact.id!r}]/fact[{record.ordinal}]",
                            f"dimension {link.dimension!r} reference {ref!r} "
                            "does not resolve to a member",
                        )
                    )
    return out


def load_instance(schema: WarehouseSchema, documents: dict[str, str]) -> WarehouseInstance:
    """Build an instance from already-read document texts keyed by relative path."""
    dimensions = {}
    facts = {}
    forests = {}
    for dim in schema.dimensions:
        text = documents[dim.document_path]
        dimensions[dim.id] = load_dimension(text, dim)
        forests[dim.document_path] = DataTree.from_text(text, f"dimension {dim.id!r}")
    for fact in schema.fact_classes:
        text = documents[fact.document_path]
        facts[fact.id] = load_facts(text, fact)
        if fact.document_path not in forests:
            forests[fact.document_path] = DataTree.from_text(text, f"fact class {fact.id!r}")
    return WarehouseInstance(
        schema=schema, dimensions=dimensions, facts=facts, forests=forests
    )


def load_warehouse(directory: str | Path) -> WarehouseInstance:
    """Read a warehouse directory (dw-model.xml plus referenced documents)."""
    directory = Path(directory)
    schema_path = directory / SCHEMA_FILENAME
    if not schema_path.is_file():
        raise MissingDocument(f"no {SCHEMA_FILENAME} in {directory}")
    schema = read_schema(schema_path)
    documents = {}
    for path in {d.document_path for d in schema.dimensions} | {
        f.document_path for f in schema.fact_classes
    }:
        resolved = schema.resolve(path)
        if not resolved.is_file():
            raise MissingDocument(f"referenced document {path!r} not found under {directory}")
        documents[path] = resolved.read_text(encoding="utf-8")
    return load_instance(schema, documents)
