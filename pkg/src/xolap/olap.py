"""The OLAP operator pipeline over a loaded warehouse instance.

A QueryState is the accumulated meaning of a pipeline: a fact class, member
predicates, an ordered axis list, a measure list, and an optional cube-axis
subset. The nine operators (slice, dice, roll_up, drill_down, rotate, switch,
push, pull, cube) are pure transforms on the state and never touch fact data;
only evaluate() reads the documents. Evaluation lowers the state to a plan
over the tree substrate: select the fact subtrees, filter them through the
predicates via ancestor resolution, group by the axis keys, and fold each
measure, once per cube grouping.

Coordinates use the reserved tokens ``*`` (collapsed cube axis),
``__unassigned__`` (ragged rollup gap) and ``__unknown__`` (missing fact
reference), which order after real members in every layout.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, replace
from decimal import Decimal

from .errors import (
    DuplicateAxis,
    DuplicateMeasure,
    EmptyMemberSet,
    EmptySubset,
    InvalidPermutation,
    NonNumericAttribute,
    NotAnAxis,
    NotAPermutation,
    NotCoarser,
    NotFiner,
    UnknownAttribute,
    UnknownDimension,
    UnknownMeasure,
    UnknownMember,
)
from .model import ALL, NUMERIC_TYPES, UNASSIGNED, UNKNOWN, canon_number
from .store import WarehouseInstance
from .trees import (
    AD,
    DataTree,
    PatternEdge,
    PatternNode,
    PatternTree,
    ValueTest,
    aggregate,
    group_forest,
    selection,
)

PULLED_PREFIX = "μ:"  # pulled-measure pseudo-dimension labels: "μ:<measure>"

# measure sources
NATIVE = "native"
PUSHED = "pushed"
COUNT = "count"


@dataclass(frozen=True)
class Predicate:
    dimension: str
    level: str
    members: tuple[str, ...]  # sorted, deduplicated


@dataclass(frozen=True)
class Axis:
    label: str  # dimension id, or "μ:<measure>" for pulled axes
    level: str | None  # None for pulled axes
    member_order: tuple[str, ...] = ()  # document order; empty for pulled axes
    pulled_source: tuple | None = None  # measure source when label is pulled

    @property
    def is_pulled(self) -> bool:
        return self.pulled_source is not None


@dataclass(frozen=True)
class MeasureTerm:
    name: str
    aggregate: str
    source: tuple  # (NATIVE, measure) | (PUSHED, dim, level, attr) | (COUNT,)


IMPLICIT_COUNT = MeasureTerm(name="count", aggregate=COUNT, source=(COUNT,))


@dataclass(frozen=True)
class QueryState:
    fact_class: str
    predicates: tuple[Predicate, ...] = ()
    axes: tuple[Axis, ...] = ()
    measures: tuple[MeasureTerm, ...] = ()
    cube_axes: frozenset[str] = frozenset()

    # -- helpers ----------------------------------------------------------

    def axis_index(self, label: str) -> int:
        for i, axis in enumerate(self.axes):
            if axis.label == label:
                return i
        raise NotAnAxis(f"{label!r} is not on the axes")

    def _dimension_axis(self, dimension: str) -> tuple[int, Axis]:
        index = self.axis_index(dimension)
        axis = self.axes[index]
        if axis.is_pulled:
            raise NotAnAxis(f"{dimension!r} is a pulled axis, not a dimension")
        return index, axis

    def _linked(self, instance: WarehouseInstance, dimension: str):
        fact = instance.schema.fact_class(self.fact_class)
        if not fact.links_dimension(dimension):
            raise UnknownDimension(
                f"dimension {dimension!r} is not linked by fact class {self.fact_class!r}"
            )
        return instance.dimension_table(dimension)

    # -- the nine operators ------------------------------------------------

    def slice(self, instance: WarehouseInstance, dimension: str, level: str, member: str) -> "QueryState":
        """Fix one dimension to a single member and drop it from the axes."""
        table = self._linked(instance, dimension)
        if table.member(member).level_id != level:
            raise UnknownMember(f"member {member!r} is not at level {level!r}")
        predicate = Predicate(dimension=dimension, level=level, members=(member,))
        axes = tuple(a for a in self.axes if a.label != dimension)
        return replace(
            self,
            predicates=self.predicates + (predicate,),
            axes=axes,
            cube_axes=self.cube_axes - {dimension},
        )

    def dice(self, instance: WarehouseInstance, predicates) -> "QueryState":
        """Restrict dimensions to member subsets; axes are unchanged.
        Sets on distinct dimensions combine conjunctively, members within a
        set disjunctively."""
        added = []
        for dimension, level, members in predicates:
            members = sorted(set(members))
            if not members:
                raise EmptyMemberSet(f"empty member set for dimension {dimension!r}")
            table = self._linked(instance, dimension)
            for member in members:
                if table.member(member).level_id != level:
                    raise UnknownMember(f"member {member!r} is not at level {level!r}")
            added.append(Predicate(dimension=dimension, level=level, members=tuple(members)))
        return replace(self, predicates=self.predicates + tuple(added))

    def roll_up(self, instance: WarehouseInstance, dimension: str, to_level: str) -> "QueryState":
        """Move an axis to a strictly coarser level."""
        index, axis = self._dimension_axis(dimension)
        table = instance.dimension_table(dimension)
        if table.spec.depth_of(to_level) <= table.spec.depth_of(axis.level):
            raise NotCoarser(f"{to_level!r} is not coarser than {axis.level!r}")
        return self._replace_axis(index, to_level, table)

    def drill_down(self, instance: WarehouseInstance, dimension: str, to_level: str) -> "QueryState":
        """Move an axis to a strictly finer level; evaluation recomputes from
        base facts, so no stored finer aggregate is needed."""
        index, axis = self._dimension_axis(dimension)
        table = instance.dimension_table(dimension)
        if table.spec.depth_of(to_level) >= table.spec.depth_of(axis.level):
            raise NotFiner(f"{to_level!r} is not finer than {axis.level!r}")
        return self._replace_axis(index, to_level, table)

    def _replace_axis(self, index: int, to_level: str, table) -> "QueryState":
        axes = list(self.axes)
        axes[index] = Axis(
            label=axes[index].label,
            level=to_level,
            member_order=tuple(table.level_order[to_level]),
        )
        return replace(self, axes=tuple(axes))

    def rotate(self, order) -> "QueryState":
        """Reorder the axes; entry i of order names the current position moved
        to position i. Pure relabeling: predicates, measures, member orders
        are untouched."""
        order = list(order)
        if sorted(order) != list(range(len(self.axes))):
            raise InvalidPermutation(f"{order!r} is not a permutation of 0..{len(self.axes) - 1}")
        return replace(self, axes=tuple(self.axes[i] for i in order))

    def switch(self, dimension: str, members) -> "QueryState":
        """Permute the member order of one axis; the evaluated cell map is
        unchanged, only layout order moves."""
        index, axis = self._dimension_axis(dimension)
        members = tuple(members)
        if Counter(members) != Counter(axis.member_order):
            raise NotAPermutation(
                f"new order for {dimension!r} is not a permutation of its members"
            )
        axes = list(self.axes)
        axes[index] = replace(axis, member_order=members)
        return replace(self, axes=tuple(axes))

    def push(self, instance: WarehouseInstance, dimension: str, level: str, attribute: str) -> "QueryState":
        """Turn a numeric dimension attribute into a measure named
        dimension.level.attribute (summed). Facts resolving to a sentinel at
        that level contribute 0."""
        table = self._linked(instance, dimension)
        spec = table.spec.level(level).attribute(attribute)
        if spec is None:
            raise UnknownAttribute(f"no attribute {attribute!r} at {dimension}.{level}")
        if spec.type not in NUMERIC_TYPES:
            raise NonNumericAttribute(
                f"attribute {attribute!r} has type {spec.type!r}; push needs a numeric type"
            )
        name = f"{dimension}.{level}.{attribute}"
        if any(m.name == name for m in self.measures):
            raise DuplicateMeasure(f"measure {name!r} already present")
        term = MeasureTerm(name=name, aggregate="sum", source=(PUSHED, dimension, level, attribute))
        return replace(self, measures=self.measures + (term,))

    def pull(self, measure: str) -> "QueryState":
        """Turn a measure into a pseudo-dimension axis of its distinct values.
        When the last measure is pulled, an implicit fact count takes its place."""
        for i, term in enumerate(self.measures):
            if term.name == measure:
                break
        else:
            raise UnknownMeasure(f"no measure {measure!r} in the pipeline")
        label = PULLED_PREFIX + measure
        if any(a.label == label for a in self.axes):
            raise DuplicateAxis(f"axis {label!r} already present")
        measures = self.measures[:i] + self.measures[i + 1 :]
        if not measures:
            measures = (IMPLICIT_COUNT,)
        axis = Axis(label=label, level=None, member_order=(), pulled_source=term.source)
        return replace(self, measures=measures, axes=self.axes + (axis,))

    def cube(self, axis_labels) -> "QueryState":
        """Request cube expansion over a subset of the axes: evaluation emits
        every grouping where a subset of these axes is collapsed to ``*``."""
        labels = list(axis_labels)
        if not labels:
            raise EmptySubset("cube needs at least one axis")
        for label in labels:
            self.axis_index(label)  # raises NotAnAxis
        return replace(self, cube_axes=frozenset(labels))


def base(instance: WarehouseInstance, fact_class: str, axes, measures=None) -> QueryState:
    """Pipeline entry point: no predicates, the given axes in document member
    order, and the fact class's native measures under their default aggregates
    (overridable by an explicit (name, aggregate) list). A fact class without
    measures gets the implicit count."""
    fact = instance.schema.fact_class(fact_class)
    built_axes: list[Axis] = []
    for dimension, level in axes:
        if not fact.links_dimension(dimension):
            raise UnknownDimension(
                f"dimension {dimension!r} is not linked by fact class {fact_class!r}"
            )
        if any(a.label == dimension for a in built_axes):
            raise DuplicateAxis(f"dimension {dimension!r} appears twice on the axes")
        table = instance.dimension_table(dimension)
        table.spec.level(level)  # raises UnknownLevel
        built_axes.append(
            Axis(label=dimension, level=level, member_order=tuple(table.level_order[level]))
        )
    if measures is None:
        terms = tuple(
            MeasureTerm(name=m.name, aggregate=m.aggregate, source=(NATIVE, m.name))
            for m in fact.measures
        )
    else:
        terms = []
        for name, aggregate_fn in measures:
            fact.measure(name)  # raises on unknown measure names
            if aggregate_fn not in ("sum", "count", "min", "max", "avg"):
                raise UnknownMeasure(f"unknown aggregate {aggregate_fn!r}")
            if any(t.name == name for t in terms):
                raise DuplicateMeasure(f"measure {name!r} listed twice")
            terms.append(MeasureTerm(name=name, aggregate=aggregate_fn, source=(NATIVE, name)))
        terms = tuple(terms)
    if not terms:
        terms = (IMPLICIT_COUNT,)
    return QueryState(fact_class=fact_class, axes=tuple(built_axes), measures=terms)


# ---------------------------------------------------------------------------
# evaluation

@dataclass(frozen=True)
class AxisLayout:
    label: str
    level: str | None
    coords: tuple[str, ...]  # full coordinate order: members, sentinels, then *


@dataclass(frozen=True)
class CubeView:
    axes: tuple[AxisLayout, ...]
    measures: tuple[str, ...]
    cells: dict  # coordinate tuple -> {measure name: number}, canonical order
    state: QueryState

    def grand_total(self, measure: str):
        """The fully collapsed cell's value when present (zero-axis or all-cube views)."""
        key = tuple(ALL if a.label in self.state.cube_axes else None for a in self.axes)
        if None in key:
            raise KeyError("view has uncollapsed axes")
        return self.cells[key][measure]


class _FactReader:
    """Cached per-fact reads over fact subtrees plus ancestor resolution."""

    def __init__(self, instance: WarehouseInstance, fact_class: str):
        self.instance = instance
        self.fact = instance.schema.fact_class(fact_class)
        self.types = {m.name: m.type for m in self.fact.measures}
        self._refs: dict[int, dict[str, str]] = {}
        self._measures: dict[int, dict[str, str]] = {}
        self._anc: dict[tuple[str, str, str], str] = {}

    def refs(self, tree: DataTree) -> dict[str, str]:
        cached = self._refs.get(tree.root.node_id)
        if cached is None:
            cached = {}
            for el in tree.root.elements("dimension"):
                cached[el.attr("idref")] = el.attr("value-id")
            self._refs[tree.root.node_id] = cached
        return cached

    def ref(self, tree: DataTree, dimension: str) -> str:
        return self.refs(tree).get(dimension, UNKNOWN)

    def ancestor(self, dimension: str, member: str, level: str) -> str:
        key = (dimension, member, level)
        cached = self._anc.get(key)
        if cached is None:
            table = self.instance.dimensions[dimension]
            cached = self._anc[key] = table.ancestor_at_level(member, level)
        return cached

    def coordinate(self, tree: DataTree, dimension: str, level: str) -> str:
        return self.ancestor(dimension, self.ref(tree, dimension), level)

    def measure_value(self, tree: DataTree, source: tuple) -> int | Decimal:
        kind = source[0]
        if kind == COUNT:
            return 1
        if kind == NATIVE:
            name = source[1]
            raw = self._measures.get(tree.root.node_id)
            if raw is None:
                raw = {
                    el.attr("name"): el.attr("value")
                    for el in tree.root.elements("measure")
                }
                self._measures[tree.root.node_id] = raw
            text = raw[name]
            return int(text) if self.types[name] == "integer" else Decimal(text)
        # pushed attribute of the fact's ancestor member at the given level
        _, dimension, level, attribute = source
        member = self.coordinate(tree, dimension, level)
        if member in (UNASSIGNED, UNKNOWN):
            return 0
        table = self.instance.dimensions[dimension]
        value = table.members[member].attribute_values.get(attribute)
        return 0 if value is None else value  # type: ignore[return-value]


def _fact_pattern(fact_class: str) -> PatternTree:
    return PatternTree(
        nodes=(
            PatternNode(label="FactDoc", tests=(ValueTest("id", "=", fact_class),)),
            PatternNode(label="fact"),
        ),
        edges=(PatternEdge(parent=0, child=1, kind=AD),),
        output=1,
    )


def _passes(reader: _FactReader, tree: DataTree, predicates) -> bool:
    for predicate in predicates:
        coord = reader.coordinate(tree, predicate.dimension, predicate.level)
        if coord not in predicate.members:
            return False
    return True


_SENTINEL_RANK = {UNASSIGNED: 0, UNKNOWN: 1, ALL: 2}


def _axis_layout(axis: Axis, used: set[str]) -> AxisLayout:
    if axis.is_pulled:
        real = sorted((v for v in used if v not in _SENTINEL_RANK), key=Decimal)
    else:
        real = [m for m in axis.member_order]
    coords = list(real)
    for sentinel in (UNASSIGNED, UNKNOWN, ALL):
        if sentinel in used:
            coords.append(sentinel)
    return AxisLayout(label=axis.label, level=axis.level, coords=tuple(coords))


def evaluate(instance: WarehouseInstance, state: QueryState) -> CubeView:
    """Execute a pipeline: select fact subtrees, filter by the predicates,
    group by the axis keys (once per cube grouping), fold every measure, and
    assemble the cube with deterministic cell ordering."""
    reader = _FactReader(instance, state.fact_class)
    forest = [instance.fact_forest(state.fact_class)]
    selected = selection(_fact_pattern(state.fact_class), forest)
    filtered = [t for t in selected if _passes(reader, t, state.predicates)]

    def coordinate(tree: DataTree, axis: Axis) -> str:
        if axis.is_pulled:
            return canon_number(reader.measure_value(tree, axis.pulled_source))
        return reader.coordinate(tree, axis.label, axis.level)

    cube_positions = [i for i, a in enumerate(state.axes) if a.label in state.cube_axes]
    groupings = [
        frozenset(combo)
        for r in range(len(cube_positions) + 1)
        for combo in itertools.combinations(cube_positions, r)
    ]

    cells: dict[tuple[str, ...], dict[str, int | Decimal]] = {}
    for collapsed in groupings:
        def key_fn(tree, _collapsed=collapsed):
            return tuple(
                ALL if i in _collapsed else coordinate(tree, axis)
                for i, axis in enumerate(state.axes)
            )

        grouped = group_forest(filtered, key_fn)
        per_measure = [
            aggregate(grouped, lambda t, _s=term.source: reader.measure_value(t, _s), term.aggregate)
            for term in state.measures
        ]
        for g_index, group in enumerate(grouped.groups):
            cells[group.key] = {
                term.name: per_measure[m_index][g_index][1]
                for m_index, term in enumerate(state.measures)
            }

    used_per_axis: list[set[str]] = [set() for _ in state.axes]
    for coord in cells:
        for i, value in enumerate(coord):
            used_per_axis[i].add(value)
    layouts = tuple(_axis_layout(a, used_per_axis[i]) for i, a in enumerate(state.axes))

    ranks = [
        {value: i for i, value in enumerate(layout.coords)} for layout in layouts
    ]
    ordered = dict(
        sorted(cells.items(), key=lambda kv: tuple(r[v] for r, v in zip(ranks, kv[0])))
    )
    return CubeView(
        axes=layouts,
        measures=tuple(term.name for term in state.measures),
        cells=ordered,
        state=state,
    )


# ---------------------------------------------------------------------------
# plan dump

def plan_lines(instance: WarehouseInstance, state: QueryState) -> str:
    """Stable textual dump of the lowered plan, one operator per line, pre-order."""
    fact = instance.schema.fact_class(state.fact_class)
    lines = []
    axes_text = ", ".join(
        a.label if a.is_pulled else f"{a.label}.{a.level}" for a in state.axes
    )
    cube_text = ""
    if state.cube_axes:
        members = sorted(state.cube_axes)
        cube_text = f" cube=[{', '.join(members)}]"
    lines.append(f"emit axes=[{axes_text}]{cube_text}")
    for term in state.measures:
        lines.append(f"aggregate {term.name} {term.aggregate}")
    keys = ", ".join(
        f"value({a.label[len(PULLED_PREFIX):]})" if a.is_pulled else f"ancestor({a.label}->{a.level})"
        for a in state.axes
    )
    lines.append(f"group key=({keys})")
    for predicate in state.predicates:
        members = ", ".join(predicate.members)
        lines.append(f"filter {predicate.dimension}@{predicate.level} in {{{members}}}")
    lines.append(f"scan doc={fact.document_path} pattern=FactDoc//fact class={fact.id}")
    return "\n".join(lines) + "\n"
