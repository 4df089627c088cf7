"""Compile a pipeline state into standalone XQuery text, and run it through a
configurable external processor.

Two dialects are generated:

* ``xq31`` groups with the native FLWOR ``group by`` clause;
* ``xq10`` emulates grouping by nested iteration over distinct key values, so
  it runs on XQuery 1.0 processors (and on engines without ``group by``).

Generated text is self-contained: it declares its own recursive
ancestor-resolution function and references the warehouse documents only via
``doc()`` with paths relative to the warehouse directory. Executing it yields
a ``result`` element in the same cell shape the native serializer emits, so
results compare directly. Cube expansion compiles to one query block per
grouping, concatenated inside the single ``result``.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import ProcessorFailure, ProcessorUnavailable
from .model import UNASSIGNED, UNKNOWN, WarehouseSchema
from .olap import COUNT, NATIVE, PUSHED, QueryState
from .render import CellSet, parse_result_xml

DIALECTS = ("xq31", "xq10")
PROCESSOR_ENV = "XOLAP_XQUERY_CMD"


@dataclass(frozen=True)
class GeneratedQuery:
    text: str
    documents: tuple[str, ...]
    dialect: str


def _xqs(value: str) -> str:
    """An XQuery string literal."""
    return '"' + value.replace('"', '""') + '"'


def _xattr(value: str) -> str:
    """Literal text inside a double-quoted attribute constructor."""
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace('"', "&quot;")
        .replace("{", "{{")
        .replace("}", "}}")
    )


class _Compiler:
    def __init__(self, state: QueryState, schema: WarehouseSchema, dialect: str):
        if dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {dialect!r}; expected one of {DIALECTS}")
        self.state = state
        self.schema = schema
        self.dialect = dialect
        self.fact = schema.fact_class(state.fact_class)
        self.dim_vars: dict[str, str] = {}  # dimension id -> variable name
        for dimension in self._referenced_dimensions():
            self.dim_vars[dimension] = f"$dim{len(self.dim_vars)}"

    def _referenced_dimensions(self) -> list[str]:
        seen: list[str] = []

        def note(dimension: str) -> None:
            if dimension not in seen:
                seen.append(dimension)

        for axis in self.state.axes:
            if not axis.is_pulled:
                note(axis.label)
            elif axis.pulled_source[0] == PUSHED:
                note(axis.pulled_source[1])
        for predicate in self.state.predicates:
            note(predicate.dimension)
        for term in self.state.measures:
            if term.source[0] == PUSHED:
                note(term.source[1])
        return seen

    # -- prolog pieces ------------------------------------------------------

    def _doc_variables(self) -> list[str]:
        lines = []
        for dimension, var in self.dim_vars.items():
            path = self.schema.dimension(dimension).document_path
            lines.append(f"declare variable {var} := doc({_xqs(path)})/dimension;")
        lines.append(
            "declare variable $fact-doc := "
            f"doc({_xqs(self.fact.document_path)})/FactDoc[@id = {_xqs(self.fact.id)}];"
        )
        return lines

    @staticmethod
    def _core_functions() -> str:
        return f"""\
declare function local:walk($dim as element(), $target as xs:string, $member as xs:string) as xs:string {{
  let $inst := ($dim/Level/instance[@id = $member])[1]
  return
    if (empty($inst)) then {_xqs(UNASSIGNED)}
    else if (string($inst/../@id) = $target) then $member
    else if (empty($inst/parent)) then {_xqs(UNASSIGNED)}
    else local:walk($dim, $target, string(($inst/parent)[1]/@idref))
}};

declare function local:anc($dim as element(), $target as xs:string, $member as xs:string) as xs:string {{
  if ($member = {_xqs(UNKNOWN)}) then {_xqs(UNKNOWN)}
  else local:walk($dim, $target, $member)
}};

declare function local:ref($f as element(), $dim as xs:string) as xs:string {{
  string(($f/dimension[@idref = $dim]/@value-id, {_xqs(UNKNOWN)})[1])
}};"""

    def _value_expr(self, source: tuple, fact_var: str) -> str:
        kind = source[0]
        if kind == COUNT:
            return "1"
        if kind == NATIVE:
            return (
                f"xs:decimal(({fact_var}/measure[@name = {_xqs(source[1])}]/@value)[1])"
            )
        _, dimension, level, attribute = source
        var = self.dim_vars[dimension]
        member_expr = f"local:anc({var}, {_xqs(level)}, local:ref({fact_var}, {_xqs(dimension)}))"
        lookup = (
            f"xs:decimal(({var}/Level[@id = {_xqs(level)}]/instance[@id = $m]"
            f"/attribute[@name = {_xqs(attribute)}]/@value, \"0\")[1])"
        )
        return (
            f"let $m := {member_expr}\n"
            f"  return if ($m = ({_xqs(UNASSIGNED)}, {_xqs(UNKNOWN)})) then 0\n"
            f"  else {lookup}"
        )

    def _key_functions(self) -> list[str]:
        out = []
        for i, axis in enumerate(self.state.axes):
            if axis.is_pulled:
                body = f"string(local:pval{i}($f))"
                out.append(
                    f"declare function local:pval{i}($f as element()) as xs:decimal {{\n"
                    f"  {self._value_expr(axis.pulled_source, '$f')}\n}};"
                )
            else:
                var = self.dim_vars[axis.label]
                body = f"local:anc({var}, {_xqs(axis.level)}, local:ref($f, {_xqs(axis.label)}))"
            out.append(
                f"declare function local:key{i}($f as element()) as xs:string {{\n  {body}\n}};"
            )
        return out

    def _measure_functions(self) -> list[str]:
        out = []
        for j, term in enumerate(self.state.measures):
            if term.source[0] == COUNT:
                continue
            out.append(
                f"declare function local:val{j}($f as element()) as xs:decimal {{\n"
                f"  {self._value_expr(term.source, '$f')}\n}};"
            )
        return out

    def _selected_facts(self) -> str:
        if not self.state.predicates:
            return "declare variable $facts := $fact-doc/fact;"
        tests = []
        for predicate in self.state.predicates:
            var = self.dim_vars[predicate.dimension]
            members = ", ".join(_xqs(m) for m in predicate.members)
            tests.append(
                f"local:anc({var}, {_xqs(predicate.level)}, "
                f"local:ref(., {_xqs(predicate.dimension)})) = ({members})"
            )
        joined = "\n  and ".join(tests)
        return f"declare variable $facts := $fact-doc/fact[\n  {joined}\n];"

    # -- result blocks ------------------------------------------------------

    def _cell_constructor(self, collapsed: frozenset[int], group_var: str) -> str:
        coords = []
        for i, axis in enumerate(self.state.axes):
            member = '"*"' if i in collapsed else f'"{{$g{i}}}"'
            level = "" if axis.level is None else f' level="{_xattr(axis.level)}"'
            coords.append(
                f'<coord dimension="{_xattr(axis.label)}"{level} member={member}/>'
            )
        measures = []
        for j, term in enumerate(self.state.measures):
            if term.aggregate == "count":
                expr = f"count({group_var})"
            else:
                values = f"for $x in {group_var} return local:val{j}($x)"
                fn = {"sum": "sum", "min": "min", "max": "max", "avg": "avg"}[term.aggregate]
                expr = f"{fn}({values})"
            measures.append(
                f'<measure name="{_xattr(term.name)}" value="{{{expr}}}"/>'
            )
        inner = "".join(coords) + "".join(measures)
        return f"<cell>{inner}</cell>"

    @staticmethod
    def _order_clause(grouped: list[int]) -> str:
        # a single order spec over the joined keys keeps output stable and
        # stays within XQuery 1.0 (and engines limited to one spec)
        if len(grouped) == 1:
            return f"order by $g{grouped[0]}"
        keys = ", ".join(f"$g{i}" for i in grouped)
        return f'order by string-join(({keys}), "|")'

    def _block(self, collapsed: frozenset[int]) -> str:
        grouped = [i for i in range(len(self.state.axes)) if i not in collapsed]
        if not grouped:
            cell = self._cell_constructor(collapsed, "$facts")
            return f"if (exists($facts)) then\n  {cell}\nelse ()"
        if self.dialect == "xq31":
            lines = ["for $f in $facts"]
            for i in grouped:
                lines.append(f"let $k{i} := local:key{i}($f)")
            lines.append("group by " + ", ".join(f"$g{i} := $k{i}" for i in grouped))
            lines.append(self._order_clause(grouped))
            lines.append("return " + self._cell_constructor(collapsed, "$f"))
            return "\n".join(lines)
        lines = []
        for i in grouped:
            lines.append(
                f"for $g{i} in distinct-values(for $f in $facts return local:key{i}($f))"
            )
        condition = " and ".join(f"local:key{i}(.) = $g{i}" for i in grouped)
        lines.append(f"let $grp := $facts[{condition}]")
        lines.append("where exists($grp)")
        lines.append(self._order_clause(grouped))
        lines.append("return " + self._cell_constructor(collapsed, "$grp"))
        return "\n".join(lines)

    def compile(self) -> GeneratedQuery:
        version = "3.1" if self.dialect == "xq31" else "1.0"
        cube_positions = [
            i for i, a in enumerate(self.state.axes) if a.label in self.state.cube_axes
        ]
        groupings = [frozenset()]
        if cube_positions:
            import itertools

            groupings = [
                frozenset(combo)
                for r in range(len(cube_positions) + 1)
                for combo in itertools.combinations(cube_positions, r)
            ]
        blocks = ["(" + self._block(collapsed) + ")" for collapsed in groupings]
        body = "<result>{\n\n" + "\n,\n\n".join(blocks) + "\n\n}</result>"
        parts = [
            f'xquery version "{version}";',
            f"(: fact class {self.fact.id}; {len(self.state.axes)} axes; dialect {self.dialect} :)",
            "",
            "\n".join(self._doc_variables()),
            "",
            self._core_functions(),
            "",
        ]
        key_fns = self._key_functions()
        if key_fns:
            parts.append("\n\n".join(key_fns))
            parts.append("")
        measure_fns = self._measure_functions()
        if measure_fns:
            parts.append("\n\n".join(measure_fns))
            parts.append("")
        parts.append(self._selected_facts())
        parts.append("")
        parts.append(body)
        documents = [self.schema.dimension(d).document_path for d in self.dim_vars]
        documents.append(self.fact.document_path)
        return GeneratedQuery(
            text="\n".join(parts) + "\n",
            documents=tuple(documents),
            dialect=self.dialect,
        )


def compile_query(state: QueryState, schema: WarehouseSchema, dialect: str = "xq31") -> GeneratedQuery:
    """Deterministically compile a pipeline state for the given dialect."""
    return _Compiler(state, schema, dialect).compile()


def run_external(
    query: GeneratedQuery,
    base_dir: str | Path,
    command: str | None = None,
) -> CellSet:
    """Execute a generated query through the configured external processor.

    The command template (argument or the XOLAP_XQUERY_CMD environment
    variable) is split shell-style; the placeholders ``{query_file}`` and
    ``{base_dir}`` are substituted into its tokens. The processor must print
    the result element on standard output.
    """
    if command is None:
        command = os.environ.get(PROCESSOR_ENV)
    if not command:
        raise ProcessorUnavailable(
            f"no external XQuery processor configured (set {PROCESSOR_ENV})"
        )
    with tempfile.NamedTemporaryFile(
        "w", suffix=".xq", delete=False, encoding="utf-8"
    ) as handle:
        handle.write(query.text)
        query_file = handle.name
    try:
        argv = [
            token.replace("{query_file}", query_file).replace("{base_dir}", str(base_dir))
            for token in shlex.split(command)
        ]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ProcessorFailure(
                f"processor exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        return parse_result_xml(proc.stdout)
    finally:
        os.unlink(query_file)
