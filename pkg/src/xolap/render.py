"""Pivot layouts and result serialization (XML, CSV, JSON).

The XML shape here is the same result/cell wire shape the generated XQuery
emits, so native and external results diff cleanly. Serializations contain
only non-empty cells; pivot bodies render absent cells as blanks. All output
is deterministic byte-for-byte.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .errors import InvalidSplit, MalformedXml, OutputParseError
from .model import canon_number
from .olap import AxisLayout, CubeView
from .xmlio import XmlWriter, parse_xml

FORMATS = ("xml", "csv", "json")

#: A comparable cell set: {((label, level, member), ...): {measure: number}}
CellSet = dict


def axis_column(axis: AxisLayout) -> str:
    return axis.label if axis.level is None else f"{axis.label}.{axis.level}"


# ---------------------------------------------------------------------------
# pivot

@dataclass(frozen=True)
class PivotTable:
    row_axes: tuple[AxisLayout, ...]
    col_axes: tuple[AxisLayout, ...]
    row_headers: tuple[tuple[str, ...], ...]
    col_headers: tuple[tuple[str, ...], ...]
    measures: tuple[str, ...]
    body: tuple  # rows of cells; a cell is {measure: number} or None


def _header_tuples(axes: tuple[AxisLayout, ...]) -> list[tuple[str, ...]]:
    headers: list[tuple[str, ...]] = [()]
    for axis in axes:
        headers = [h + (coord,) for h in headers for coord in axis.coords]
    return headers


def to_pivot(view: CubeView, split: int) -> PivotTable:
    """Lay a cube out as rows x columns, splitting the axis list at the given
    position. Ordering honors each axis's member order, so switch and rotate
    visibly change the layout."""
    if not (0 <= split <= len(view.axes)):
        raise InvalidSplit(f"split {split} out of range 0..{len(view.axes)}")
    row_axes = view.axes[:split]
    col_axes = view.axes[split:]
    rows = _header_tuples(row_axes)
    cols = _header_tuples(col_axes)
    body = tuple(
        tuple(view.cells.get(r + c) for c in cols) for r in rows
    )
    return PivotTable(
        row_axes=row_axes,
        col_axes=col_axes,
        row_headers=tuple(rows),
        col_headers=tuple(cols),
        measures=view.measures,
        body=body,
    )


# ---------------------------------------------------------------------------
# serialization

def serialize_view(view: CubeView, fmt: str = "xml") -> str:
    if fmt == "xml":
        return view_to_xml(view)
    if fmt == "csv":
        return view_to_csv(view)
    if fmt == "json":
        return view_to_json(view)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def view_to_xml(view: CubeView) -> str:
    w = XmlWriter()
    if not view.cells:
        w.empty("result")
        return w.text()
    w.open("result")
    for coord, measures in view.cells.items():
        w.open("cell")
        for axis, member in zip(view.axes, coord):
            attrs = [("dimension", axis.label)]
            if axis.level is not None:
                attrs.append(("level", axis.level))
            attrs.append(("member", member))
            w.empty("coord", attrs)
        for name in view.measures:
            w.empty("measure", [("name", name), ("value", canon_number(measures[name]))])
        w.close()
    w.close()
    return w.text()


def view_to_csv(view: CubeView) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([axis_column(a) for a in view.axes] + list(view.measures))
    for coord, measures in view.cells.items():
        writer.writerow(
            list(coord) + [canon_number(measures[name]) for name in view.measures]
        )
    return out.getvalue()


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def view_to_json(view: CubeView) -> str:
    """CubeView as JSON. Measure values are emitted as bare number tokens in
    canonical decimal form (hand-assembled; json.dumps would lose exactness on
    decimals)."""
    parts = ['{"axes":[']
    for i, axis in enumerate(view.axes):
        if i:
            parts.append(",")
        level = "null" if axis.level is None else _json_str(axis.level)
        coords = ",".join(_json_str(c) for c in axis.coords)
        parts.append(
            f'{{"label":{_json_str(axis.label)},"level":{level},"coords":[{coords}]}}'
        )
    parts.append('],"measures":[')
    parts.append(",".join(_json_str(m) for m in view.measures))
    parts.append('],"cells":[')
    for i, (coord, measures) in enumerate(view.cells.items()):
        if i:
            parts.append(",")
        coord_json = ",".join(_json_str(c) for c in coord)
        measures_json = ",".join(
            f"{_json_str(name)}:{canon_number(measures[name])}" for name in view.measures
        )
        parts.append(f'{{"coord":[{coord_json}],"measures":{{{measures_json}}}}}')
    parts.append("]}")
    return "".join(parts)


# ---------------------------------------------------------------------------
# result comparison

def _parse_number(text: str) -> int | Decimal:
    try:
        return int(text)
    except ValueError:
        try:
            return Decimal(text)
        except InvalidOperation:
            raise OutputParseError(f"measure value {text!r} is not numeric") from None


def parse_result_xml(text: str) -> CellSet:
    """Parse a result document (ours or an external processor's) into a
    comparable cell set."""
    try:
        root = parse_xml(text, "result")
    except MalformedXml as exc:
        excerpt = text.strip()[:120]
        raise OutputParseError(f"{exc} (output starts: {excerpt!r})") from None
    if root.tag != "result":
        raise OutputParseError(f"expected result element, got {root.tag!r}")
    cells: CellSet = {}
    for cell in root:
        if cell.tag != "cell":
            raise OutputParseError(f"unexpected element {cell.tag!r} under result")
        coords = []
        measures = {}
        for child in cell:
            if child.tag == "coord":
                coords.append(
                    (child.get("dimension"), child.get("level"), child.get("member"))
                )
            elif child.tag == "measure":
                measures[child.get("name")] = _parse_number(child.get("value", ""))
            else:
                raise OutputParseError(f"unexpected element {child.tag!r} under cell")
        cells[tuple(coords)] = measures
    return cells


def cell_set(view: CubeView) -> CellSet:
    """The view's cells in the same comparable form parse_result_xml produces."""
    out: CellSet = {}
    for coord, measures in view.cells.items():
        key = tuple(
            (axis.label, axis.level, member) for axis, member in zip(view.axes, coord)
        )
        out[key] = dict(measures)
    return out
