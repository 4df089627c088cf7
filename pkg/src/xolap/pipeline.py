"""Parse and apply the JSON pipeline form consumed by the CLI and the API.

A pipeline is a JSON array of op objects. The first op is always ``base``;
each later op appends one operator application. Field names are fixed in
FORMATS.md. Errors carry the zero-based index of the offending op so clients
can point at it.
"""

from __future__ import annotations

import json

from . import olap
from .errors import PipelineError, XolapError
from .store import WarehouseInstance

OP_NAMES = (
    "base",
    "slice",
    "dice",
    "rollup",
    "drilldown",
    "rotate",
    "switch",
    "push",
    "pull",
    "cube",
)


def parse_pipeline(text: str) -> list[dict]:
    try:
        ops = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PipelineError(
            "malformed_json", f"pipeline is not valid JSON at byte offset {exc.pos}: {exc.msg}"
        ) from None
    if not isinstance(ops, list) or not all(isinstance(op, dict) for op in ops):
        raise PipelineError("invalid_pipeline", "pipeline must be a JSON array of op objects")
    return ops


def parse_pipeline_envelope(text: str) -> tuple[list[dict], str]:
    """Parse a compile request: {"pipeline": [...], "dialect": "xq31"|"xq10"}.
    The dialect defaults to xq31."""
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PipelineError(
            "malformed_json", f"body is not valid JSON at byte offset {exc.pos}: {exc.msg}"
        ) from None
    if not isinstance(body, dict) or "pipeline" not in body:
        raise PipelineError("invalid_pipeline", 'body must be {"pipeline": [...], "dialect": ...}')
    ops = body["pipeline"]
    if not isinstance(ops, list) or not all(isinstance(op, dict) for op in ops):
        raise PipelineError("invalid_pipeline", "pipeline must be a JSON array of op objects")
    dialect = body.get("dialect", "xq31")
    if dialect not in ("xq31", "xq10"):
        raise PipelineError("invalid_dialect", f"unknown dialect {dialect!r}")
    return ops, dialect


def _get(op: dict, name: str, index: int):
    try:
        return op[name]
    except KeyError:
        raise PipelineError(
            "invalid_op", f"op {op.get('op')!r} is missing field {name!r}", index
        ) from None


def apply_pipeline(instance: WarehouseInstance, ops: list[dict]) -> olap.QueryState:
    if not ops:
        raise PipelineError("invalid_pipeline", "pipeline is empty")
    if ops[0].get("op") != "base":
        raise PipelineError("invalid_pipeline", "first op must be base", 0)
    state: olap.QueryState | None = None
    for index, op in enumerate(ops):
        name = op.get("op")
        if name not in OP_NAMES:
            raise PipelineError("unknown_op", f"unknown op {name!r}", index)
        if (name == "base") != (index == 0):
            raise PipelineError("invalid_pipeline", "base must appear exactly once, first", index)
        try:
            state = _apply(instance, state, name, op, index)
        except PipelineError:
            raise
        except XolapError as exc:
            raise PipelineError(exc.code(), str(exc), index) from exc
    assert state is not None
    return state


def _apply(instance, state, name, op, index):
    if name == "base":
        axes = [
            (_get(a, "dimension", index), _get(a, "level", index))
            for a in _get(op, "axes", index)
        ]
        measures = op.get("measures")
        if measures is not None:
            measures = [
                (_get(m, "name", index), _get(m, "aggregate", index)) for m in measures
            ]
        return olap.base(instance, _get(op, "fact", index), axes, measures)
    if name == "slice":
        return state.slice(
            instance, _get(op, "dimension", index), _get(op, "level", index), _get(op, "member", index)
        )
    if name == "dice":
        predicates = [
            (_get(p, "dimension", index), _get(p, "level", index), _get(p, "members", index))
            for p in _get(op, "predicates", index)
        ]
        return state.dice(instance, predicates)
    if name == "rollup":
        return state.roll_up(instance, _get(op, "dimension", index), _get(op, "to_level", index))
    if name == "drilldown":
        return state.drill_down(instance, _get(op, "dimension", index), _get(op, "to_level", index))
    if name == "rotate":
        return state.rotate(_get(op, "order", index))
    if name == "switch":
        return state.switch(_get(op, "dimension", index), _get(op, "members", index))
    if name == "push":
        return state.push(
            instance, _get(op, "dimension", index), _get(op, "level", index), _get(op, "attribute", index)
        )
    if name == "pull":
        return state.pull(_get(op, "measure", index))
    if name == "cube":
        return state.cube(_get(op, "axes", index))
    raise AssertionError(name)


def run_pipeline(instance: WarehouseInstance, ops: list[dict]) -> olap.CubeView:
    return olap.evaluate(instance, apply_pipeline(instance, ops))
