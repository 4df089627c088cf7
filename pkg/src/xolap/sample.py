"""Sample warehouse emission: the fixed SampleWH dataset and a seeded
pseudo-random generator for property testing and benchmarks.

SampleWH is the canonical desk-scale warehouse used throughout the test
suite: a date dimension (day < month < year), a product dimension
(item < category), a store dimension (store < city), and a single "sales"
fact class with an integer amount measure over five facts.
"""

from __future__ import annotations

import random
from decimal import Decimal
from pathlib import Path

from .model import scalar_to_text
from .xmlio import XmlWriter


def _dimension_xml(dim_id: str, levels: list[tuple[str, list[dict]]]) -> str:
    """levels: [(level_id, [{"id":..., "attrs": {...}, "parent": (level,id)|None}])]"""
    w = XmlWriter()
    w.open("dimension", [("id", dim_id)])
    for level_id, instances in levels:
        if not instances:
            w.empty("Level", [("id", level_id)])
            continue
        w.open("Level", [("id", level_id)])
        for inst in instances:
            w.open("instance", [("id", inst["id"])])
            for name, value in inst.get("attrs", {}).items():
                w.empty("attribute", [("name", name), ("value", scalar_to_text(value))])
            parent = inst.get("parent")
            if parent is not None:
                w.empty("parent", [("level", parent[0]), ("idref", parent[1])])
            w.close()
        w.close()
    w.close()
    return w.text()


def _facts_xml(fact_id: str, facts: list[dict]) -> str:
    """facts: [{"measures": {...}, "refs": {dim: member}}] in document order."""
    w = XmlWriter()
    w.open("FactDoc", [("id", fact_id)])
    for fact in facts:
        w.open("fact")
        for name, value in fact["measures"].items():
            w.empty("measure", [("name", name), ("value", scalar_to_text(value))])
        for dim, member in fact["refs"].items():
            w.empty("dimension", [("idref", dim), ("value-id", member)])
        w.close()
    w.close()
    return w.text()


def _model_xml(dimensions: list[dict], facts: list[dict]) -> str:
    w = XmlWriter()
    w.open("DW-model")
    for dim in dimensions:
        w.open("dimension", [("id", dim["id"]), ("path", dim["path"])])
        for level in dim["levels"]:
            w.open("Level", [("id", level["id"]), ("depth", level["depth"])])
            for attr in level["attributes"]:
                fields = [("name", attr[0]), ("type", attr[1])]
                if len(attr) > 2 and attr[2]:
                    fields.append(("key", "true"))
                w.empty("attribute", fields)
            w.close()
        w.close()
    for fact in facts:
        w.open("FactDoc", [("id", fact["id"]), ("path", fact["path"])])
        for m in fact["measures"]:
            w.empty("measure", [("name", m[0]), ("type", m[1]), ("aggregate", m[2])])
        for dim in fact["dimensions"]:
            w.empty("dimension", [("idref", dim)])
        w.close()
    w.close()
    return w.text()


# ---------------------------------------------------------------------------
# SampleWH

def samplewh_files() -> dict[str, str]:
    """The fixed SampleWH document set, keyed by path relative to the
    warehouse directory."""
    model = _model_xml(
        dimensions=[
            {
                "id": "date",
                "path": "dims/date.xml",
                "levels": [
                    {
                        "id": "day",
                        "depth": 1,
                        "attributes": [
                            ("name", "string", True),
                            ("day_num", "integer"),
                            ("full_date", "date"),
                        ],
                    },
                    {
                        "id": "month",
                        "depth": 2,
                        "attributes": [("name", "string", True), ("month_num", "integer")],
                    },
                    {
                        "id": "year",
                        "depth": 3,
                        "attributes": [("name", "string", True), ("year_num", "integer")],
                    },
                ],
            },
            {
                "id": "product",
                "path": "dims/product.xml",
                "levels": [
                    {
                        "id": "item",
                        "depth": 1,
                        "attributes": [("name", "string", True), ("unit_weight", "integer")],
                    },
                    {
                        "id": "category",
                        "depth": 2,
                        "attributes": [("name", "string", True)],
                    },
                ],
            },
            {
                "id": "store",
                "path": "dims/store.xml",
                "levels": [
                    {"id": "store", "depth": 1, "attributes": [("name", "string", True)]},
                    {"id": "city", "depth": 2, "attributes": [("name", "string", True)]},
                ],
            },
        ],
        facts=[
            {
                "id": "sales",
                "path": "facts.xml",
                "measures": [("amount", "integer", "sum")],
                "dimensions": ["date", "product", "store"],
            }
        ],
    )

    def day(member_id, name, num, full_date, month):
        return {
            "id": member_id,
            "attrs": {"name": name, "day_num": num, "full_date": full_date},
            "parent": ("month", month),
        }

    date = _dimension_xml(
        "date",
        [
            (
                "day",
                [
                    day("d1", "Jan-01", 1, "2007-01-01", "Jan"),
                    day("d2", "Jan-02", 2, "2007-01-02", "Jan"),
                    day("d3", "Feb-01", 1, "2007-02-01", "Feb"),
                    day("d4", "Feb-02", 2, "2007-02-02", "Feb"),
                ],
            ),
            (
                "month",
                [
                    {
                        "id": "Jan",
                        "attrs": {"name": "January", "month_num": 1},
                        "parent": ("year", "2007"),
                    },
                    {
                        "id": "Feb",
                        "attrs": {"name": "February", "month_num": 2},
                        "parent": ("year", "2007"),
                    },
                ],
            ),
            ("year", [{"id": "2007", "attrs": {"name": "2007", "year_num": 2007}}]),
        ],
    )

    product = _dimension_xml(
        "product",
        [
            (
                "item",
                [
                    {"id": "p1", "attrs": {"name": "Widget", "unit_weight": 1}, "parent": ("category", "catA")},
                    {"id": "p2", "attrs": {"name": "Gadget", "unit_weight": 1}, "parent": ("category", "catA")},
                    {"id": "p3", "attrs": {"name": "Gizmo", "unit_weight": 1}, "parent": ("category", "catB")},
                ],
            ),
            (
                "category",
                [
                    {"id": "catA", "attrs": {"name": "Category A"}},
                    {"id": "catB", "attrs": {"name": "Category B"}},
                ],
            ),
        ],
    )

    store = _dimension_xml(
        "store",
        [
            (
                "store",
                [
                    {"id": "s1", "attrs": {"name": "Downtown"}, "parent": ("city", "c1")},
                    {"id": "s2", "attrs": {"name": "Uptown"}, "parent": ("city", "c1")},
                ],
            ),
            ("city", [{"id": "c1", "attrs": {"name": "Springfield"}}]),
        ],
    )

    rows = [
        ("d1", "p1", "s1", 10),
        ("d1", "p2", "s1", 20),
        ("d2", "p1", "s2", 30),
        ("d3", "p3", "s1", 40),
        ("d4", "p2", "s2", 50),
    ]
    facts = _facts_xml(
        "sales",
        [
            {
                "measures": {"amount": amount},
                "refs": {"date": d, "product": p, "store": s},
            }
            for d, p, s, amount in rows
        ],
    )

    return {
        "dw-model.xml": model,
        "dims/date.xml": date,
        "dims/product.xml": product,
        "dims/store.xml": store,
        "facts.xml": facts,
    }


# ---------------------------------------------------------------------------
# random warehouses

def generate_files(
    seed: int,
    n_facts: int,
    n_dims: int = 3,
    max_depth: int = 3,
    min_depth: int = 2,
    members_per_level: int = 6,
    ragged_rate: float = 0.10,
    missing_rate: float = 0.05,
    coarse_ref_rate: float = 0.10,
) -> dict[str, str]:
    """A pseudo-random warehouse, reproducible per seed.

    ragged_rate of members skip their immediate parent level (or end the
    chain early); missing_rate of fact references are omitted entirely;
    coarse_ref_rate of the remaining references point above the leaf level.
    Every member carries a random integer attribute ``w`` and a constant
    ``one`` (handy for count cross-checks).
    """
    rng = random.Random(seed)
    dim_ids = [f"dim_{chr(ord('a') + i)}" for i in range(n_dims)]
    dim_meta = []
    dim_docs = {}
    members_by_leveldepth: dict[str, list[list[str]]] = {}

    for dim in dim_ids:
        depth = rng.randint(min_depth, max_depth)
        level_ids = [f"{dim}_l{d}" for d in range(1, depth + 1)]
        per_level: list[list[dict]] = []
        names: list[list[str]] = []
        for d, level_id in enumerate(level_ids, start=1):
            count = rng.randint(1, members_per_level) if d > 1 else rng.randint(2, members_per_level)
            instances = []
            for i in range(count):
                instances.append(
                    {
                        "id": f"{level_id}_m{i}",
                        "attrs": {
                            "name": f"{level_id} member {i}",
                            "w": rng.randint(0, 9),
                            "one": 1,
                        },
                    }
                )
            per_level.append(instances)
            names.append([inst["id"] for inst in instances])
        # parent links, possibly ragged
        for d in range(len(level_ids) - 1):
            for inst in per_level[d]:
                if rng.random() < ragged_rate:
                    if d + 2 < len(level_ids) and rng.random() < 0.5:
                        # skip one level upward
                        target_level = d + 2
                        inst["parent"] = (level_ids[target_level], rng.choice(names[target_level]))
                    # else: no parent at all (chain ends early)
                else:
                    inst["parent"] = (level_ids[d + 1], rng.choice(names[d + 1]))
        dim_meta.append(
            {
                "id": dim,
                "path": f"dims/{dim}.xml",
                "levels": [
                    {
                        "id": level_id,
                        "depth": d,
                        "attributes": [
                            ("name", "string", True),
                            ("w", "integer"),
                            ("one", "integer"),
                        ],
                    }
                    for d, level_id in enumerate(level_ids, start=1)
                ],
            }
        )
        dim_docs[f"dims/{dim}.xml"] = _dimension_xml(
            dim, list(zip(level_ids, per_level))
        )
        members_by_leveldepth[dim] = names

    facts = []
    for _ in range(n_facts):
        refs = {}
        for dim in dim_ids:
            if rng.random() < missing_rate:
                continue
            levels = members_by_leveldepth[dim]
            pick = 0
            if len(levels) > 1 and rng.random() < coarse_ref_rate:
                pick = rng.randrange(1, len(levels))
            refs[dim] = rng.choice(levels[pick])
        facts.append(
            {
                "measures": {
                    "qty": rng.randint(0, 100),
                    "price": Decimal(rng.randint(0, 400)) / 4,
                },
                "refs": refs,
            }
        )

    model = _model_xml(
        dimensions=dim_meta,
        facts=[
            {
                "id": "events",
                "path": "facts.xml",
                "measures": [("qty", "integer", "sum"), ("price", "decimal", "sum")],
                "dimensions": dim_ids,
            }
        ],
    )
    files = {"dw-model.xml": model, "facts.xml": _facts_xml("events", facts)}
    files.update(dim_docs)
    return files


def write_files(files: dict[str, str], target: str | Path) -> None:
    target = Path(target)
    for rel, text in files.items():
        path = target / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
