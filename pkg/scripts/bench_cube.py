#!/usr/bin/env python3
"""Cube-evaluation benchmark over a generated warehouse.

Generates a seeded warehouse, loads it, and times a full cube over all
dimension axes at the middle hierarchy level. Prints a one-line summary plus
peak RSS, so regressions show up in plain runs.

    python scripts/bench_cube.py --facts 10000 --seed 606
"""

import argparse
import resource
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from xolap import olap, store  # noqa: E402
from xolap.model import parse_schema  # noqa: E402
from xolap.sample import generate_files  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--facts", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=606)
    parser.add_argument("--members", type=int, default=8)
    args = parser.parse_args()

    t0 = time.perf_counter()
    files = generate_files(
        seed=args.seed,
        n_facts=args.facts,
        n_dims=3,
        min_depth=3,
        max_depth=3,
        members_per_level=args.members,
    )
    t1 = time.perf_counter()
    instance = store.load_instance(parse_schema(files["dw-model.xml"]), files)
    t2 = time.perf_counter()

    fact = instance.schema.fact_classes[0]
    axes = []
    for link in fact.dimension_links:
        spec = instance.schema.dimension(link.dimension)
        middle = next(level.id for level in spec.levels if level.depth == 2)
        axes.append((link.dimension, middle))
    state = olap.base(instance, fact.id, axes).cube([dim for dim, _ in axes])

    t3 = time.perf_counter()
    view = olap.evaluate(instance, state)
    t4 = time.perf_counter()

    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(
        f"facts={args.facts} gen={t1 - t0:.2f}s load={t2 - t1:.2f}s "
        f"cube={t4 - t3:.2f}s cells={len(view.cells)} peak_rss={peak_mb:.0f}MB"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
