#!/usr/bin/env python3
"""Regenerate the committed golden XQuery files from the golden pipelines.

Run from the repository root after an intentional codegen change, inspect the
diff, and commit. The test suite asserts byte equality against these files.
"""

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from xolap import pipeline, sample, store, xquery  # noqa: E402

GOLDENS = ROOT / "tests" / "goldens"


def main() -> int:
    with tempfile.TemporaryDirectory() as td:
        sample.write_files(sample.samplewh_files(), td)
        instance = store.load_warehouse(td)
        out_dir = GOLDENS / "xq"
        out_dir.mkdir(parents=True, exist_ok=True)
        for pipeline_file in sorted((GOLDENS / "pipelines").glob("*.json")):
            ops = json.loads(pipeline_file.read_text(encoding="utf-8"))
            state = pipeline.apply_pipeline(instance, ops)
            for dialect in xquery.DIALECTS:
                generated = xquery.compile_query(state, instance.schema, dialect)
                target = out_dir / f"{pipeline_file.stem}.{dialect}.xq"
                target.write_text(generated.text, encoding="utf-8")
                print(f"wrote {target.relative_to(ROOT)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
