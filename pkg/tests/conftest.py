import os
import shutil
from pathlib import Path

import pytest

from xolap import olap, sample, store, xquery
from xolap.errors import XolapError

REPO_ROOT = Path(__file__).resolve().parent.parent
XQ_RUNNER = REPO_ROOT / "tools" / "xq-runner"


@pytest.fixture(scope="session")
def samplewh_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("samplewh")
    sample.write_files(sample.samplewh_files(), d)
    return d


@pytest.fixture(scope="session")
def samplewh(samplewh_dir):
    return store.load_warehouse(samplewh_dir)


@pytest.fixture(scope="session")
def xquery_cmd():
    """The external processor command template, or None when unconfigured.

    An explicitly set XOLAP_XQUERY_CMD wins; otherwise the bundled
    fontoxpath runner is used when its npm dependencies are installed.
    """
    cmd = os.environ.get(xquery.PROCESSOR_ENV)
    if cmd:
        return cmd
    if shutil.which("node") and (XQ_RUNNER / "node_modules").is_dir():
        return f"node {XQ_RUNNER / 'runner.mjs'} {{query_file}} {{base_dir}}"
    return None


@pytest.fixture(scope="session")
def dialect_support(xquery_cmd, samplewh_dir, samplewh):
    """Which dialects the configured processor can actually execute.

    Probed with a trivial query per dialect; e.g. the bundled fontoxpath
    runner executes xq10 but lacks the FLWOR group-by needed for xq31.
    """
    if xquery_cmd is None:
        return {}
    support = {}
    # the probe must exercise grouping; a zero-axis query would not
    state = olap.base(samplewh, "sales", [("date", "day")])
    for dialect in xquery.DIALECTS:
        generated = xquery.compile_query(state, samplewh.schema, dialect)
        try:
            xquery.run_external(generated, samplewh_dir, command=xquery_cmd)
            support[dialect] = True
        except XolapError:
            support[dialect] = False
    return support


def require_dialect(dialect_support, dialect):
    if not dialect_support:
        pytest.skip("no external XQuery processor configured")
    if not dialect_support.get(dialect):
        pytest.skip(f"configured processor cannot execute dialect {dialect}")
