"""Command-line entry point.

Subcommands: validate, query, compile, gen-sample, serve. Standard output
carries only payload; diagnostics go to standard error. Exit codes: 0 clean,
1 integrity/pipeline problems, 2 malformed or missing input, 3 no external
processor configured for --run.
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from . import olap, pipeline, render, sample, xquery
from .errors import (
    IntegrityError,
    MalformedXml,
    MissingDocument,
    PipelineError,
    ProcessorUnavailable,
    SchemaViolation,
    XolapError,
)
from .store import check_integrity, load_warehouse
from .xmlio import XML_DECLARATION


def _load(directory: str):
    return load_warehouse(Path(directory))


def cmd_validate(args) -> int:
    try:
        instance = _load(args.warehouse)
    except (MalformedXml, MissingDocument) as exc:
        print(exc, file=sys.stderr)
        return 2
    except (SchemaViolation, IntegrityError) as exc:
        print(exc, file=sys.stderr)
        return 1
    problems = check_integrity(instance)
    for diagnostic in problems:
        print(diagnostic, file=sys.stderr)
    return 1 if problems else 0


def _load_for_query(args):
    try:
        instance = _load(args.warehouse)
        ops = pipeline.parse_pipeline(Path(args.pipeline).read_text(encoding="utf-8"))
        return instance, ops, None
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return None, None, 2
    except (MalformedXml, MissingDocument) as exc:
        print(exc, file=sys.stderr)
        return None, None, 2
    except XolapError as exc:
        print(exc, file=sys.stderr)
        return None, None, 1


def cmd_query(args) -> int:
    instance, ops, status = _load_for_query(args)
    if status is not None:
        return status
    try:
        view = pipeline.run_pipeline(instance, ops)
    except XolapError as exc:
        print(exc, file=sys.stderr)
        return 1
    sys.stdout.write(render.serialize_view(view, args.format))
    return 0


def cmd_compile(args) -> int:
    instance, ops, status = _load_for_query(args)
    if status is not None:
        return status
    try:
        state = pipeline.apply_pipeline(instance, ops)
        generated = xquery.compile_query(state, instance.schema, args.dialect)
    except XolapError as exc:
        print(exc, file=sys.stderr)
        return 1
    if not args.run:
        sys.stdout.write(generated.text)
        return 0
    try:
        cells = xquery.run_external(generated, base_dir=instance.schema.base_dir)
    except ProcessorUnavailable as exc:
        print(exc, file=sys.stderr)
        return 3
    except XolapError as exc:
        print(exc, file=sys.stderr)
        return 1
    sys.stdout.write(_cells_to_xml(cells))
    return 0


def _cells_to_xml(cells) -> str:
    # re-serialize an external cell set in the native result shape
    from .model import canon_number

    lines = [XML_DECLARATION]
    if not cells:
        lines.append("<result/>")
        return "\n".join(lines) + "\n"
    lines.append("<result>")
    for coords, measures in sorted(cells.items()):
        lines.append("  <cell>")
        for dimension, level, member in coords:
            level_attr = "" if level is None else f' level="{level}"'
            lines.append(f'    <coord dimension="{dimension}"{level_attr} member="{member}"/>')
        for name in sorted(measures):
            lines.append(f'    <measure name="{name}" value="{canon_number(measures[name])}"/>')
        lines.append("  </cell>")
    lines.append("</result>")
    return "\n".join(lines) + "\n"


def cmd_gen_sample(args) -> int:
    target = Path(args.target)
    if args.facts is None:
        files = sample.samplewh_files()
    else:
        files = sample.generate_files(seed=args.seed, n_facts=args.facts)
    try:
        sample.write_files(files, target)
    except OSError as exc:
        print(exc, file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    try:
        instance = _load(args.warehouse)
    except XolapError as exc:
        print(exc, file=sys.stderr)
        return 1
    problems = check_integrity(instance)
    if problems:
        for diagnostic in problems:
            print(diagnostic, file=sys.stderr)
        return 1
    try:
        probe = socket.socket()
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as exc:
        print(f"cannot bind port {args.port}: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(instance), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xolap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a warehouse directory for integrity")
    p.add_argument("warehouse")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("query", help="evaluate a pipeline file against a warehouse")
    p.add_argument("warehouse")
    p.add_argument("pipeline")
    p.add_argument("--format", choices=("xml", "csv", "json"), default="xml")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("compile", help="compile a pipeline to XQuery text")
    p.add_argument("warehouse")
    p.add_argument("pipeline")
    p.add_argument("--dialect", choices=("xq31", "xq10"), default="xq31")
    p.add_argument("--run", action="store_true", help="execute via the configured processor")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("gen-sample", help="write a sample warehouse")
    p.add_argument("target")
    p.add_argument("--facts", type=int, default=None, help="random warehouse with this many facts")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen_sample)

    p = sub.add_parser("serve", help="serve the HTTP query API")
    p.add_argument("warehouse")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PipelineError as exc:
        print(exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
