"""HTTP JSON facade over a loaded warehouse instance.

The service snapshot is fixed at startup. Every endpoint is read-only and the
instance is immutable, so concurrent requests are safe without locking. Query
responses are produced by the same serializers the CLI uses, byte for byte.
"""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from . import olap, pipeline, render, xquery
from .errors import PipelineError, XolapError
from .model import scalar_to_text
from .store import WarehouseInstance

MEDIA_TYPES = {
    "json": "application/json",
    "xml": "application/xml",
    "csv": "text/csv",
}


def schema_payload(instance: WarehouseInstance) -> dict:
    schema = instance.schema
    return {
        "dimensions": [
            {
                "id": dim.id,
                "document": dim.document_path,
                "levels": [
                    {
                        "id": lvl.id,
                        "depth": lvl.depth,
                        "attributes": [
                            {"name": a.name, "type": a.type, "key": a.key}
                            for a in lvl.attributes
                        ],
                    }
                    for lvl in dim.levels
                ],
            }
            for dim in schema.dimensions
        ],
        "fact_classes": [
            {
                "id": fact.id,
                "document": fact.document_path,
                "measures": [
                    {"name": m.name, "type": m.type, "aggregate": m.aggregate}
                    for m in fact.measures
                ],
                "dimensions": [link.dimension for link in fact.dimension_links],
            }
            for fact in schema.fact_classes
        ],
    }


def _error(status: int, code: str, message: str, op_index=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "op_index": op_index},
    )


def create_app(instance: WarehouseInstance) -> FastAPI:
    app = FastAPI(title="xolap", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.get("/api/schema")
    async def get_schema():
        return schema_payload(instance)

    @app.get("/api/dimensions/{dim_id}/members")
    async def get_members(dim_id: str, level: str = ""):
        try:
            table = instance.dimension_table(dim_id)
            members = table.members_at(level)
        except XolapError as exc:
            return _error(404, exc.code(), str(exc))
        return {
            "dimension": dim_id,
            "level": level,
            "members": [
                {
                    "id": m.member_id,
                    "attributes": {
                        k: v if isinstance(v, (int, str)) else scalar_to_text(v)
                        for k, v in m.attribute_values.items()
                    },
                    "parent": None if m.parent is None else {"level": m.parent[0], "id": m.parent[1]},
                }
                for m in members
            ],
        }

    @app.post("/api/query")
    async def post_query(request: Request, format: str = "json"):
        if format not in MEDIA_TYPES:
            return _error(400, "unknown_format", f"unknown format {format!r}")
        body = await request.body()
        try:
            ops = pipeline.parse_pipeline(body.decode("utf-8"))
            view = pipeline.run_pipeline(instance, ops)
        except PipelineError as exc:
            return _error(400, exc.code(), str(exc), exc.op_index)
        except XolapError as exc:
            return _error(400, exc.code(), str(exc))
        return Response(
            content=render.serialize_view(view, format), media_type=MEDIA_TYPES[format]
        )

    @app.post("/api/compile")
    async def post_compile(request: Request):
        body = await request.body()
        try:
            ops, dialect = pipeline.parse_pipeline_envelope(body.decode("utf-8"))
            state = pipeline.apply_pipeline(instance, ops)
            generated = xquery.compile_query(state, instance.schema, dialect)
        except PipelineError as exc:
            return _error(400, exc.code(), str(exc), exc.op_index)
        except XolapError as exc:
            return _error(400, exc.code(), str(exc))
        return {
            "xquery": generated.text,
            "documents": list(generated.documents),
            "dialect": generated.dialect,
        }

    return app
