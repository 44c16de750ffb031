"""HTTP service exposing synthesis and evaluation to the companion UI.

Endpoints:
  POST /api/synthesize  {tables: {id: csv-text}, demo: <demo JSON>, config?}
                        -> synthesis report (same JSON as the CLI's --json)
  POST /api/eval        {tables, query, prov?} -> table JSON
  GET  /api/functions   -> the closed function vocabulary
  GET  /healthz         -> {"status": "ok"}

Every request runs one bounded synthesis job in-process; the service keeps
no state between requests.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .abstraction import PrunerKind
from .engine import eval_prov, eval_query
from .exprs import (AGG_FNS, ANA_FNS, ARITH_FNS, ExprError, check_demo_refs,
                    demo_from_json)
from .queries import QueryError, query_from_json
from .reporting import prov_table_to_json, report_json_text, table_to_json
from .synth import SynthConfig, synthesize
from .tables import TableError, parse_table

MAX_TIMEOUT = 600.0
PRUNERS = {k.value: k for k in PrunerKind}

app = FastAPI(title="provsynth", version="0.1.0")
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


def _bad(status: int, detail: str) -> HTTPException:
    return HTTPException(status_code=status, detail=detail)


def _parse_tables(payload: dict) -> dict:
    tables = payload.get("tables")
    if not isinstance(tables, dict) or not tables:
        raise _bad(400, "payload needs a non-empty 'tables' object "
                        "mapping table ids to CSV text")
    try:
        return {tid: parse_table(text, tid) for tid, text in tables.items()}
    except (TableError, AttributeError, TypeError) as exc:
        raise _bad(400, f"bad table: {exc}")


def _parse_config(payload: dict) -> SynthConfig:
    raw = payload.get("config") or {}
    if not isinstance(raw, dict):
        raise _bad(400, "'config' must be an object")
    try:
        pruner = PRUNERS[raw.get("pruner", "provenance")]
        return SynthConfig(
            depth=int(raw.get("depth", 3)),
            limit=int(raw.get("limit", 10)),
            timeout=min(float(raw.get("timeout", MAX_TIMEOUT)), MAX_TIMEOUT),
            pruner=pruner,
            seed=int(raw.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise _bad(400, f"bad config: {exc}")


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise _bad(400, "request body must be JSON")
    if not isinstance(payload, dict):
        raise _bad(400, "request body must be a JSON object")
    return payload


@app.post("/api/synthesize")
async def synthesize_endpoint(request: Request) -> Response:
    payload = await _json_body(request)
    inputs = _parse_tables(payload)
    if "demo" not in payload:
        raise _bad(400, "payload needs a 'demo' field")
    try:
        demo = demo_from_json(payload["demo"])
    except ExprError as exc:
        raise _bad(400, f"bad demonstration: {exc}")
    try:
        check_demo_refs(demo, inputs)
    except TableError as exc:
        raise _bad(422, f"unresolvable reference: {exc}")
    config = _parse_config(payload)
    report = synthesize(inputs, demo, config)
    base_names = {t.id: t.column_names for t in inputs.values()}
    body = report_json_text(report, base_names)
    status = 504 if report.timed_out and not report.solutions else 200
    return Response(content=body, status_code=status,
                    media_type="application/json")


@app.post("/api/eval")
async def eval_endpoint(request: Request) -> JSONResponse:
    payload = await _json_body(request)
    inputs = _parse_tables(payload)
    if "query" not in payload:
        raise _bad(400, "payload needs a 'query' field")
    try:
        q = query_from_json(payload["query"])
    except QueryError as exc:
        raise _bad(400, f"bad query: {exc}")
    try:
        if payload.get("prov"):
            return JSONResponse(prov_table_to_json(eval_prov(q, inputs)))
        return JSONResponse(table_to_json(eval_query(q, inputs)))
    except (QueryError, TableError, ExprError) as exc:
        raise _bad(422, f"evaluation failed: {exc}")


@app.get("/api/functions")
async def functions_endpoint() -> JSONResponse:
    return JSONResponse({
        "aggregate": list(AGG_FNS),
        "analytical": list(ANA_FNS),
        "arithmetic": list(ARITH_FNS),
    })


@app.get("/healthz")
async def healthz() -> JSONResponse:
    return JSONResponse({"status": "ok"})
