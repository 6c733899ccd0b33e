"""HTTP facade: dataset upload, build status, query execution, guidance.

All endpoints are versioned under /v1 and stateless given a dataset id;
dataset ids are content hashes so identical uploads are idempotent. Query
and guidance responses are canonical JSON (sorted keys, compact separators)
so the CLI can emit byte-identical output.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import threading
from dataclasses import dataclass

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from . import datamodel, matcher, preprocess, querymodel, recommender
from .datamodel import PreprocessParams
from .errors import (
    DataError,
    FocusUnresolved,
    IndexUnavailable,
    QueryCancelled,
    RelaqError,
    SchemaViolation,
)
from .matcher import QueryValidationError

DEFAULT_QUERY_TIMEOUT = 30.0


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _json_response(obj, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json(obj),
        status_code=status_code,
        media_type="application/json",
    )


def _error(status_code: int, error: str, detail: str, **extra) -> Response:
    return _json_response({"error": error, "detail": detail, **extra}, status_code)


@dataclass
class DatasetEntry:
    id: str
    artifacts: preprocess.ArtifactSet
    params: PreprocessParams


def dataset_id(data: bytes, config: bytes, params: PreprocessParams) -> str:
    h = hashlib.sha256()
    h.update(data)
    h.update(b"\x00")
    h.update(config)
    h.update(
        f"\x00{params.sampling_length}:{params.box_length}:{params.alphabet_size}".encode()
    )
    return h.hexdigest()[:16]


def _status_payload(entry: DatasetEntry) -> dict:
    return {
        name: {"state": s.state, "elapsed": s.elapsed}
        for name, s in entry.artifacts.status().items()
    }


def _handle_payload(entry: DatasetEntry) -> dict:
    return {
        "id": entry.id,
        "params": {
            "sampling_length": entry.params.sampling_length,
            "box_length": entry.params.box_length,
            "alphabet_size": entry.params.alphabet_size,
        },
        "status": _status_payload(entry),
    }


def create_app(
    budget_seconds: float = preprocess.DEFAULT_BUDGET_SECONDS,
    query_timeout: float = DEFAULT_QUERY_TIMEOUT,
    build_delay=None,
) -> FastAPI:
    app = FastAPI(title="relaq", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry: dict[str, DatasetEntry] = {}
    app.state.registry = registry

    @app.post("/v1/datasets", status_code=201)
    async def upload_dataset(
        data: UploadFile = File(...),
        config: UploadFile = File(...),
        sampling_length: int = Form(...),
        box_length: int = Form(...),
        step_unit: str = Form("sample"),
    ):
        data_bytes = await data.read()
        config_bytes = await config.read()
        try:
            params = PreprocessParams(
                sampling_length=sampling_length, box_length=box_length
            )
        except ValueError as exc:
            return _error(400, "InvalidParams", str(exc))
        entry_id = dataset_id(data_bytes, config_bytes, params)
        if entry_id in registry:
            return _json_response(_handle_payload(registry[entry_id]), 201)
        try:
            dataset = datamodel.parse_dataset(
                data_bytes.decode("utf-8"), step_unit=step_unit
            )
            labels = datamodel.parse_config(config_bytes.decode("utf-8"))
        except DataError as exc:
            return _error(400, type(exc).__name__, str(exc), row=exc.row)
        diagnostics = datamodel.validate(dataset, labels)
        errors = [d for d in diagnostics if d.is_error]
        if errors:
            return _error(
                400,
                "InvalidDataset",
                "; ".join(str(d) for d in errors),
                diagnostics=[
                    {"code": d.code, "message": d.message, "severity": d.severity}
                    for d in diagnostics
                ],
            )
        try:
            artifacts = preprocess.preprocess(
                dataset,
                labels,
                params,
                budget_seconds=budget_seconds,
                build_delay=build_delay,
            )
        except RelaqError as exc:
            return _error(400, type(exc).__name__, str(exc))
        except ValueError as exc:
            return _error(400, "InvalidParams", str(exc))
        entry = DatasetEntry(id=entry_id, artifacts=artifacts, params=params)
        registry[entry_id] = entry
        return _json_response(_handle_payload(entry), 201)

    @app.get("/v1/datasets/{entry_id}/status")
    async def dataset_status(entry_id: str):
        entry = registry.get(entry_id)
        if entry is None:
            return _error(404, "UnknownDataset", f"no dataset {entry_id!r}")
        return _json_response(_status_payload(entry))

    @app.post("/v1/datasets/{entry_id}/queries")
    async def run_query(entry_id: str, request: Request):
        entry = registry.get(entry_id)
        if entry is None:
            return _error(404, "UnknownDataset", f"no dataset {entry_id!r}")
        try:
            query = querymodel.parse_query(await request.body())
        except SchemaViolation as exc:
            return _error(400, "SchemaViolation", str(exc), path=exc.path)

        cancel = threading.Event()
        loop = asyncio.get_running_loop()
        future = loop.run_in_executor(
            None,
            lambda: matcher.execute_query(
                query, entry.artifacts, cancel=cancel, timeout=query_timeout
            ),
        )
        while True:
            done, _ = await asyncio.wait({future}, timeout=0.05)
            if done:
                break
            if await request.is_disconnected():
                cancel.set()
                try:
                    await future
                except Exception:
                    pass
                return Response(status_code=499)
        try:
            outcome = future.result()
        except QueryValidationError as exc:
            return _error(
                400,
                "InvalidQuery",
                str(exc),
                diagnostics=[
                    {"code": d.code, "message": d.message, "severity": d.severity}
                    for d in exc.diagnostics
                ],
            )
        except QueryCancelled:
            return Response(status_code=499)
        except IndexUnavailable as exc:
            return _error(503, "IndexUnavailable", str(exc))
        return _json_response(
            matcher.outcome_to_dict(outcome, query, entry.artifacts)
        )

    @app.post("/v1/datasets/{entry_id}/guidance")
    async def guidance(entry_id: str, request: Request):
        entry = registry.get(entry_id)
        if entry is None:
            return _error(404, "UnknownDataset", f"no dataset {entry_id!r}")
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, "SchemaViolation", f"invalid JSON: {exc}")
        if not isinstance(body, dict) or "query" not in body or "focus" not in body:
            return _error(400, "SchemaViolation", "body needs 'query' and 'focus'")
        try:
            query = querymodel.parse_query(body["query"])
        except SchemaViolation as exc:
            return _error(400, "SchemaViolation", str(exc), path=exc.path)
        focus = str(body["focus"])
        try:
            matrix = await asyncio.get_running_loop().run_in_executor(
                None, lambda: recommender.recommend(focus, query, entry.artifacts)
            )
        except FocusUnresolved as exc:
            return _error(409, "FocusUnresolved", str(exc))
        except QueryValidationError as exc:
            return _error(400, "InvalidQuery", str(exc))
        except IndexUnavailable as exc:
            return _error(503, "IndexUnavailable", str(exc))
        return _json_response(recommender.matrix_to_dict(matrix, query))

    @app.get("/v1/datasets/{entry_id}/series/{name}/trend-suggestions")
    async def trend_suggestions(entry_id: str, name: str, prefix: str = ""):
        entry = registry.get(entry_id)
        if entry is None:
            return _error(404, "UnknownDataset", f"no dataset {entry_id!r}")
        if name not in entry.artifacts.series:
            return _error(404, "UnknownSeries", f"no series {name!r}")
        suggestions = preprocess.suggest_next_symbols(
            entry.artifacts.trie, prefix
        )
        return _json_response(
            {
                "prefix": prefix,
                "suggestions": [
                    {"symbol": symbol, "ratio": ratio} for symbol, ratio in suggestions
                ],
            }
        )

    return app


def main(host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)
