"""HTTP facade over prediction, explanation, and portfolio triage.

Model state is loaded once at startup and never mutated, so concurrent
requests are safe and identical requests (including the client-supplied seed)
produce identical responses. All errors use one machine-readable shape:
{code, message, details}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import pipeline
from .attribution import kernel_shap, next_feature_guidance
from .bnn.model import predictive_mean_fn
from .domain import HEADS, BridgeParams
from .inference import Query, predict_full, predict_reduced
from .triage import batch_to_csv, batch_triage, parse_portfolio_csv, triage

DEFAULT_ADDR = "127.0.0.1:8080"


@dataclass(frozen=True)
class ServiceConfig:
    addr: str = DEFAULT_ADDR
    model_dir: str = "models"
    max_body_bytes: int = 1 << 20
    request_timeout_s: float = 30.0
    cors_origins: tuple[str, ...] = field(default_factory=tuple)

    @property
    def host(self) -> str:
        return self.addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.addr.rsplit(":", 1)[1])


def load_service_config(path=None) -> ServiceConfig:
    """Config file merged with BT_ADDR / BT_MODEL_DIR environment overrides."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        allowed = set(ServiceConfig.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValueError(f"unknown service config keys: {', '.join(sorted(unknown))}")
        values.update(raw)
    if os.environ.get("BT_ADDR"):
        values["addr"] = os.environ["BT_ADDR"]
    if os.environ.get("BT_MODEL_DIR"):
        values["model_dir"] = os.environ["BT_MODEL_DIR"]
    if "cors_origins" in values:
        values["cors_origins"] = tuple(values["cors_origins"])
    return ServiceConfig(**values)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details if details is not None else {}

    def response(self) -> JSONResponse:
        return JSONResponse(status_code=self.status, content={
            "code": self.code, "message": self.message, "details": self.details})


class PredictRequest(BaseModel):
    features: dict[str, float]
    seed: int = 0


class ExplainRequest(BaseModel):
    features: dict[str, float]
    head: str
    seed: int = 0
    known: list[str] | None = None
    n_coalitions: int = 2048


def _check_features(features: dict[str, float], schema) -> None:
    if not features:
        raise ApiError(422, "empty_features", "at least one feature is required")
    unknown = sorted(set(features) - set(schema.names))
    if unknown:
        raise ApiError(400, "unknown_features", "unknown feature names",
                       {"features": unknown})
    out_of_range = []
    for name, value in features.items():
        spec = schema.spec(name)
        if not (spec.lo <= float(value) <= spec.hi):
            out_of_range.append({"feature": name, "value": value,
                                 "lo": spec.lo, "hi": spec.hi})
    if out_of_range:
        raise ApiError(400, "out_of_range", "feature values outside the schema ranges",
                       {"violations": out_of_range})


def create_app(config: ServiceConfig) -> FastAPI:
    models, schema = pipeline.load_models(config.model_dir)
    fingerprints = pipeline.model_fingerprints(config.model_dir)
    ranking_doc = pipeline.load_ranking(config.model_dir)
    ranking = list(ranking_doc["ranking"]) if ranking_doc else list(schema.names)
    background = pipeline.load_background(config.model_dir)
    if background is None:
        background = pipeline.background_points(schema, seed=0, n=100)

    app = FastAPI(title="bridgetriage", docs_url=None, redoc_url=None)
    if config.cors_origins:
        app.add_middleware(CORSMiddleware, allow_origins=list(config.cors_origins),
                           allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "code": "invalid_body", "message": "request body failed validation",
            "details": {"errors": json.loads(json.dumps(exc.errors(), default=str))}})

    @app.exception_handler(Exception)
    async def _unhandled(_req: Request, exc: Exception):
        # opaque on purpose: internals never leak past the error id
        error_id = f"e{abs(hash((type(exc).__name__, str(exc)))) % 10**8:08d}"
        return JSONResponse(status_code=500, content={
            "code": "internal_error", "message": "internal error",
            "details": {"error_id": error_id}})

    @app.middleware("http")
    async def _limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > config.max_body_bytes:
            return JSONResponse(status_code=413, content={
                "code": "body_too_large",
                "message": f"request body exceeds {config.max_body_bytes} bytes",
                "details": {}})
        return await call_next(request)

    @app.get("/v1/schema")
    def get_schema():
        return {**schema.to_json_dict(), "ranking": ranking}

    @app.get("/v1/health")
    def get_health():
        return {"status": "ok", "model_fingerprints": fingerprints}

    @app.post("/v1/predict")
    def post_predict(body: PredictRequest):
        _check_features(body.features, schema)
        if len(body.features) == len(schema.names):
            p = BridgeParams.from_dict(body.features)
            preds = predict_full(models, p, seed=body.seed)
            diagnostics = {h: {"between_share": 0.0} for h in HEADS}
            input_mode = "full"
        else:
            q = Query(known=dict(body.features), seed=body.seed, schema=schema)
            preds, diagnostics = predict_reduced(models, q)
            input_mode = "reduced"
        result = triage(preds)
        return {
            "heads": {h: preds[h].to_json_dict() for h in HEADS},
            "triage": result.to_json_dict(),
            "input_mode": input_mode,
            "diagnostics": diagnostics,
        }

    @app.post("/v1/explain")
    def post_explain(body: ExplainRequest):
        if body.head not in HEADS:
            raise ApiError(422, "unknown_head",
                           f"head must be one of {', '.join(HEADS)}",
                           {"head": body.head})
        missing = sorted(set(schema.names) - set(body.features))
        if missing:
            raise ApiError(400, "partial_input",
                           "explanation requires every feature",
                           {"missing": missing})
        _check_features(body.features, schema)
        known = body.known if body.known is not None else []
        bad = sorted(set(known) - set(schema.names))
        if bad:
            raise ApiError(400, "unknown_features", "unknown feature names in known",
                           {"features": bad})
        p = BridgeParams.from_dict(body.features)
        f = predictive_mean_fn(models[body.head], seed=body.seed)
        attr = kernel_shap(f, p, background, n_coalitions=body.n_coalitions,
                           seed=body.seed, head=body.head,
                           feature_names=schema.names)
        return {**attr.to_json_dict(),
                "guidance": next_feature_guidance(known, ranking)}

    @app.post("/v1/triage/batch")
    async def post_triage_batch(request: Request):
        raw = (await request.body()).decode("utf-8", errors="replace")
        try:
            rows = parse_portfolio_csv(raw, schema)
        except ValueError as e:
            raise ApiError(400, "malformed_csv", str(e),
                           {"expected": list(schema.names)}) from e
        params = [BridgeParams.from_dict(r) for r in rows]
        results, counts = batch_triage(params, models, schema=schema)
        return PlainTextResponse(batch_to_csv(results), media_type="text/csv",
                                 headers={"X-Triage-Summary": json.dumps(counts)})

    return app


def run(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port,
                timeout_keep_alive=int(config.request_timeout_s), log_level="info")
