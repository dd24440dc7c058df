"""HTTP service wrapping the core library.

Endpoints mirror the CLI subcommands one-to-one: generate a synthetic
database, train/persist a pairwise model, run a single search, run a full
evaluation. Library errors surface as HTTP 422 with a stable error_code.
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import CloudTunerError, ParseError
from ..evalharness import EvalConfig, evaluate, normalized_performance, report_to_csv, report_to_json
from ..pairmodel import ModelParams, build_training_set, dump_model, parse_model, train
from ..perfdb import (
    CloudConfig,
    Objective,
    default_space,
    format_database,
    format_space,
    optimal,
    parse_database,
    parse_space,
)
from ..searchers import Method, ScoutParams, bo_search, coordinate_descent, random_search, scout_search
from ..synthgen import generate_database, parse_gen_params
from .schemas import (
    EvalRequest,
    EvalResponse,
    GenRequest,
    GenResponse,
    HealthResponse,
    SearchRequest,
    SearchResponse,
    TrainRequest,
    TrainResponse,
)


def _space_from(space_csv: str | None):
    return default_space() if space_csv is None else parse_space(space_csv)


def _objective(name: str) -> Objective:
    try:
        return Objective(name)
    except ValueError as exc:
        raise ParseError(f"unknown objective {name!r}") from exc


def create_app() -> FastAPI:
    app = FastAPI(title="cloudtuner", version=__version__)

    @app.exception_handler(CloudTunerError)
    async def _handle_library_error(request: Request, exc: CloudTunerError):
        return JSONResponse(
            status_code=422, content={"error_code": exc.code, "message": str(exc)}
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=GenResponse)
    def generate(req: GenRequest) -> GenResponse:
        space = _space_from(req.space_csv)
        params = parse_gen_params(req.params_text)
        db = generate_database(params, space)
        return GenResponse(
            db_csv=format_database(db),
            space_csv=format_space(space),
            n_workloads=len(db.workload_ids()),
            n_configs=len(space),
        )

    @app.post("/train", response_model=TrainResponse)
    def train_model(req: TrainRequest) -> TrainResponse:
        space = _space_from(req.space_csv)
        db = parse_database(req.db_csv, space)
        samples = build_training_set(
            db,
            exclude_workload=req.exclude_workload,
            obj=_objective(req.objective),
            max_pairs_per_workload=req.max_pairs_per_workload,
            seed=req.seed,
        )
        model = train(
            samples,
            ModelParams(
                n_trees=req.n_trees,
                min_leaf=req.min_leaf,
                max_features=req.max_features,
                seed=req.seed,
            ),
        )
        return TrainResponse(
            model_b64=base64.b64encode(dump_model(model)).decode("ascii"),
            n_samples=len(samples),
            feature_dim=model.dim,
            constant=model.is_constant,
        )

    @app.post("/search", response_model=SearchResponse)
    def search(req: SearchRequest) -> SearchResponse:
        space = _space_from(req.space_csv)
        db = parse_database(req.db_csv, space)
        obj = _objective(req.objective)
        method = Method(req.method)
        if method is Method.SCOUT:
            if req.model_b64 is not None:
                model = parse_model(base64.b64decode(req.model_b64))
            elif req.train_exclude_self:
                samples = build_training_set(
                    db,
                    exclude_workload=req.workload_id,
                    obj=obj,
                    max_pairs_per_workload=req.max_pairs_per_workload,
                    seed=req.seed,
                )
                model = train(samples, ModelParams(seed=req.seed))
            else:
                raise ParseError("scout needs either a model or train_exclude_self")
            start = CloudConfig.parse(req.start) if req.start else None
            trace = scout_search(
                model, db, req.workload_id, obj, ScoutParams(alpha=req.alpha, beta=req.beta, start=start)
            )
        elif method is Method.RANDOM_K:
            trace = random_search(db, req.workload_id, obj, k=req.k, seed=req.seed)
        elif method is Method.COORD_DESCENT:
            start = CloudConfig.parse(req.start) if req.start else space.midpoint()
            trace = coordinate_descent(db, req.workload_id, obj, start=start, seed=req.seed)
        else:
            trace = bo_search(
                db, req.workload_id, obj, n_init=req.n_init, ei_stop=req.ei_stop, seed=req.seed
            )
        _, opt_value = optimal(db, req.workload_id, obj)
        return SearchResponse(
            trace=trace.to_dict(),
            optimal_value=opt_value,
            normalized_perf=normalized_performance(trace.best[1], opt_value),
        )

    @app.post("/evaluate", response_model=EvalResponse)
    def run_eval(req: EvalRequest) -> EvalResponse:
        space = _space_from(req.space_csv)
        db = parse_database(req.db_csv, space)
        cfg = EvalConfig.from_dict(req.eval_config)
        if req.format not in ("json", "csv"):
            raise ParseError(f"format must be json or csv, got {req.format!r}")
        report = evaluate(db, cfg, threads=req.threads)
        rendered = report_to_json(report) if req.format == "json" else report_to_csv(report)
        return EvalResponse(report=report.to_dict(), rendered=rendered)

    return app
