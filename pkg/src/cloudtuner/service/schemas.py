"""Request/response models of the HTTP API.

File-based artifacts (space and database CSVs, persisted models) travel as
strings in the request body, so the service never touches the client's
filesystem and works identically in-process and over the network. Models are
base64 of the versioned binary dump.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class GenRequest(BaseModel):
    params_text: str = Field(description="generator parameters, key=value text")
    space_csv: str | None = Field(default=None, description="space CSV; bundled default when omitted")


class GenResponse(BaseModel):
    db_csv: str
    space_csv: str
    n_workloads: int
    n_configs: int


class TrainRequest(BaseModel):
    db_csv: str
    space_csv: str | None = None
    exclude_workload: str | None = None
    objective: str = "time"
    n_trees: int = 100
    min_leaf: int = 5
    max_features: int | None = None
    seed: int = 0
    max_pairs_per_workload: int | None = None


class TrainResponse(BaseModel):
    model_b64: str
    n_samples: int
    feature_dim: int
    constant: bool


class SearchRequest(BaseModel):
    db_csv: str
    space_csv: str | None = None
    workload_id: str
    method: str = "scout"
    objective: str = "time"
    model_b64: str | None = None
    train_exclude_self: bool = False
    alpha: float = 0.5
    beta: int | None = None
    k: int = 6
    n_init: int = 3
    ei_stop: float = 0.10
    start: str | None = Field(default=None, description="config id like m4.xlarge.8")
    seed: int = 0
    max_pairs_per_workload: int | None = None


class SearchResponse(BaseModel):
    trace: dict
    optimal_value: float
    normalized_perf: float


class EvalRequest(BaseModel):
    db_csv: str
    space_csv: str | None = None
    eval_config: dict
    threads: int = 1
    format: str = "json"


class EvalResponse(BaseModel):
    report: dict
    rendered: str = Field(description="report text in the requested format")


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorPayload(BaseModel):
    error_code: str
    message: str
