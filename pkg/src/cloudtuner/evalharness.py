"""Leave-one-workload-out replay evaluation.

For each workload, a pairwise model is trained on every other workload and
reused across repeats; each (method, repeat) runs one seeded search against
the replay database. Results are pooled into nearest-rank percentile and mean
aggregates, plus the fraction of runs ending within 10% of the optimum.
Reports are designed to be byte-stable: identical inputs (and any thread
count) produce identical JSON documents.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyList, InvalidValues, IoError, ParseError, TooFewWorkloads, TraceTooShort
from .featurize import nearest_rank_percentile
from .pairmodel import ModelParams, build_training_set, train
from .perfdb import CloudConfig, Objective, PerfDatabase, optimal
from .searchers import (
    Method,
    ScoutParams,
    SearchTrace,
    bo_search,
    convergence_speed,
    coordinate_descent,
    default_beta,
    random_search,
    scout_search,
)
from .seeding import derive_seed


def normalized_performance(best_value: float, optimal_value: float) -> float:
    """best/optimal; 1.0 means the exhaustive optimum was found."""
    if not (best_value > 0 and optimal_value > 0):
        raise InvalidValues(f"values must be positive, got {best_value} and {optimal_value}")
    if best_value < optimal_value:
        raise InvalidValues(
            f"best value {best_value} beats the exhaustive optimum {optimal_value}"
        )
    return best_value / optimal_value


def percentile(values, p: float) -> float:
    """Nearest-rank percentile of a non-empty list."""
    values = list(values)
    if not values:
        raise EmptyList("percentile of an empty list")
    if not 0.0 <= p <= 100.0:
        raise InvalidValues(f"percentile must be in [0, 100], got {p}")
    return nearest_rank_percentile(values, p)


@dataclass(frozen=True)
class MethodSpec:
    """One comparison method plus its parameters.

    kinds: scout {alpha, beta, start_policy in (midpoint, random)},
    random {k}, coordinate_descent {}, bayesopt {n_init, ei_stop}.
    """

    kind: Method
    params: dict = field(default_factory=dict)

    def label(self) -> str:
        if not self.params:
            return self.kind.value
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.kind.value}({inner})"

    @staticmethod
    def from_dict(data: dict) -> "MethodSpec":
        try:
            kind = Method(data["name"])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad method spec {data!r}: {exc}") from exc
        return MethodSpec(kind=kind, params=dict(data.get("params", {})))


@dataclass(frozen=True)
class EvalConfig:
    methods: tuple[MethodSpec, ...]
    objective: Objective = Objective.TIME
    repeats: int = 100
    master_seed: int = 0
    max_pairs_per_workload: int | None = None
    model: ModelParams = ModelParams()

    def __post_init__(self):
        if self.repeats < 1:
            raise InvalidValues(f"repeats must be >= 1, got {self.repeats}")
        if not self.methods:
            raise InvalidValues("at least one method is required")

    @staticmethod
    def from_dict(data: dict) -> "EvalConfig":
        methods = tuple(MethodSpec.from_dict(m) for m in data.get("methods", []))
        model_overrides = data.get("model", {})
        kwargs = {}
        if "objective" in data:
            kwargs["objective"] = Objective(data["objective"])
        for key in ("repeats", "master_seed", "max_pairs_per_workload"):
            if key in data:
                kwargs[key] = data[key]
        return EvalConfig(methods=methods, model=ModelParams(**model_overrides), **kwargs)


@dataclass(frozen=True)
class RunRecord:
    seed: int
    normalized_perf: float
    steps: int
    stop_reason: str
    convergence_speed: float | None


@dataclass(frozen=True)
class WorkloadRuns:
    workload_id: str
    runs: tuple[RunRecord, ...]

    def median_normalized_perf(self) -> float:
        return percentile([r.normalized_perf for r in self.runs], 50.0)


@dataclass(frozen=True)
class Aggregates:
    normalized_perf: dict[str, float]
    steps: dict[str, float]
    frac_within_10pct: float


@dataclass(frozen=True)
class MethodReport:
    spec: MethodSpec
    per_workload: tuple[WorkloadRuns, ...]
    aggregates: Aggregates


@dataclass(frozen=True)
class EvalReport:
    space_summary: dict
    objective: Objective
    methods: tuple[MethodReport, ...]

    def method_report(self, kind: Method) -> MethodReport:
        for m in self.methods:
            if m.spec.kind is kind:
                return m
        raise KeyError(kind)

    def to_dict(self) -> dict:
        return {
            "space": self.space_summary,
            "objective": self.objective.value,
            "methods": [
                {
                    "name": m.spec.kind.value,
                    "params": {k: m.spec.params[k] for k in sorted(m.spec.params)},
                    "per_workload": [
                        {
                            "workload_id": w.workload_id,
                            "median_normalized_perf": w.median_normalized_perf(),
                            "runs": [
                                {
                                    "seed": r.seed,
                                    "normalized_perf": r.normalized_perf,
                                    "steps": r.steps,
                                    "stop_reason": r.stop_reason,
                                    "convergence_speed": r.convergence_speed,
                                }
                                for r in w.runs
                            ],
                        }
                        for w in m.per_workload
                    ],
                    "aggregates": {
                        "normalized_perf": m.aggregates.normalized_perf,
                        "steps": m.aggregates.steps,
                        "frac_within_10pct": m.aggregates.frac_within_10pct,
                    },
                }
                for m in self.methods
            ],
        }


def _summary_stats(values: list[float]) -> dict[str, float]:
    return {
        "mean": float(sum(values) / len(values)),
        "p10": percentile(values, 10.0),
        "p50": percentile(values, 50.0),
        "p90": percentile(values, 90.0),
    }


def _pick_start(space, policy: str, rng_seed: int) -> CloudConfig:
    if policy == "midpoint":
        return space.midpoint()
    if policy == "random":
        idx = int(np.random.default_rng(rng_seed).integers(0, len(space)))
        return space.configs[idx]
    raise InvalidValues(f"unknown start policy {policy!r}")


def _run_method(
    db: PerfDatabase,
    workload_id: str,
    obj: Objective,
    spec: MethodSpec,
    model,
    run_seed: int,
) -> SearchTrace:
    p = spec.params
    if spec.kind is Method.SCOUT:
        start_policy = p.get("start_policy", "midpoint")
        start = _pick_start(db.space, start_policy, derive_seed(run_seed, "start"))
        params = ScoutParams(
            alpha=p.get("alpha", 0.5), beta=p.get("beta", default_beta(db.space)), start=start
        )
        return scout_search(model, db, workload_id, obj, params)
    if spec.kind is Method.RANDOM_K:
        return random_search(db, workload_id, obj, k=p.get("k", 6), seed=run_seed)
    if spec.kind is Method.COORD_DESCENT:
        start = _pick_start(db.space, p.get("start_policy", "random"), derive_seed(run_seed, "start"))
        return coordinate_descent(db, workload_id, obj, start=start, seed=run_seed)
    if spec.kind is Method.BAYES_OPT:
        return bo_search(
            db,
            workload_id,
            obj,
            n_init=p.get("n_init", 3),
            ei_stop=p.get("ei_stop", 0.10),
            seed=run_seed,
        )
    raise InvalidValues(f"unknown method {spec.kind}")


def _evaluate_workload(db: PerfDatabase, cfg: EvalConfig, workload_id: str, model_factory):
    """All runs for one held-out workload; returns {method label -> [RunRecord]}."""
    needs_model = any(spec.kind is Method.SCOUT for spec in cfg.methods)
    model = None
    if needs_model:
        if model_factory is not None:
            model = model_factory(db, workload_id, cfg.objective)
        else:
            samples = build_training_set(
                db,
                exclude_workload=workload_id,
                obj=cfg.objective,
                max_pairs_per_workload=cfg.max_pairs_per_workload,
                seed=derive_seed(cfg.master_seed, "pairs", workload_id),
            )
            params = ModelParams(
                n_trees=cfg.model.n_trees,
                min_leaf=cfg.model.min_leaf,
                max_features=cfg.model.max_features,
                seed=derive_seed(cfg.master_seed, "train", workload_id),
            )
            model = train(samples, params)
    _, opt_value = optimal(db, workload_id, cfg.objective)
    results: dict[str, list[RunRecord]] = {}
    for spec in cfg.methods:
        records = []
        for repeat in range(cfg.repeats):
            run_seed = derive_seed(cfg.master_seed, workload_id, spec.label(), repeat)
            trace = _run_method(db, workload_id, cfg.objective, spec, model, run_seed)
            try:
                speed = convergence_speed(trace)
            except TraceTooShort:
                speed = None
            records.append(
                RunRecord(
                    seed=run_seed,
                    normalized_perf=normalized_performance(trace.best[1], opt_value),
                    steps=len(trace.steps),
                    stop_reason=trace.stop_reason.value,
                    convergence_speed=speed,
                )
            )
        results[spec.label()] = records
    return results


def evaluate(
    db: PerfDatabase, cfg: EvalConfig, threads: int = 1, model_factory=None
) -> EvalReport:
    """Run the full leave-one-workload-out comparison.

    model_factory(db, held_out_workload, objective) -> model is a test hook
    replacing the trained pairwise model (e.g. with the replay oracle).
    """
    workloads = db.workload_ids()
    needs_model = any(spec.kind is Method.SCOUT for spec in cfg.methods)
    if needs_model and len(workloads) < 2 and model_factory is None:
        raise TooFewWorkloads("leave-one-out training needs at least 2 workloads")
    if not workloads:
        raise TooFewWorkloads("the database contains no workloads")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                wid: pool.submit(_evaluate_workload, db, cfg, wid, model_factory)
                for wid in workloads
            }
            per_workload_results = {wid: fut.result() for wid, fut in futures.items()}
    else:
        per_workload_results = {
            wid: _evaluate_workload(db, cfg, wid, model_factory) for wid in workloads
        }

    method_reports = []
    for spec in cfg.methods:
        per_workload = tuple(
            WorkloadRuns(workload_id=wid, runs=tuple(per_workload_results[wid][spec.label()]))
            for wid in workloads
        )
        all_runs = [r for w in per_workload for r in w.runs]
        perfs = [r.normalized_perf for r in all_runs]
        steps = [float(r.steps) for r in all_runs]
        aggregates = Aggregates(
            normalized_perf=_summary_stats(perfs),
            steps=_summary_stats(steps),
            frac_within_10pct=float(sum(1 for p in perfs if p < 1.1) / len(perfs)),
        )
        method_reports.append(
            MethodReport(spec=spec, per_workload=per_workload, aggregates=aggregates)
        )

    grouped: dict[tuple, list[int]] = {}
    for c in db.space.configs:
        grouped.setdefault((c.family.value, c.size.value), []).append(c.node_count)
    space_summary = {
        "n_configs": len(db.space),
        "instance_types": [
            {"family": fam, "size": size, "node_counts": counts}
            for (fam, size), counts in grouped.items()
        ],
        "metric_dim": db.metric_dim,
        "n_workloads": len(workloads),
    }
    return EvalReport(
        space_summary=space_summary, objective=cfg.objective, methods=tuple(method_reports)
    )


# --- report emission ---------------------------------------------------------


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_to_csv(report: EvalReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["workload_id", "method", "run_index", "seed", "normalized_perf", "steps", "stop_reason", "convergence_speed"]
    )
    for m in report.methods:
        for w in m.per_workload:
            for i, r in enumerate(w.runs):
                writer.writerow(
                    [
                        w.workload_id,
                        m.spec.label(),
                        i,
                        r.seed,
                        repr(r.normalized_perf),
                        r.steps,
                        r.stop_reason,
                        "" if r.convergence_speed is None else repr(r.convergence_speed),
                    ]
                )
    writer.writerow([])
    writer.writerow(["method", "metric", "mean", "p10", "p50", "p90"])
    for m in report.methods:
        a = m.aggregates
        writer.writerow(
            ["%s" % m.spec.label(), "normalized_perf"]
            + [repr(a.normalized_perf[k]) for k in ("mean", "p10", "p50", "p90")]
        )
        writer.writerow(
            ["%s" % m.spec.label(), "steps"] + [repr(a.steps[k]) for k in ("mean", "p10", "p50", "p90")]
        )
        writer.writerow(["%s" % m.spec.label(), "frac_within_10pct", repr(a.frac_within_10pct), "", "", ""])
    return out.getvalue()


def emit_report(report: EvalReport, path: str | Path, fmt: str = "json") -> None:
    if fmt not in ("json", "csv"):
        raise InvalidValues(f"format must be json or csv, got {fmt!r}")
    text = report_to_json(report) if fmt == "json" else report_to_csv(report)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc


def parse_report(text: str) -> dict:
    return json.loads(text)


def load_eval_config(path: str | Path) -> EvalConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read eval config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"eval config is not valid JSON: {exc}") from exc
    return EvalConfig.from_dict(data)
