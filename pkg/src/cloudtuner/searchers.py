"""Search strategies over the replay database.

All searchers share the same shape: evaluate configurations one at a time
(via database lookup standing in for a real cloud run), never revisit a
configuration, and return the full trace with a stop reason. Argmax ties
always break by space declaration order, which keeps every method
deterministic given its seed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidValues,
    KTooLarge,
    StartOutsideSpace,
    TraceTooShort,
    UnknownWorkload,
)
from .featurize import space_feature_matrix
from .gp import expected_improvement, fit_gp
from .pairmodel import probability_of_improvement  # noqa: F401  (re-exported for callers)
from .perfdb import CloudConfig, ConfigSpace, Objective, PerfDatabase, lookup, objective_value


class Method(str, enum.Enum):
    SCOUT = "scout"
    RANDOM_K = "random"
    COORD_DESCENT = "coordinate_descent"
    BAYES_OPT = "bayesopt"


class StopReason(str, enum.Enum):
    BELOW_THRESHOLD = "below_threshold"
    MISPREDICTION_LIMIT = "misprediction_limit"
    SPACE_EXHAUSTED = "space_exhausted"
    BUDGET_EXHAUSTED = "budget_exhausted"
    EI_BELOW_THRESHOLD = "ei_below_threshold"
    LOCAL_MINIMUM = "local_minimum"


@dataclass
class SearchState:
    """Bookkeeping of one running search: evaluated/unevaluated split and best."""

    space: ConfigSpace
    evaluated: list[tuple[CloudConfig, float]] = field(default_factory=list)
    unevaluated: set[CloudConfig] = field(default_factory=set)
    best: tuple[CloudConfig, float] | None = None
    miss_count: int = 0

    def __post_init__(self):
        if not self.evaluated and not self.unevaluated:
            self.unevaluated = set(self.space.configs)

    def record(self, cfg: CloudConfig, value: float) -> bool:
        """Mark cfg evaluated; returns True when it improved the best."""
        self.unevaluated.remove(cfg)
        self.evaluated.append((cfg, value))
        improved = self.best is None or value < self.best[1]
        if improved:
            self.best = (cfg, value)
        assert len(self.evaluated) + len(self.unevaluated) == len(self.space)
        return improved

    def unevaluated_in_order(self) -> list[CloudConfig]:
        return [cfg for cfg in self.space.configs if cfg in self.unevaluated]


@dataclass(frozen=True)
class ScoutParams:
    alpha: float = 0.5
    beta: int | None = None  # None -> by space size (<=24 configs: 3, else 4)
    start: CloudConfig | None = None  # None -> space midpoint

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidValues(f"alpha must be in (0, 1], got {self.alpha}")
        if self.beta is not None and self.beta < 1:
            raise InvalidValues(f"beta must be >= 1, got {self.beta}")


def default_beta(space: ConfigSpace) -> int:
    return 3 if len(space) <= 24 else 4


@dataclass(frozen=True)
class SearchTrace:
    workload_id: str
    method: Method
    steps: tuple[tuple[CloudConfig, float], ...]
    best: tuple[CloudConfig, float]
    stop_reason: StopReason

    def __post_init__(self):
        if not self.steps:
            raise InvalidValues("a trace must contain at least one step")
        seen = set()
        for cfg, _ in self.steps:
            if cfg in seen:
                raise InvalidValues(f"config {cfg.id} appears twice in a trace")
            seen.add(cfg)
        if self.best[1] != min(v for _, v in self.steps):
            raise InvalidValues("trace best is inconsistent with its steps")

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.steps]

    def to_dict(self) -> dict:
        return {
            "workload_id": self.workload_id,
            "method": self.method.value,
            "steps": [{"config": cfg.id, "value": val} for cfg, val in self.steps],
            "best": {"config": self.best[0].id, "value": self.best[1]},
            "stop_reason": self.stop_reason.value,
        }


def _check_workload(db: PerfDatabase, workload_id: str) -> None:
    if workload_id not in set(db.workload_ids()):
        raise UnknownWorkload(f"workload {workload_id!r} is not in the database")


def _evaluate(db: PerfDatabase, workload_id: str, cfg: CloudConfig, obj: Objective) -> float:
    return objective_value(lookup(db, workload_id, cfg), db.space, obj)


def _finish(workload_id, method, state: SearchState, reason: StopReason) -> SearchTrace:
    return SearchTrace(
        workload_id=workload_id,
        method=method,
        steps=tuple(state.evaluated),
        best=state.best,
        stop_reason=reason,
    )


def scout_search(
    model,
    db: PerfDatabase,
    workload_id: str,
    obj: Objective,
    params: ScoutParams = ScoutParams(),
) -> SearchTrace:
    """Model-guided greedy search.

    Each step conditions only on the most recent observation: for every
    unevaluated candidate the model predicts the class distribution of the
    ratio candidate/current, and the candidate with the highest probability
    of improvement is evaluated next. Stops when no candidate reaches the
    probability threshold, or after beta consecutive non-improving steps.
    """
    _check_workload(db, workload_id)
    space = db.space
    start = params.start if params.start is not None else space.midpoint()
    if start not in space:
        raise StartOutsideSpace(f"start config {start.id} is not in the space")
    beta = params.beta if params.beta is not None else default_beta(space)
    feats = space_feature_matrix(space)
    expected_dim = 2 * feats.shape[1] + db.metric_dim
    if getattr(model, "dim", expected_dim) != expected_dim:
        raise DimensionMismatch(
            f"model expects dim {model.dim}, database pair features have dim {expected_dim}"
        )

    state = SearchState(space)
    current = start
    state.record(current, _evaluate(db, workload_id, current, obj))
    while True:
        candidates = state.unevaluated_in_order()
        if not candidates:
            return _finish(workload_id, Method.SCOUT, state, StopReason.SPACE_EXHAUSTED)
        cur_idx = space.index(current)
        cur_metrics = np.asarray(lookup(db, workload_id, current).metrics, dtype=float)
        cand_idx = np.array([space.index(c) for c in candidates])
        block = np.hstack(
            [
                np.repeat(feats[cur_idx][None, :], len(candidates), axis=0),
                feats[cand_idx],
                np.repeat(cur_metrics[None, :], len(candidates), axis=0),
            ]
        )
        dists = model.predict_distribution_batch(block)
        pis = dists[:, 0] + dists[:, 1]
        pick = int(np.argmax(pis))  # first max: space-order tie-break
        if pis[pick] < params.alpha:
            return _finish(workload_id, Method.SCOUT, state, StopReason.BELOW_THRESHOLD)
        current = candidates[pick]
        improved = state.record(current, _evaluate(db, workload_id, current, obj))
        state.miss_count = 0 if improved else state.miss_count + 1
        if state.miss_count >= beta:
            return _finish(workload_id, Method.SCOUT, state, StopReason.MISPREDICTION_LIMIT)


def random_search(
    db: PerfDatabase, workload_id: str, obj: Objective, k: int, seed: int = 0
) -> SearchTrace:
    """Uniform sample of k distinct configurations."""
    _check_workload(db, workload_id)
    n = len(db.space)
    if not 1 <= k <= n:
        raise KTooLarge(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    state = SearchState(db.space)
    for idx in rng.choice(n, size=k, replace=False):
        cfg = db.space.configs[int(idx)]
        state.record(cfg, _evaluate(db, workload_id, cfg, obj))
    return _finish(workload_id, Method.RANDOM_K, state, StopReason.BUDGET_EXHAUSTED)


_AXES = ("family", "size", "node_count")


def _differs_only_in(a: CloudConfig, b: CloudConfig, axis: str) -> bool:
    others = [ax for ax in _AXES if ax != axis]
    return getattr(a, axis) != getattr(b, axis) and all(
        getattr(a, ax) == getattr(b, ax) for ax in others
    )


def coordinate_descent(
    db: PerfDatabase, workload_id: str, obj: Objective, start: CloudConfig, seed: int = 0
) -> SearchTrace:
    """Axis-at-a-time descent over (family, size, node count).

    Cycles through the three axes in a seeded random order; for the active
    axis, evaluates every in-space config differing from the incumbent only
    in that axis, then moves the incumbent to the best config found so far.
    Stops after a full cycle without incumbent change.
    """
    _check_workload(db, workload_id)
    space = db.space
    if start not in space:
        raise StartOutsideSpace(f"start config {start.id} is not in the space")
    axes = list(_AXES)
    np.random.default_rng(seed).shuffle(axes)

    state = SearchState(space)
    incumbent = start
    state.record(incumbent, _evaluate(db, workload_id, incumbent, obj))
    while True:
        moved = False
        for axis in axes:
            for cfg in space.configs:
                if cfg in state.unevaluated and _differs_only_in(incumbent, cfg, axis):
                    state.record(cfg, _evaluate(db, workload_id, cfg, obj))
            if state.best[0] != incumbent:
                incumbent = state.best[0]
                moved = True
        if not moved:
            return _finish(workload_id, Method.COORD_DESCENT, state, StopReason.LOCAL_MINIMUM)


def standardized_features(space: ConfigSpace) -> np.ndarray:
    """Per-column standardization over the whole space (constant columns untouched)."""
    feats = space_feature_matrix(space)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0
    return (feats - mean) / std


def bo_search(
    db: PerfDatabase,
    workload_id: str,
    obj: Objective,
    n_init: int = 3,
    ei_stop: float = 0.10,
    seed: int = 0,
) -> SearchTrace:
    """Bayesian optimization baseline: GP surrogate on log objective + EI.

    Stops when the best expected improvement falls below ei_stop relative to
    the incumbent (both on the log scale).
    """
    _check_workload(db, workload_id)
    n = len(db.space)
    if n_init < 2:
        raise InvalidValues(f"n_init must be >= 2, got {n_init}")
    if n_init > n:
        raise KTooLarge(f"n_init must be <= {n}, got {n_init}")
    feats = standardized_features(db.space)
    rng = np.random.default_rng(seed)
    state = SearchState(db.space)
    for idx in rng.choice(n, size=n_init, replace=False):
        cfg = db.space.configs[int(idx)]
        state.record(cfg, _evaluate(db, workload_id, cfg, obj))
    while True:
        candidates = state.unevaluated_in_order()
        if not candidates:
            return _finish(workload_id, Method.BAYES_OPT, state, StopReason.SPACE_EXHAUSTED)
        done_idx = np.array([db.space.index(cfg) for cfg, _ in state.evaluated])
        y = np.log(np.array([v for _, v in state.evaluated]))
        gp = fit_gp(feats[done_idx], y)
        y_star = float(y.min())
        cand_idx = np.array([db.space.index(c) for c in candidates])
        mu, var = gp.posterior(feats[cand_idx])
        ei = expected_improvement(mu, np.sqrt(var), y_star)
        pick = int(np.argmax(ei))
        if float(ei[pick]) / max(abs(y_star), 1e-12) < ei_stop:
            return _finish(workload_id, Method.BAYES_OPT, state, StopReason.EI_BELOW_THRESHOLD)
        cfg = candidates[pick]
        state.record(cfg, _evaluate(db, workload_id, cfg, obj))


def convergence_speed(trace: SearchTrace) -> float:
    """Mean relative improvement per step; positive means the search moves downhill."""
    values = trace.values
    if len(values) < 2:
        raise TraceTooShort("convergence speed needs at least two steps")
    gains = [(values[i] - values[i + 1]) / values[i] for i in range(len(values) - 1)]
    return float(np.mean(gains))
