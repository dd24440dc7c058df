"""Pairwise performance classifier.

Training pairs come from historical workloads: for every ordered config pair
(measured, candidate) the label is the discretized objective ratio
candidate/measured, and the input is [features(measured), features(candidate),
metrics(measured run)]. Prediction yields a distribution over five ordinal
classes; the probability of improvement is the mass on the two strictly
improving classes.

The ensemble itself is scikit-learn's extremely-randomized trees; the model
object wraps it behind the apply/persist/predict surface used by searchers.
"""

from __future__ import annotations

import enum
import math
import pickle
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.ensemble import ExtraTreesClassifier

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidRatio,
    InvalidValues,
    IoError,
    ModelFormatError,
    UnknownConfig,
)
from .featurize import CONFIG_FEATURE_DIM, pair_feature_dim, space_feature_matrix
from .perfdb import Objective, PerfDatabase, objective_value
from .seeding import derive_seed, rng_for


class ClassLabel(enum.IntEnum):
    BETTER_PLUS = 0
    BETTER = 1
    FAIR = 2
    WORSE = 3
    WORSE_PLUS = 4


CLASS_COUNT = len(ClassLabel)

#: ratio cut points separating the five classes
CUT_POINTS = (0.8, 0.95, 1.05, 1.2)


def discretize_label(ratio: float) -> ClassLabel:
    """Map a performance ratio candidate/measured onto its ordinal class.

    Boundary ownership: 0.8 is still better+, 0.95 still better, 1.05
    already worse, 1.2 already worse+.
    """
    if not (isinstance(ratio, (int, float)) and math.isfinite(ratio) and ratio > 0):
        raise InvalidRatio(f"ratio must be a finite positive number, got {ratio!r}")
    if ratio <= 0.8:
        return ClassLabel.BETTER_PLUS
    if ratio <= 0.95:
        return ClassLabel.BETTER
    if ratio < 1.05:
        return ClassLabel.FAIR
    if ratio < 1.2:
        return ClassLabel.WORSE
    return ClassLabel.WORSE_PLUS


def discretize_labels(ratios: np.ndarray) -> np.ndarray:
    """Vectorized discretize_label with identical boundary semantics."""
    r = np.asarray(ratios, dtype=float)
    if not np.all(np.isfinite(r) & (r > 0)):
        raise InvalidRatio("ratios must be finite and positive")
    out = np.full(r.shape, int(ClassLabel.FAIR), dtype=np.int64)
    out[r <= 0.95] = int(ClassLabel.BETTER)
    out[r <= 0.8] = int(ClassLabel.BETTER_PLUS)
    out[r >= 1.05] = int(ClassLabel.WORSE)
    out[r >= 1.2] = int(ClassLabel.WORSE_PLUS)
    return out


@dataclass(frozen=True)
class PairwiseSample:
    features: np.ndarray
    label: ClassLabel
    source_workload: str


@dataclass(frozen=True)
class ModelParams:
    n_trees: int = 100
    min_leaf: int = 5
    max_features: int | None = None  # None -> ceil(sqrt(dim))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidValues(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise InvalidValues(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_features is not None and self.max_features < 1:
            raise InvalidValues(f"max_features must be >= 1, got {self.max_features}")


def build_training_set(
    db: PerfDatabase,
    exclude_workload: str | None,
    obj: Objective,
    max_pairs_per_workload: int | None = None,
    seed: int = 0,
) -> list[PairwiseSample]:
    """All ordered config pairs of every workload except the excluded one.

    An absent exclude target simply means "use every workload". With
    max_pairs_per_workload set, pairs are subsampled uniformly per workload.
    """
    n = len(db.space)
    feats = space_feature_matrix(db.space)
    samples: list[PairwiseSample] = []
    total = n * (n - 1)
    for wid in db.workload_ids():
        if wid == exclude_workload:
            continue
        values = np.array(
            [objective_value(db.records[(wid, cfg)], db.space, obj) for cfg in db.space.configs]
        )
        metrics = np.array([db.records[(wid, cfg)].metrics for cfg in db.space.configs])
        if max_pairs_per_workload is not None and max_pairs_per_workload < total:
            pair_ids = np.sort(
                rng_for(seed, wid).choice(total, size=max_pairs_per_workload, replace=False)
            )
        else:
            pair_ids = np.arange(total)
        i_idx = pair_ids // (n - 1)
        rem = pair_ids % (n - 1)
        j_idx = np.where(rem < i_idx, rem, rem + 1)
        labels = discretize_labels(values[j_idx] / values[i_idx])
        block = np.hstack([feats[i_idx], feats[j_idx], metrics[i_idx]])
        for row, label in zip(block, labels):
            samples.append(PairwiseSample(features=row, label=ClassLabel(int(label)), source_workload=wid))
    return samples


@dataclass
class PairwiseModel:
    """Five-class tree ensemble over pair features.

    A degenerate training set (fewer than two samples or a single distinct
    label) yields a flagged constant model instead of an error, so replay
    harnesses can report degenerate searches rather than abort.
    """

    dim: int
    params: ModelParams
    class_count: int = CLASS_COUNT
    is_constant: bool = False
    constant_label: ClassLabel | None = None
    _forest: ExtraTreesClassifier | None = field(default=None, repr=False)

    @property
    def trees(self) -> list:
        return [] if self._forest is None else list(self._forest.estimators_)

    def predict_distribution_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatch(f"expected features of shape (n, {self.dim}), got {x.shape}")
        if self.is_constant:
            out = np.zeros((x.shape[0], CLASS_COUNT))
            out[:, int(self.constant_label)] = 1.0
            return out
        probs = self._forest.predict_proba(x)
        out = np.zeros((x.shape[0], CLASS_COUNT))
        out[:, self._forest.classes_.astype(int)] = probs
        return out

    def predict_distribution(self, x: np.ndarray) -> np.ndarray:
        return self.predict_distribution_batch(np.asarray(x, dtype=float)[None, :])[0]


def train(samples: list[PairwiseSample], params: ModelParams = ModelParams()) -> PairwiseModel:
    if not samples:
        raise EmptyTrainingSet("no training samples")
    x = np.stack([s.features for s in samples])
    y = np.array([int(s.label) for s in samples])
    dim = x.shape[1]
    if len(samples) < 2 or len(np.unique(y)) < 2:
        return PairwiseModel(
            dim=dim, params=params, is_constant=True, constant_label=ClassLabel(int(y[0]))
        )
    max_features = params.max_features
    if max_features is None:
        max_features = math.ceil(math.sqrt(dim))
    if not 1 <= max_features <= dim:
        raise InvalidValues(f"max_features must be in [1, {dim}], got {max_features}")
    forest = ExtraTreesClassifier(
        n_estimators=params.n_trees,
        criterion="gini",
        min_samples_leaf=params.min_leaf,
        max_features=max_features,
        bootstrap=False,
        random_state=derive_seed(params.seed, "forest") % 2**32,
        n_jobs=1,
    )
    forest.fit(x, y)
    return PairwiseModel(dim=dim, params=params, _forest=forest)


def predict_distribution(model, x: np.ndarray) -> np.ndarray:
    return model.predict_distribution(x)


def probability_of_improvement(dist: np.ndarray) -> float:
    """Mass on the strictly improving classes (ratio <= 0.95)."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (CLASS_COUNT,):
        raise DimensionMismatch(f"expected a {CLASS_COUNT}-class distribution, got shape {dist.shape}")
    if np.any(dist < -1e-9) or abs(float(dist.sum()) - 1.0) > 1e-9:
        raise InvalidValues("class distribution must be non-negative and sum to 1")
    return float(dist[ClassLabel.BETTER_PLUS] + dist[ClassLabel.BETTER])


class PerfectModel:
    """Replay-oracle model: answers with the one-hot true class.

    Decodes the measured and candidate configs from the (injective) feature
    encoding and looks the true ratio up in the database. Satisfies the same
    prediction surface as a trained model; used to isolate search dynamics
    from model quality.
    """

    def __init__(self, db: PerfDatabase, workload_id: str, obj: Objective):
        self.dim = pair_feature_dim(db.metric_dim)
        feats = space_feature_matrix(db.space)
        self._config_by_key = {tuple(row): i for i, row in enumerate(feats)}
        self._values = np.array(
            [objective_value(db.records[(workload_id, cfg)], db.space, obj) for cfg in db.space.configs]
        )

    def _decode(self, row: np.ndarray) -> int:
        try:
            return self._config_by_key[tuple(row)]
        except KeyError:
            raise UnknownConfig("feature vector does not match any config in the space") from None

    def predict_distribution_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatch(f"expected features of shape (n, {self.dim}), got {x.shape}")
        out = np.zeros((x.shape[0], CLASS_COUNT))
        for row_idx, row in enumerate(x):
            i = self._decode(row[:CONFIG_FEATURE_DIM])
            j = self._decode(row[CONFIG_FEATURE_DIM : 2 * CONFIG_FEATURE_DIM])
            label = discretize_label(float(self._values[j] / self._values[i]))
            out[row_idx, int(label)] = 1.0
        return out

    def predict_distribution(self, x: np.ndarray) -> np.ndarray:
        return self.predict_distribution_batch(np.asarray(x, dtype=float)[None, :])[0]


# --- persistence -------------------------------------------------------------

_MAGIC = b"CTPM"
_VERSION = 1


def dump_model(model: PairwiseModel) -> bytes:
    payload = pickle.dumps(
        {
            "dim": model.dim,
            "params": model.params,
            "is_constant": model.is_constant,
            "constant_label": model.constant_label,
            "forest": model._forest,
        }
    )
    return _MAGIC + struct.pack("<I", _VERSION) + payload


def parse_model(blob: bytes) -> PairwiseModel:
    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise ModelFormatError("not a pairwise model file (bad magic)")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    try:
        state = pickle.loads(blob[8:])
    except Exception as exc:
        raise ModelFormatError(f"corrupt model payload: {exc}") from exc
    return PairwiseModel(
        dim=state["dim"],
        params=state["params"],
        is_constant=state["is_constant"],
        constant_label=state["constant_label"],
        _forest=state["forest"],
    )


def save_model(model: PairwiseModel, path: str | Path) -> None:
    try:
        Path(path).write_bytes(dump_model(model))
    except OSError as exc:
        raise IoError(f"cannot write model file {path}: {exc}") from exc


def load_model(path: str | Path) -> PairwiseModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read model file {path}: {exc}") from exc
    return parse_model(blob)
