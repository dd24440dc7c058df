"""Numeric encodings: config feature vectors, sample aggregation, pair features.

A configuration is encoded as 10 numbers (family one-hot, ordinal size,
node count and derived totals); a pairwise model input is the concatenation
[features(measured), features(candidate), metrics(measured run)].
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptySamples, IoError, ParseError
from .perfdb import (
    SIZE_ORDER,
    CloudConfig,
    ConfigSpace,
    Family,
    Measurement,
    PerfDatabase,
    Size,
)

#: slot layout of a config feature vector
CONFIG_FEATURE_NAMES = (
    "family_c4",
    "family_m4",
    "family_r4",
    "size_ordinal",
    "node_count",
    "total_cores",
    "mem_gb_per_core",
    "total_mem_gb",
    "price_per_node_hour",
    "total_price_per_hour",
)

CONFIG_FEATURE_DIM = len(CONFIG_FEATURE_NAMES)

_FAMILY_SLOT = {Family.C4: 0, Family.M4: 1, Family.R4: 2}


def encode_config(cfg: CloudConfig, space: ConfigSpace) -> np.ndarray:
    """Deterministic 10-slot vector for one configuration."""
    spec = space.spec_for(cfg)
    out = np.zeros(CONFIG_FEATURE_DIM)
    out[_FAMILY_SLOT[cfg.family]] = 1.0
    out[3] = SIZE_ORDER[cfg.size]
    out[4] = cfg.node_count
    out[5] = cfg.node_count * spec.vcpus_per_node
    out[6] = spec.mem_gb_per_node / spec.vcpus_per_node
    out[7] = cfg.node_count * spec.mem_gb_per_node
    out[8] = spec.price_per_node_hour
    out[9] = cfg.node_count * spec.price_per_node_hour
    return out


def space_feature_matrix(space: ConfigSpace) -> np.ndarray:
    """Feature vectors for every config, in space order (row i = config i)."""
    return np.stack([encode_config(cfg, space) for cfg in space.configs])


def build_pair_features(
    fi: np.ndarray, fj: np.ndarray, li, metric_dim: int | None = None
) -> np.ndarray:
    """Concatenate [measured-config features | candidate features | measured metrics]."""
    fi = np.asarray(fi, dtype=float)
    fj = np.asarray(fj, dtype=float)
    li = np.asarray(li, dtype=float)
    if fi.shape != (CONFIG_FEATURE_DIM,) or fj.shape != (CONFIG_FEATURE_DIM,):
        raise DimensionMismatch(
            f"config features must have length {CONFIG_FEATURE_DIM}, got {fi.shape} and {fj.shape}"
        )
    if li.ndim != 1:
        raise DimensionMismatch(f"metric vector must be 1-D, got shape {li.shape}")
    if metric_dim is not None and li.shape[0] != metric_dim:
        raise DimensionMismatch(f"metric vector has length {li.shape[0]}, expected {metric_dim}")
    return np.concatenate([fi, fj, li])


def pair_feature_dim(metric_dim: int) -> int:
    return 2 * CONFIG_FEATURE_DIM + metric_dim


def nearest_rank_percentile(values: np.ndarray, p: float) -> float:
    """Nearest-rank percentile: ceil(p/100 * n)-th smallest, p=0 -> minimum."""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = len(ordered)
    rank = min(max(math.ceil(p / 100.0 * n), 1), n)
    return float(ordered[rank - 1])


def aggregate_samples(samples) -> np.ndarray:
    """Reduce per-interval metric samples to [means.., stds.., p90s..].

    Standard deviations are population (ddof=0); percentiles are nearest-rank.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise EmptySamples("need at least one sample to aggregate")
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"samples must be a list of equal-length vectors, got shape {arr.shape}")
    means = arr.mean(axis=0)
    stds = arr.std(axis=0)
    p90s = np.array([nearest_rank_percentile(arr[:, j], 90.0) for j in range(arr.shape[1])])
    return np.concatenate([means, stds, p90s])


RAW_FIXED_HEADER = ["workload_id", "family", "size", "node_count", "sample_idx"]

#: sampling period assumed for raw streams; elapsed time of a run is
#: reconstructed as n_samples * interval since the raw format carries no clock.
DEFAULT_SAMPLE_INTERVAL_S = 5.0


def ingest_raw_samples(
    path: str | Path, space: ConfigSpace, interval_s: float = DEFAULT_SAMPLE_INTERVAL_S
) -> PerfDatabase:
    """Aggregate a raw per-interval sample CSV into a performance database."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read raw sample file {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][: len(RAW_FIXED_HEADER)] != RAW_FIXED_HEADER:
        raise ParseError(f"raw sample header must start with {','.join(RAW_FIXED_HEADER)}")
    metric_cols = rows[0][len(RAW_FIXED_HEADER) :]
    for col in metric_cols:
        if not col.startswith("m_"):
            raise ParseError(f"metric column {col!r} must be prefixed with m_")
    raw_names = [col[2:] for col in metric_cols]
    groups: dict[tuple[str, CloudConfig], list[list[float]]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(rows[0]):
            raise DimensionMismatch(f"raw sample line {lineno}: wrong field count")
        try:
            cfg = CloudConfig(Family(row[1]), Size(row[2]), int(row[3]))
        except ValueError as exc:
            raise ParseError(f"raw sample line {lineno}: {exc}") from exc
        if cfg not in space:
            raise ParseError(f"raw sample line {lineno}: config {cfg.id} is not in the space")
        try:
            vals = [float(v) for v in row[len(RAW_FIXED_HEADER) :]]
        except ValueError as exc:
            raise ParseError(f"raw sample line {lineno}: {exc}") from exc
        groups.setdefault((row[0], cfg), []).append(vals)

    agg_names = tuple(
        f"{stat}_{name}" for stat in ("mean", "std", "p90") for name in raw_names
    )
    records = {}
    for (wid, cfg), sample_rows in groups.items():
        agg = aggregate_samples(sample_rows)
        records[(wid, cfg)] = Measurement(
            workload_id=wid,
            config=cfg,
            elapsed_s=len(sample_rows) * interval_s,
            metrics=tuple(float(v) for v in agg),
        )
    return PerfDatabase(space=space, metric_names=agg_names, records=records)
