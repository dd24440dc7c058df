"""Configuration space and performance database.

The database is a grid-complete map (workload, config) -> measurement and
doubles as the replay oracle for searches: instead of provisioning a cluster,
a search "evaluates" a configuration by looking up its stored measurement.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    IncompleteGrid,
    DimensionMismatch,
    IoError,
    MissingRecord,
    ParseError,
    UnknownConfig,
    UnknownWorkload,
)


class Family(str, enum.Enum):
    C4 = "c4"
    M4 = "m4"
    R4 = "r4"


class Size(str, enum.Enum):
    LARGE = "large"
    XLARGE = "xlarge"
    TWO_XLARGE = "2xlarge"


#: ordinal capacity rank used by the feature encoding and the size axis
SIZE_ORDER = {Size.LARGE: 1, Size.XLARGE: 2, Size.TWO_XLARGE: 3}


class Objective(str, enum.Enum):
    TIME = "time"
    COST = "cost"
    TIME_COST_PRODUCT = "time_cost_product"


@dataclass(frozen=True)
class CloudConfig:
    """One deployment choice: VM family, VM size, number of nodes."""

    family: Family
    size: Size
    node_count: int

    def __post_init__(self):
        if self.node_count < 1:
            raise ParseError(f"node_count must be >= 1, got {self.node_count}")

    @property
    def id(self) -> str:
        return f"{self.family.value}.{self.size.value}.{self.node_count}"

    @staticmethod
    def parse(text: str) -> "CloudConfig":
        parts = text.strip().split(".")
        if len(parts) != 3:
            raise ParseError(f"config id must look like 'm4.xlarge.8', got {text!r}")
        fam, size, count = parts
        try:
            return CloudConfig(Family(fam), Size(size), int(count))
        except ValueError as exc:
            raise ParseError(f"bad config id {text!r}: {exc}") from exc


@dataclass(frozen=True)
class InstanceSpec:
    vcpus_per_node: int
    mem_gb_per_node: float
    price_per_node_hour: float

    def __post_init__(self):
        if self.vcpus_per_node < 1:
            raise ParseError(f"vcpus_per_node must be >= 1, got {self.vcpus_per_node}")
        if not self.mem_gb_per_node > 0:
            raise ParseError(f"mem_gb_per_node must be > 0, got {self.mem_gb_per_node}")
        if not self.price_per_node_hour > 0:
            raise ParseError(f"price_per_node_hour must be > 0, got {self.price_per_node_hour}")


@dataclass(frozen=True, eq=False)
class ConfigSpace:
    """Ordered set of configurations plus per-(family,size) instance specs.

    Declaration order is significant: it is the deterministic tie-break
    order used by exhaustive optima and by every searcher.
    """

    configs: tuple[CloudConfig, ...]
    instance_specs: dict[tuple[Family, Size], InstanceSpec]
    _index: dict[CloudConfig, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        index = {}
        for i, cfg in enumerate(self.configs):
            if cfg in index:
                raise ParseError(f"duplicate config {cfg.id} in space")
            key = (cfg.family, cfg.size)
            if key not in self.instance_specs:
                raise ParseError(f"no instance spec for {cfg.family.value}.{cfg.size.value}")
            index[cfg] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.configs)

    def __contains__(self, cfg: CloudConfig) -> bool:
        return cfg in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfigSpace)
            and self.configs == other.configs
            and self.instance_specs == other.instance_specs
        )

    def index(self, cfg: CloudConfig) -> int:
        try:
            return self._index[cfg]
        except KeyError:
            raise UnknownConfig(f"{cfg.id} is not in the configuration space") from None

    def spec_for(self, cfg: CloudConfig) -> InstanceSpec:
        if cfg not in self._index:
            raise UnknownConfig(f"{cfg.id} is not in the configuration space")
        return self.instance_specs[(cfg.family, cfg.size)]

    def midpoint(self) -> CloudConfig:
        return self.configs[len(self.configs) // 2]


@dataclass(frozen=True)
class Measurement:
    """One observed run: execution time plus aggregated low-level metrics."""

    workload_id: str
    config: CloudConfig
    elapsed_s: float
    metrics: tuple[float, ...]

    def __post_init__(self):
        if not (math.isfinite(self.elapsed_s) and self.elapsed_s > 0):
            raise ParseError(
                f"elapsed_s must be finite and > 0, got {self.elapsed_s} "
                f"for ({self.workload_id}, {self.config.id})"
            )


@dataclass(frozen=True, eq=False)
class PerfDatabase:
    space: ConfigSpace
    metric_names: tuple[str, ...]
    records: dict[tuple[str, CloudConfig], Measurement]

    def __post_init__(self):
        d = len(self.metric_names)
        for (wid, cfg), m in self.records.items():
            if len(m.metrics) != d:
                raise DimensionMismatch(
                    f"measurement ({wid}, {cfg.id}) has {len(m.metrics)} metrics, expected {d}"
                )
        missing = [
            (wid, cfg.id)
            for wid in self.workload_ids()
            for cfg in self.space.configs
            if (wid, cfg) not in self.records
        ]
        if missing:
            raise IncompleteGrid(missing)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PerfDatabase)
            and self.space == other.space
            and self.metric_names == other.metric_names
            and self.records == other.records
        )

    @property
    def metric_dim(self) -> int:
        return len(self.metric_names)

    def workload_ids(self) -> list[str]:
        seen = {}
        for wid, _ in self.records:
            seen.setdefault(wid, None)
        return list(seen)


def objective_value(m: Measurement, space: ConfigSpace, obj: Objective) -> float:
    """Objective of one measurement: seconds, dollars, or their product."""
    spec = space.spec_for(m.config)
    if obj is Objective.TIME:
        return m.elapsed_s
    cost = (m.elapsed_s / 3600.0) * m.config.node_count * spec.price_per_node_hour
    if obj is Objective.COST:
        return cost
    return m.elapsed_s * cost


def lookup(db: PerfDatabase, workload_id: str, config: CloudConfig) -> Measurement:
    try:
        return db.records[(workload_id, config)]
    except KeyError:
        raise MissingRecord(f"no record for ({workload_id}, {config.id})") from None


def optimal(db: PerfDatabase, workload_id: str, obj: Objective) -> tuple[CloudConfig, float]:
    """Exhaustive minimum over the space; ties go to the earlier config."""
    if workload_id not in set(db.workload_ids()):
        raise UnknownWorkload(f"workload {workload_id!r} is not in the database")
    best_cfg, best_val = None, None
    for cfg in db.space.configs:
        val = objective_value(db.records[(workload_id, cfg)], db.space, obj)
        if best_val is None or val < best_val:
            best_cfg, best_val = cfg, val
    return best_cfg, best_val


# --- CSV formats -----------------------------------------------------------
#
# space file:    family,size,vcpus_per_node,mem_gb_per_node,price_per_node_hour,node_counts
#                (node_counts is a ';'-separated integer list)
# database file: workload_id,family,size,node_count,elapsed_s,m_<name>...

SPACE_HEADER = ["family", "size", "vcpus_per_node", "mem_gb_per_node", "price_per_node_hour", "node_counts"]
DB_FIXED_HEADER = ["workload_id", "family", "size", "node_count", "elapsed_s"]


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"bad {what}: {text!r}") from exc


def _parse_int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ParseError(f"bad {what}: {text!r}") from exc


def parse_space(text: str) -> ConfigSpace:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != SPACE_HEADER:
        raise ParseError(f"space header must be {','.join(SPACE_HEADER)}")
    configs: list[CloudConfig] = []
    specs: dict[tuple[Family, Size], InstanceSpec] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(SPACE_HEADER):
            raise ParseError(f"space line {lineno}: expected {len(SPACE_HEADER)} fields, got {len(row)}")
        try:
            fam, size = Family(row[0]), Size(row[1])
        except ValueError as exc:
            raise ParseError(f"space line {lineno}: {exc}") from exc
        if (fam, size) in specs:
            raise ParseError(f"space line {lineno}: duplicate row for {fam.value}.{size.value}")
        specs[(fam, size)] = InstanceSpec(
            vcpus_per_node=_parse_int(row[2], "vcpus_per_node"),
            mem_gb_per_node=_parse_float(row[3], "mem_gb_per_node"),
            price_per_node_hour=_parse_float(row[4], "price_per_node_hour"),
        )
        counts = [_parse_int(c, "node_count") for c in row[5].split(";") if c != ""]
        if not counts:
            raise ParseError(f"space line {lineno}: empty node_counts")
        for n in counts:
            configs.append(CloudConfig(fam, size, n))
    return ConfigSpace(configs=tuple(configs), instance_specs=specs)


def format_space(space: ConfigSpace) -> str:
    # group node counts back per (family, size), preserving first-seen order
    grouped: dict[tuple[Family, Size], list[int]] = {}
    for cfg in space.configs:
        grouped.setdefault((cfg.family, cfg.size), []).append(cfg.node_count)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SPACE_HEADER)
    for (fam, size), counts in grouped.items():
        spec = space.instance_specs[(fam, size)]
        writer.writerow(
            [
                fam.value,
                size.value,
                spec.vcpus_per_node,
                repr(spec.mem_gb_per_node),
                repr(spec.price_per_node_hour),
                ";".join(str(n) for n in counts),
            ]
        )
    return out.getvalue()


def parse_database(text: str, space: ConfigSpace) -> PerfDatabase:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("empty database file")
    header = rows[0]
    if header[: len(DB_FIXED_HEADER)] != DB_FIXED_HEADER:
        raise ParseError(f"database header must start with {','.join(DB_FIXED_HEADER)}")
    metric_cols = header[len(DB_FIXED_HEADER) :]
    for col in metric_cols:
        if not col.startswith("m_"):
            raise ParseError(f"metric column {col!r} must be prefixed with m_")
    metric_names = tuple(col[2:] for col in metric_cols)
    d = len(metric_names)
    records: dict[tuple[str, CloudConfig], Measurement] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DimensionMismatch(
                f"database line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            fam, size = Family(row[1]), Size(row[2])
        except ValueError as exc:
            raise ParseError(f"database line {lineno}: {exc}") from exc
        cfg = CloudConfig(fam, size, _parse_int(row[3], "node_count"))
        if cfg not in space:
            raise ParseError(f"database line {lineno}: config {cfg.id} is not in the space")
        wid = row[0]
        if (wid, cfg) in records:
            raise ParseError(f"database line {lineno}: duplicate record for ({wid}, {cfg.id})")
        elapsed = _parse_float(row[4], "elapsed_s")
        metrics = tuple(_parse_float(v, f"metric m_{metric_names[j]}") for j, v in enumerate(row[5:]))
        records[(wid, cfg)] = Measurement(workload_id=wid, config=cfg, elapsed_s=elapsed, metrics=metrics)
    return PerfDatabase(space=space, metric_names=metric_names, records=records)


def format_database(db: PerfDatabase) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DB_FIXED_HEADER + [f"m_{name}" for name in db.metric_names])
    for wid in db.workload_ids():
        for cfg in db.space.configs:
            m = db.records[(wid, cfg)]
            writer.writerow(
                [wid, cfg.family.value, cfg.size.value, cfg.node_count, repr(m.elapsed_s)]
                + [repr(v) for v in m.metrics]
            )
    return out.getvalue()


def load_space(path: str | Path) -> ConfigSpace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read space file {path}: {exc}") from exc
    return parse_space(text)


def load_database(db_path: str | Path, space_path: str | Path) -> PerfDatabase:
    space = load_space(space_path)
    try:
        text = Path(db_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read database file {db_path}: {exc}") from exc
    return parse_database(text, space)


def write_space(space: ConfigSpace, path: str | Path) -> None:
    try:
        Path(path).write_text(format_space(space), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write space file {path}: {exc}") from exc


def write_database(db: PerfDatabase, path: str | Path) -> None:
    try:
        Path(path).write_text(format_database(db), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write database file {path}: {exc}") from exc


def default_space() -> ConfigSpace:
    """The bundled 72-cell grid: {c4,m4,r4} x {large,xlarge,2xlarge} x 4..48 nodes."""
    text = resources.files("cloudtuner.data").joinpath("default_space.csv").read_text(encoding="utf-8")
    return parse_space(text)
