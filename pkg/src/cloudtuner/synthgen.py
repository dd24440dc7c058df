"""Deterministic synthetic performance databases.

A parametric strong-scaling model produces execution times, and the metric
vectors are derived from the same time decomposition, so resource preferences
(memory-bound workloads favor high GB/core, CPU-bound favor fast families,
shuffle-heavy favor small clusters) are learnable from the data. The closed
formula also serves as the independent oracle in tests.

Time model, per (profile p, config c):

    cores        = node_count * vcpus_per_node
    speed        = (1 - p.cpu_speed_weight) + p.cpu_speed_weight * family_speed[family]
    mem_per_core = mem_gb_per_node / vcpus_per_node
    mem_pen      = 1                                     if mem_per_core >= demand
                   1 + kappa * (demand/mem_per_core - 1) otherwise
    T0 = p.work_core_s * p.serial_frac / speed
       + p.work_core_s * (1 - p.serial_frac) * mem_pen / (cores * speed)
       + p.shuffle_coef * node_count

With p.noise_sigma > 0 the stored time is T0 * exp(g*sigma - sigma^2/2) for a
standard normal g drawn from a generator seeded by (p.seed, c), so every cell
is reproducible independently of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError
from .perfdb import CloudConfig, ConfigSpace, Family, Measurement, PerfDatabase
from .seeding import rng_for

#: canonical metric columns; distractor columns aux06.. follow
CANONICAL_METRICS = ("cpu_util", "mem_util", "paging_rate", "net_frac", "serial_stall", "cores_busy")


@dataclass(frozen=True)
class WorkloadProfile:
    workload_id: str
    work_core_s: float
    serial_frac: float
    mem_demand_gb_per_core: float
    cpu_speed_weight: float
    shuffle_coef: float
    noise_sigma: float
    seed: int

    def __post_init__(self):
        if not self.work_core_s > 0:
            raise ParseError(f"work_core_s must be > 0, got {self.work_core_s}")
        for name, lo, hi in (
            ("serial_frac", 0.0, 1.0),
            ("cpu_speed_weight", 0.0, 1.0),
        ):
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ParseError(f"{name} must be in [{lo}, {hi}], got {v}")
        for name in ("mem_demand_gb_per_core", "shuffle_coef", "noise_sigma"):
            if getattr(self, name) < 0:
                raise ParseError(f"{name} must be >= 0, got {getattr(self, name)}")


#: profile fields drawn from ranges, in drawing order
PROFILE_RANGE_FIELDS = (
    "work_core_s",
    "serial_frac",
    "mem_demand_gb_per_core",
    "cpu_speed_weight",
    "shuffle_coef",
    "noise_sigma",
)

DEFAULT_PROFILE_RANGES = {
    "work_core_s": (20000.0, 200000.0),
    "serial_frac": (0.0, 0.05),
    "mem_demand_gb_per_core": (0.5, 9.0),
    "cpu_speed_weight": (0.3, 1.0),
    "shuffle_coef": (0.0, 8.0),
    "noise_sigma": (0.0, 0.0),
}

DEFAULT_FAMILY_SPEED = {Family.C4: 1.5, Family.M4: 1.0, Family.R4: 0.8}


@dataclass(frozen=True)
class GenParams:
    n_workloads: int = 20
    family_speed: dict[Family, float] = field(default_factory=lambda: dict(DEFAULT_FAMILY_SPEED))
    mem_penalty_coef: float = 0.6
    metric_dimension: int = 16
    master_seed: int = 0
    profile_ranges: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_PROFILE_RANGES)
    )

    def __post_init__(self):
        if self.n_workloads < 0:
            raise ParseError(f"n_workloads must be >= 0, got {self.n_workloads}")
        if self.metric_dimension < 6:
            raise ParseError(f"metric_dimension must be >= 6, got {self.metric_dimension}")
        if self.mem_penalty_coef < 0:
            raise ParseError(f"mem_penalty_coef must be >= 0, got {self.mem_penalty_coef}")
        for speed in self.family_speed.values():
            if not speed > 0:
                raise ParseError("family_speed entries must be > 0")
        for name in PROFILE_RANGE_FIELDS:
            if name not in self.profile_ranges:
                raise ParseError(f"profile range missing for {name}")
            lo, hi = self.profile_ranges[name]
            if lo > hi:
                raise ParseError(f"profile range for {name} has min > max")


def _time_terms(
    p: WorkloadProfile, c: CloudConfig, space: ConfigSpace, params: GenParams
) -> tuple[float, float, float, float]:
    """(serial, parallel_unpenalized, penalty, shuffle) building blocks of T0."""
    spec = space.spec_for(c)
    try:
        fam_speed = params.family_speed[c.family]
    except KeyError:
        raise ParseError(f"family_speed does not cover {c.family.value}") from None
    cores = c.node_count * spec.vcpus_per_node
    speed = (1.0 - p.cpu_speed_weight) + p.cpu_speed_weight * fam_speed
    mem_per_core = spec.mem_gb_per_node / spec.vcpus_per_node
    if mem_per_core >= p.mem_demand_gb_per_core:
        mem_pen = 1.0
    else:
        mem_pen = 1.0 + params.mem_penalty_coef * (p.mem_demand_gb_per_core / mem_per_core - 1.0)
    serial = p.work_core_s * p.serial_frac / speed
    parallel = p.work_core_s * (1.0 - p.serial_frac) / (cores * speed)
    shuffle = p.shuffle_coef * c.node_count
    return serial, parallel, mem_pen, shuffle


def noiseless_time(p: WorkloadProfile, c: CloudConfig, space: ConfigSpace, params: GenParams) -> float:
    serial, parallel, mem_pen, shuffle = _time_terms(p, c, space, params)
    return serial + parallel * mem_pen + shuffle


def simulate_time(p: WorkloadProfile, c: CloudConfig, space: ConfigSpace, params: GenParams) -> float:
    t0 = noiseless_time(p, c, space, params)
    if p.noise_sigma == 0:
        return t0
    g = rng_for(p.seed, c.id, "time").standard_normal()
    # lognormal factor with mean 1: variance without shifting the expectation
    return t0 * math.exp(g * p.noise_sigma - p.noise_sigma**2 / 2.0)


def simulate_metrics(
    p: WorkloadProfile, c: CloudConfig, t: float, space: ConfigSpace, params: GenParams
) -> tuple[float, ...]:
    """Metric vector consistent with the time decomposition of (p, c).

    Fractions describe the noiseless profile: cpu_util is the unpenalized
    parallel-compute share of T0, so the three shares sum to 1 exactly when
    no memory penalty applies, and paging pressure shows up as lost CPU.
    """
    spec = space.spec_for(c)
    serial, parallel, mem_pen, shuffle = _time_terms(p, c, space, params)
    t0 = serial + parallel * mem_pen + shuffle
    cores = c.node_count * spec.vcpus_per_node
    mem_per_core = spec.mem_gb_per_node / spec.vcpus_per_node

    cpu_util = parallel / t0
    mem_util = min(1.0, p.mem_demand_gb_per_core / mem_per_core)
    paging_rate = max(0.0, p.mem_demand_gb_per_core - mem_per_core) * 100.0
    net_frac = shuffle / t0
    serial_stall = serial / t0
    cores_busy = cpu_util * cores
    canon = np.array([cpu_util, mem_util, paging_rate, net_frac, serial_stall, cores_busy])

    d = params.metric_dimension
    if d == 6:
        return tuple(float(v) for v in canon)
    rng = rng_for(p.seed, c.id, "aux")
    aux = np.empty(d - 6)
    for k in range(6, d):
        weights = np.sin(0.61 * k + np.arange(6))
        aux[k - 6] = math.tanh(float(weights @ canon) / 6.0) + 0.05 * rng.standard_normal()
    return tuple(float(v) for v in np.concatenate([canon, aux]))


def draw_profiles(params: GenParams) -> list[WorkloadProfile]:
    """The profile population is a pure function of (master_seed, ranges)."""
    rng = rng_for(params.master_seed, "profiles")
    profiles = []
    for i in range(params.n_workloads):
        values = {}
        for name in PROFILE_RANGE_FIELDS:
            lo, hi = params.profile_ranges[name]
            values[name] = float(rng.uniform(lo, hi))
        seed = int(rng.integers(0, 2**62))
        profiles.append(WorkloadProfile(workload_id=f"w{i:03d}", seed=seed, **values))
    return profiles


def generate_database(params: GenParams, space: ConfigSpace) -> PerfDatabase:
    metric_names = CANONICAL_METRICS + tuple(f"aux{k:02d}" for k in range(6, params.metric_dimension))
    records = {}
    for profile in draw_profiles(params):
        for cfg in space.configs:
            t = simulate_time(profile, cfg, space, params)
            metrics = simulate_metrics(profile, cfg, t, space, params)
            records[(profile.workload_id, cfg)] = Measurement(
                workload_id=profile.workload_id, config=cfg, elapsed_s=t, metrics=metrics
            )
    return PerfDatabase(space=space, metric_names=metric_names, records=records)


# --- parameter files --------------------------------------------------------
#
# key=value text, one pair per line, '#' comments. Dotted keys set the family
# speed map and per-field profile ranges (ranges as "min:max").


def parse_gen_params(text: str) -> GenParams:
    kwargs: dict = {}
    family_speed = dict(DEFAULT_FAMILY_SPEED)
    ranges = dict(DEFAULT_PROFILE_RANGES)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"params line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in ("n_workloads", "metric_dimension", "master_seed"):
                kwargs[key] = int(value)
            elif key == "mem_penalty_coef":
                kwargs[key] = float(value)
            elif key.startswith("family_speed."):
                family_speed[Family(key.split(".", 1)[1])] = float(value)
            elif key.startswith("profile."):
                name = key.split(".", 1)[1]
                if name not in PROFILE_RANGE_FIELDS:
                    raise ParseError(f"params line {lineno}: unknown profile field {name!r}")
                lo, _, hi = value.partition(":")
                ranges[name] = (float(lo), float(hi if hi else lo))
            else:
                raise ParseError(f"params line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ParseError(f"params line {lineno}: {exc}") from exc
    return GenParams(family_speed=family_speed, profile_ranges=ranges, **kwargs)


def load_gen_params(path: str | Path) -> GenParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read params file {path}: {exc}") from exc
    return parse_gen_params(text)
