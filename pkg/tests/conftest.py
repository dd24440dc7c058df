import numpy as np
import pytest

from cloudtuner.perfdb import (
    CloudConfig,
    ConfigSpace,
    Family,
    InstanceSpec,
    Measurement,
    PerfDatabase,
    Size,
    default_space,
)


@pytest.fixture(scope="session")
def space72():
    return default_space()


def make_space(rows):
    """rows: list of (family, size, vcpus, mem_gb, price, [node counts])."""
    configs = []
    specs = {}
    for fam, size, vcpus, mem, price, counts in rows:
        specs[(fam, size)] = InstanceSpec(vcpus, mem, price)
        for n in counts:
            configs.append(CloudConfig(fam, size, n))
    return ConfigSpace(configs=tuple(configs), instance_specs=specs)


@pytest.fixture
def small_space():
    return make_space(
        [
            (Family.C4, Size.LARGE, 2, 3.75, 0.1, [4, 6, 8]),
            (Family.M4, Size.LARGE, 2, 8.0, 0.1, [4, 6, 8]),
        ]
    )


def db_from_values(space, values_by_workload, metric_dim=6, metrics_fn=None):
    """Build a grid-complete database with given objective times per config.

    values_by_workload: {workload_id: {config: elapsed_s}} or
    {workload_id: [elapsed in space order]}.
    """
    records = {}
    names = tuple(f"x{i}" for i in range(metric_dim))
    for wid, values in values_by_workload.items():
        if not isinstance(values, dict):
            values = {cfg: v for cfg, v in zip(space.configs, values)}
        for cfg in space.configs:
            metrics = (
                tuple(metrics_fn(wid, cfg))
                if metrics_fn is not None
                else tuple(float(i) for i in range(metric_dim))
            )
            records[(wid, cfg)] = Measurement(
                workload_id=wid, config=cfg, elapsed_s=float(values[cfg]), metrics=metrics
            )
    return PerfDatabase(space=space, metric_names=names, records=records)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: generator ranges that keep every workload's optimum isolated by >5% from
#: all non-tied values: no memory penalties (demand below every GB/core),
#: near-zero serial fraction, no shuffle, strong family-speed separation.
#: Under these, the replay-oracle walk provably reaches the exact optimum.
STEEP_RANGES = {
    "work_core_s": (50000.0, 500000.0),
    "serial_frac": (0.0, 0.01),
    "mem_demand_gb_per_core": (0.0, 1.8),
    "cpu_speed_weight": (0.5, 1.0),
    "shuffle_coef": (0.0, 0.0),
    "noise_sigma": (0.0, 0.0),
}


def steep_gen_params(n_workloads, master_seed, metric_dimension=8):
    from cloudtuner.synthgen import GenParams

    return GenParams(
        n_workloads=n_workloads,
        master_seed=master_seed,
        metric_dimension=metric_dimension,
        family_speed={Family.C4: 1.6, Family.M4: 1.0, Family.R4: 0.7},
        profile_ranges=dict(STEEP_RANGES),
    )


def assert_isolated_optima(db, objective):
    """Fixture sanity: every non-tied value sits >5% above the optimum."""
    from cloudtuner.perfdb import lookup, objective_value

    for wid in db.workload_ids():
        values = sorted(
            objective_value(lookup(db, wid, cfg), db.space, objective) for cfg in db.space.configs
        )
        floor = values[0]
        for v in values:
            assert v == floor or v / floor >= 1.0 / 0.95
