import numpy as np
import pytest

from cloudtuner.errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidRatio,
    InvalidValues,
    ModelFormatError,
)
from cloudtuner.pairmodel import (
    CLASS_COUNT,
    ClassLabel,
    ModelParams,
    PairwiseSample,
    PerfectModel,
    build_training_set,
    discretize_label,
    discretize_labels,
    dump_model,
    load_model,
    parse_model,
    predict_distribution,
    probability_of_improvement,
    save_model,
    train,
)
from cloudtuner.perfdb import Objective
from cloudtuner.synthgen import GenParams, generate_database

from conftest import db_from_values


# --- label discretization ----------------------------------------------------


def test_boundaries_exact():
    assert discretize_label(0.8) is ClassLabel.BETTER_PLUS
    assert discretize_label(0.95) is ClassLabel.BETTER
    assert discretize_label(1.0) is ClassLabel.FAIR
    assert discretize_label(1.05) is ClassLabel.WORSE
    assert discretize_label(1.2) is ClassLabel.WORSE_PLUS


def test_interior_points():
    assert discretize_label(0.5) is ClassLabel.BETTER_PLUS
    assert discretize_label(0.9) is ClassLabel.BETTER
    assert discretize_label(0.96) is ClassLabel.FAIR
    assert discretize_label(1.04) is ClassLabel.FAIR
    assert discretize_label(1.1) is ClassLabel.WORSE
    assert discretize_label(7.0) is ClassLabel.WORSE_PLUS


def test_invalid_ratios():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(InvalidRatio):
            discretize_label(bad)
    with pytest.raises(InvalidRatio):
        discretize_labels(np.array([1.0, -2.0]))


def test_partition_and_monotonicity_property(rng):
    # every positive ratio lands in exactly one class, ordered with the ratio
    ratios = np.exp(rng.uniform(-4, 4, size=5000))
    labels = [discretize_label(float(r)) for r in ratios]
    order = np.argsort(ratios)
    sorted_labels = np.array([int(labels[i]) for i in order])
    assert np.all(np.diff(sorted_labels) >= 0)
    # scalar and vectorized paths agree
    assert np.array_equal(discretize_labels(ratios), np.array([int(l) for l in labels]))


# --- training set ------------------------------------------------------------


def test_training_set_counts(small_space):
    db = db_from_values(
        small_space,
        {"a": [10, 9, 8, 7, 6, 5], "b": [5, 6, 7, 8, 9, 10]},
    )
    n = len(small_space)
    samples = build_training_set(db, exclude_workload="a", obj=Objective.TIME)
    assert len(samples) == n * (n - 1)
    assert {s.source_workload for s in samples} == {"b"}
    all_samples = build_training_set(db, exclude_workload=None, obj=Objective.TIME)
    assert len(all_samples) == 2 * n * (n - 1)
    # absent exclude target means "use all"
    assert len(build_training_set(db, "zzz", Objective.TIME)) == 2 * n * (n - 1)


def test_training_set_constant_workload_all_fair(small_space):
    db = db_from_values(small_space, {"flat": [7, 7, 7, 7, 7, 7]})
    samples = build_training_set(db, None, Objective.TIME)
    assert all(s.label is ClassLabel.FAIR for s in samples)


def test_training_set_labels_match_ratio_definition(small_space):
    db = db_from_values(small_space, {"a": [10, 9, 8, 7, 6, 5]})
    samples = build_training_set(db, None, Objective.TIME)
    values = [10, 9, 8, 7, 6, 5]
    feats_by_cfg = {}
    from cloudtuner.featurize import encode_config

    for idx, cfg in enumerate(small_space.configs):
        feats_by_cfg[tuple(encode_config(cfg, small_space))] = idx
    for s in samples:
        i = feats_by_cfg[tuple(s.features[:10])]
        j = feats_by_cfg[tuple(s.features[10:20])]
        assert s.label is discretize_label(values[j] / values[i])
        assert np.array_equal(s.features[20:], np.asarray(db.records[("a", small_space.configs[i])].metrics))


def test_training_set_subsampling_seeded(small_space):
    db = db_from_values(small_space, {"a": [10, 9, 8, 7, 6, 5], "b": [5, 6, 7, 8, 9, 10]})
    s1 = build_training_set(db, None, Objective.TIME, max_pairs_per_workload=10, seed=5)
    s2 = build_training_set(db, None, Objective.TIME, max_pairs_per_workload=10, seed=5)
    assert len(s1) == 20
    assert all(np.array_equal(a.features, b.features) and a.label == b.label for a, b in zip(s1, s2))
    s3 = build_training_set(db, None, Objective.TIME, max_pairs_per_workload=10, seed=6)
    assert any(not np.array_equal(a.features, b.features) for a, b in zip(s1, s3))


# --- training & prediction ----------------------------------------------------


def separable_samples(n=200, margin=0.5, seed=0, label_a=ClassLabel.BETTER_PLUS, label_b=ClassLabel.WORSE):
    rng = np.random.default_rng(seed)
    half = n // 2
    xa = rng.uniform(-1.0, -margin / 2, size=half)
    xb = rng.uniform(margin / 2, 1.0, size=half)
    samples = [PairwiseSample(np.array([v]), label_a, "synthetic") for v in xa]
    samples += [PairwiseSample(np.array([v]), label_b, "synthetic") for v in xb]
    return samples


def test_train_separable_perfect_training_accuracy():
    samples = separable_samples()
    model = train(samples, ModelParams(seed=3))
    correct = 0
    for s in samples:
        dist = predict_distribution(model, s.features)
        correct += int(np.argmax(dist) == int(s.label))
    assert correct == len(samples)


def test_probe_deep_in_better_plus_region():
    model = train(separable_samples(), ModelParams(seed=3))
    dist = predict_distribution(model, np.array([-0.75]))
    assert dist[ClassLabel.BETTER_PLUS] >= 0.9


def test_train_constant_labels_flagged():
    samples = [PairwiseSample(np.array([float(i)]), ClassLabel.WORSE, "w") for i in range(10)]
    model = train(samples, ModelParams())
    assert model.is_constant
    dist = model.predict_distribution(np.array([123.0]))
    assert dist[ClassLabel.WORSE] == 1.0
    assert dist.sum() == 1.0


def test_train_empty_raises():
    with pytest.raises(EmptyTrainingSet):
        train([], ModelParams())


def test_train_deterministic():
    samples = separable_samples(seed=9)
    probe = np.linspace(-1, 1, 23)[:, None]
    m1 = train(samples, ModelParams(seed=11))
    m2 = train(samples, ModelParams(seed=11))
    assert np.array_equal(m1.predict_distribution_batch(probe), m2.predict_distribution_batch(probe))


def test_distribution_normalized(rng):
    samples = [
        PairwiseSample(rng.normal(size=4), ClassLabel(int(rng.integers(5))), "w") for _ in range(300)
    ]
    model = train(samples, ModelParams(n_trees=30, seed=2))
    probes = rng.normal(size=(50, 4))
    dists = model.predict_distribution_batch(probes)
    assert np.all(dists >= 0)
    assert np.allclose(dists.sum(axis=1), 1.0, atol=1e-9)


def test_predict_dimension_mismatch():
    model = train(separable_samples(), ModelParams())
    with pytest.raises(DimensionMismatch):
        model.predict_distribution(np.array([1.0, 2.0]))


def test_model_params_validation():
    with pytest.raises(InvalidValues):
        ModelParams(n_trees=0)
    with pytest.raises(InvalidValues):
        ModelParams(min_leaf=0)
    with pytest.raises(InvalidValues):
        train(separable_samples(), ModelParams(max_features=2))  # dim is 1


# --- probability of improvement -----------------------------------------------


def test_probability_of_improvement_values():
    assert probability_of_improvement(np.array([1.0, 0, 0, 0, 0])) == 1.0
    assert probability_of_improvement(np.array([0, 0, 1.0, 0, 0])) == 0.0
    assert probability_of_improvement(np.array([0.3, 0.3, 0.2, 0.1, 0.1])) == pytest.approx(0.6)
    with pytest.raises(InvalidValues):
        probability_of_improvement(np.array([0.5, 0.2, 0.1, 0.1, 0.2]))
    with pytest.raises(DimensionMismatch):
        probability_of_improvement(np.array([1.0, 0.0]))


# --- replay oracle model -------------------------------------------------------


def test_perfect_model_matches_true_ratios(space72):
    db = generate_database(GenParams(n_workloads=2, master_seed=3, metric_dimension=6), space72)
    wid = db.workload_ids()[0]
    oracle = PerfectModel(db, wid, Objective.TIME)
    from cloudtuner.featurize import build_pair_features, space_feature_matrix
    from cloudtuner.perfdb import lookup, objective_value

    feats = space_feature_matrix(space72)
    rng = np.random.default_rng(0)
    for _ in range(40):
        i, j = rng.integers(len(space72), size=2)
        li = np.asarray(lookup(db, wid, space72.configs[i]).metrics)
        x = build_pair_features(feats[i], feats[j], li)
        dist = oracle.predict_distribution(x)
        vi = objective_value(db.records[(wid, space72.configs[i])], space72, Objective.TIME)
        vj = objective_value(db.records[(wid, space72.configs[j])], space72, Objective.TIME)
        assert dist[int(discretize_label(vj / vi))] == 1.0
        assert dist.sum() == 1.0


def test_perfect_model_satisfies_model_contract(space72):
    db = generate_database(GenParams(n_workloads=1, master_seed=3, metric_dimension=6), space72)
    oracle = PerfectModel(db, "w000", Objective.TIME)
    assert oracle.dim == 2 * 10 + 6
    with pytest.raises(DimensionMismatch):
        oracle.predict_distribution(np.zeros(10))


# --- persistence ----------------------------------------------------------------


def test_model_save_load_round_trip(tmp_path):
    model = train(separable_samples(), ModelParams(seed=4))
    path = tmp_path / "model.bin"
    save_model(model, path)
    loaded = load_model(path)
    probe = np.linspace(-1, 1, 17)[:, None]
    assert np.array_equal(
        model.predict_distribution_batch(probe), loaded.predict_distribution_batch(probe)
    )
    assert loaded.dim == model.dim and loaded.params == model.params


def test_model_load_rejects_garbage(tmp_path):
    with pytest.raises(ModelFormatError):
        parse_model(b"not a model")
    blob = dump_model(train(separable_samples(), ModelParams()))
    tampered = blob[:4] + (99).to_bytes(4, "little") + blob[8:]
    with pytest.raises(ModelFormatError, match="version"):
        parse_model(tampered)
