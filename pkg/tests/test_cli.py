import json

import pytest

from cloudtuner.cli import main
from cloudtuner.perfdb import default_space, format_space

PARAMS_TEXT = """\
n_workloads=4
master_seed=23
metric_dimension=8
profile.work_core_s=50000:500000
profile.serial_frac=0:0.01
profile.mem_demand_gb_per_core=0:1.8
profile.cpu_speed_weight=0.5:1
profile.shuffle_coef=0:0
profile.noise_sigma=0:0
family_speed.c4=1.6
family_speed.m4=1.0
family_speed.r4=0.7
"""

EVAL_CONFIG = {
    "repeats": 2,
    "master_seed": 3,
    "max_pairs_per_workload": 120,
    "model": {"n_trees": 10},
    "methods": [
        {"name": "scout", "params": {"start_policy": "random"}},
        {"name": "random", "params": {"k": 4}},
    ],
}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "gen.params").write_text(PARAMS_TEXT)
    (tmp_path / "eval.json").write_text(json.dumps(EVAL_CONFIG))
    return tmp_path


def run(args):
    return main([str(a) for a in args])


def test_gen_writes_database_and_space(workdir, capsys):
    code = run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv",
                "--out-space", workdir / "space.csv"])
    assert code == 0
    assert (workdir / "db.csv").read_text().startswith("workload_id,")
    assert (workdir / "space.csv").read_text() == format_space(default_space())
    assert "4 workloads x 72 configs" in capsys.readouterr().out


def test_gen_then_eval_end_to_end(workdir, capsys):
    assert run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"]) == 0
    code = run(["eval", "--db", workdir / "db.csv", "--config", workdir / "eval.json",
                "--out", workdir / "report.json"])
    assert code == 0
    report = json.loads((workdir / "report.json").read_text())
    assert {m["name"] for m in report["methods"]} == {"scout", "random"}


def test_eval_determinism_including_threads(workdir):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    base = ["eval", "--db", workdir / "db.csv", "--config", workdir / "eval.json"]
    run(base + ["--out", workdir / "r1.json", "--threads", 1])
    run(base + ["--out", workdir / "r2.json", "--threads", 1])
    run(base + ["--out", workdir / "r4.json", "--threads", 4])
    b1 = (workdir / "r1.json").read_bytes()
    assert b1 == (workdir / "r2.json").read_bytes()
    assert b1 == (workdir / "r4.json").read_bytes()


def test_gen_determinism(workdir):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "a.csv"])
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "b.csv"])
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


def test_train_then_search_with_model(workdir, capsys):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    code = run(["train", "--db", workdir / "db.csv", "--exclude", "w000",
                "--n-trees", 10, "--max-pairs", 100, "--model-out", workdir / "model.bin"])
    assert code == 0
    code = run(["search", "--db", workdir / "db.csv", "--workload", "w000",
                "--method", "scout", "--model", workdir / "model.bin",
                "--trace-out", workdir / "trace.json"])
    assert code == 0
    out = capsys.readouterr().out
    assert "stop=" in out
    trace = json.loads((workdir / "trace.json").read_text())
    assert trace["trace"]["method"] == "scout"
    assert trace["normalized_perf"] >= 1.0


def test_search_scout_without_model_is_usage_error(workdir):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    with pytest.raises(SystemExit) as err:
        run(["search", "--db", workdir / "db.csv", "--workload", "w000", "--method", "scout"])
    assert err.value.code == 2


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as err:
        run(["frobnicate"])
    assert err.value.code == 2


def test_baseline_methods_via_cli(workdir, capsys):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    for method in ("random", "coordinate_descent", "bayesopt"):
        code = run(["search", "--db", workdir / "db.csv", "--workload", "w001",
                    "--method", method, "--seed", 7])
        assert code == 0
    out = capsys.readouterr().out
    assert out.count("best=") == 3


def test_search_with_explicit_start_and_beta(workdir, capsys):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    code = run(["search", "--db", workdir / "db.csv", "--workload", "w002",
                "--method", "scout", "--train-exclude-self", "--max-pairs", "100",
                "--alpha", 0.4, "--beta", 3, "--start", "m4.xlarge.8"])
    assert code == 0


def test_missing_input_file_maps_to_io_error(workdir, capsys):
    code = run(["eval", "--db", workdir / "nope.csv", "--config", workdir / "eval.json",
                "--out", workdir / "r.json"])
    assert code == 10
    assert capsys.readouterr().err.startswith("io_error:")


def test_bad_database_maps_to_error_code(workdir, capsys):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    lines = (workdir / "db.csv").read_text().splitlines()
    (workdir / "broken.csv").write_text("\n".join(lines[:-1]) + "\n")
    code = run(["eval", "--db", workdir / "broken.csv", "--config", workdir / "eval.json",
                "--out", workdir / "r.json"])
    assert code == 4
    assert capsys.readouterr().err.startswith("incomplete_grid:")


def test_unknown_workload_exit_code(workdir, capsys):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    code = run(["search", "--db", workdir / "db.csv", "--workload", "zz", "--method", "random"])
    assert code == 6
    assert capsys.readouterr().err.startswith("unknown_workload:")


def test_env_var_overrides_flag(workdir, monkeypatch):
    monkeypatch.setenv("CLOUDTUNER_OUT", str(workdir / "env.csv"))
    code = run(["gen", "--params", workdir / "gen.params"])
    assert code == 0
    assert (workdir / "env.csv").exists()


def test_help_documents_flags_and_exit_codes(capsys):
    with pytest.raises(SystemExit) as err:
        run(["--help"])
    assert err.value.code == 0
    out = capsys.readouterr().out
    assert "exit codes" in out
    assert "CLOUDTUNER_" in out
    for sub in ("gen", "train", "search", "eval", "serve"):
        assert sub in out


def test_search_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        run(["search", "--help"])
    out = capsys.readouterr().out
    for flag in ("--alpha", "--beta", "--k", "--n-init", "--ei-stop", "--start", "--seed",
                 "--model", "--train-exclude-self", "--objective", "--method"):
        assert flag in out
    assert "0.5" in out  # alpha default
    assert "0.1" in out  # ei stop default


def test_eval_csv_format(workdir):
    run(["gen", "--params", workdir / "gen.params", "--out", workdir / "db.csv"])
    code = run(["eval", "--db", workdir / "db.csv", "--config", workdir / "eval.json",
                "--out", workdir / "report.csv", "--format", "csv"])
    assert code == 0
    assert (workdir / "report.csv").read_text().startswith("workload_id,")
