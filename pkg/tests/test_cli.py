import csv

import pytest

from bdesn.cli import main


def read_runs(path, drop=("train_seconds",)):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in row.items() if k not in drop} for row in rows]


@pytest.fixture(scope="module")
def task(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "two-freq-sinusoid", "--n-train", "40", "--n-test", "20",
                 "--length", "60", "--noise", "0.2", "--seed", "1", "--out", str(out)]) == 0
    return out / "two-freq-sinusoid_TRAIN.csv", out / "two-freq-sinusoid_TEST.csv"


@pytest.fixture(scope="module")
def small_configs(tmp_path_factory):
    d = tmp_path_factory.mktemp("cfg")
    (d / "esn.cfg").write_text("model = esn\nn_units = 40\nridge = 0.01\n")
    (d / "bdesn.cfg").write_text(
        "model = bdesn\nn_units = 30\nn_components = 8\nhidden = 16\nepochs = 30\n"
        "batch_size = full\nlearning_rate = 0.01\n"
    )
    return d / "esn.cfg", d / "bdesn.cfg"


def bench(task, configs, out, seed=7, runs=2):
    argv = ["bench", "--train", str(task[0]), "--test", str(task[1]), "--runs", str(runs),
            "--seed", str(seed), "--out", str(out)]
    for c in configs:
        argv += ["--config", str(c)]
    return main(argv)


def test_bench_writes_artifacts(task, small_configs, tmp_path, capsys):
    assert bench(task, small_configs, tmp_path) == 0
    assert (tmp_path / "report.txt").read_text().startswith("Dataset")
    rows = read_runs(tmp_path / "runs.csv")
    assert [(r["model"], r["seed"]) for r in rows] == [("esn", "7"), ("esn", "8"), ("bdesn", "7"), ("bdesn", "8")]
    assert sorted(p.name for p in (tmp_path / "trainlogs").iterdir()) == [
        "two-freq-sinusoid_bdesn_run0.csv", "two-freq-sinusoid_bdesn_run1.csv"]
    assert "ESN" in capsys.readouterr().out


def test_bench_deterministic_modulo_timing(task, small_configs, tmp_path):
    assert bench(task, small_configs, tmp_path / "a") == 0
    assert bench(task, small_configs, tmp_path / "b") == 0
    assert read_runs(tmp_path / "a" / "runs.csv") == read_runs(tmp_path / "b" / "runs.csv")
    assert (tmp_path / "a" / "trainlogs" / "two-freq-sinusoid_bdesn_run1.csv").read_bytes() == (
        tmp_path / "b" / "trainlogs" / "two-freq-sinusoid_bdesn_run1.csv").read_bytes()


@pytest.mark.parametrize("which", [0, 1])
def test_train_eval_reproduces_bench(task, small_configs, tmp_path, which):
    cfg = small_configs[which]
    assert bench(task, [cfg], tmp_path / "bench", seed=5, runs=1) == 0
    expected = read_runs(tmp_path / "bench" / "runs.csv")[0]
    model = tmp_path / "model.json"
    assert main(["train", "--train", str(task[0]), "--config", str(cfg), "--seed", "5",
                 "--out", str(model), "--log", str(tmp_path / "log.csv")]) == 0
    assert main(["eval", str(model), "--test", str(task[1]), "--out", str(tmp_path / "m.txt")]) == 0
    text = (tmp_path / "m.txt").read_text()
    assert text == f"accuracy = {expected['accuracy']}\nf1 = {expected['f1']}\n"


def test_search_writes_loadable_config(task, tmp_path):
    space = tmp_path / "space.txt"
    space.write_text("n_units = choice 20 30\ndensity = 0.2\n")
    best = tmp_path / "best.cfg"
    assert main(["search", "--train", str(task[0]), "--model", "esn", "--space", str(space),
                 "--trials", "2", "--out", str(best)]) == 0
    assert main(["train", "--train", str(task[0]), "--config", str(best),
                 "--out", str(tmp_path / "m.json")]) == 0


def test_missing_config_names_path(task, tmp_path, capsys):
    missing = tmp_path / "absent.cfg"
    code = main(["train", "--train", str(task[0]), "--config", str(missing), "--out", str(tmp_path / "m")])
    assert code != 0
    assert str(missing) in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(task):
    assert main(["train", "--train", str(task[0]), "--out", "x", "--bogus"]) == 2


def test_import_command(tmp_path):
    ts = "@classLabel true a b\n@data\n1,2:3,4:a\n5,6:7,8:b\n"
    (tmp_path / "x.ts").write_text(ts)
    assert main(["import", "ts", str(tmp_path / "x.ts"), str(tmp_path / "x.ts"),
                 "--name", "X", "--out", str(tmp_path / "csv")]) == 0
    assert (tmp_path / "csv" / "X_TRAIN.csv").read_text().splitlines()[0] == "series_id,label,t,x1,x2"


def test_bad_data_file_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("series_id,label,t,x1\na,0,0,1,2\n")
    assert main(["train", "--train", str(bad), "--out", str(tmp_path / "m")]) == 1
    assert "line 2" in capsys.readouterr().err
