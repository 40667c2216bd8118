import json

import pytest

from plmcl.cli import main

SPEC = """\
n_images = 150
n_features = 6
n_classes = 4
target_label_cardinality = 1.6
seed = 2
"""

TRAIN = """\
# small plmcl run
loss = plmcl
epochs = 3
hidden_width = 8
batch_size = 32
lambda = 4.0
"""


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "spec.cfg").write_text(SPEC)
    (tmp_path / "train.cfg").write_text(TRAIN)
    assert main(["gen-data", "--spec", str(tmp_path / "spec.cfg"),
                 "--out", str(tmp_path / "data")]) == 0
    assert main(["mask", "--setting", "sspl", "--fraction", "0.4", "--seed", "1",
                 "--in", str(tmp_path / "data" / "train.csv"),
                 "--out", str(tmp_path / "obs.csv")]) == 0
    return tmp_path


def train_args(ws, out, config="train.cfg"):
    return ["train", "--config", str(ws / config), "--data", str(ws / "data"),
            "--obs", str(ws / "obs.csv"), "--out", str(ws / out)]


class TestCommands:
    def test_gen_data_outputs(self, workspace):
        names = sorted(p.name for p in (workspace / "data").iterdir())
        assert names == ["teacher.json", "test.csv", "train.csv"]

    def test_gen_data_deterministic(self, workspace):
        assert main(["gen-data", "--spec", str(workspace / "spec.cfg"),
                     "--out", str(workspace / "again")]) == 0
        for name in ("train.csv", "test.csv", "teacher.json"):
            assert (workspace / "data" / name).read_bytes() == \
                (workspace / "again" / name).read_bytes()

    def test_train_and_eval(self, workspace, capsys):
        assert main(train_args(workspace, "run")) == 0
        run = workspace / "run"
        summary = json.loads((run / "summary.json").read_text())
        assert summary["config"]["loss"] == "plmcl" and summary["config"]["lam"] == 4.0
        lines = (run / "metrics.csv").read_text().splitlines()
        assert len(lines) == 4 and lines[0].startswith("epoch,phi,")
        capsys.readouterr()
        assert main(["eval", "--model", str(run / "model.json"),
                     "--data", str(workspace / "data")]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["map"] == pytest.approx(summary["best_map"], rel=1e-12)
        assert len(result["per_class_ap"]) == 4

    def test_trace(self, workspace):
        assert main(train_args(workspace, "run") + ["--trace-pseudo"]) == 0
        lines = (workspace / "run" / "pseudo_trace.jsonl").read_text().splitlines()
        assert len(lines) == 3 * 150
        record = json.loads(lines[0])
        assert set(record) == {"epoch", "id", "latent", "soft", "momentum"}
        assert len(record["soft"]) == 4

    def test_runs_byte_identical(self, workspace):
        assert main(train_args(workspace, "a")) == 0
        assert main(train_args(workspace, "b")) == 0
        for name in ("metrics.csv", "summary.json", "model.json"):
            assert (workspace / "a" / name).read_bytes() == (workspace / "b" / name).read_bytes()

    def test_sweep(self, workspace):
        (workspace / "sweep.cfg").write_text(
            "epochs = 2\nhidden_width = 4\n"
            "sweep.settings = sspl:50%, fspl\nsweep.losses = plmcl, an\nsweep.seeds = 0, 1\n"
            "data.n_images = 80\ndata.n_features = 5\ndata.n_classes = 3\n"
            "data.target_label_cardinality = 1.4\n")
        for out in ("s1", "s2"):
            assert main(["sweep", "--config", str(workspace / "sweep.cfg"),
                         "--out", str(workspace / out)]) == 0
        runs = (workspace / "s1" / "runs.csv").read_text().splitlines()
        assert len(runs) == 1 + 8
        for name in ("runs.csv", "summary.csv"):
            assert (workspace / "s1" / name).read_bytes() == \
                (workspace / "s2" / name).read_bytes()


class TestExitCodes:
    def test_unknown_config_key(self, workspace):
        (workspace / "bad.cfg").write_text("learning_rate = 0.1\n")
        assert main(train_args(workspace, "x", "bad.cfg")) == 2

    def test_bad_config_value(self, workspace):
        (workspace / "bad.cfg").write_text("epochs = ten\n")
        assert main(train_args(workspace, "x", "bad.cfg")) == 2

    def test_invalid_config_range(self, workspace):
        (workspace / "bad.cfg").write_text("beta1 = 1.5\n")
        assert main(train_args(workspace, "x", "bad.cfg")) == 2

    def test_missing_config(self, workspace):
        assert main(train_args(workspace, "x", "nope.cfg")) == 2

    def test_bad_data(self, workspace):
        (workspace / "obs.csv").write_text("id,f0,y0\n0,0.1\n")
        assert main(train_args(workspace, "x")) == 3

    def test_mismatched_observations(self, workspace):
        (workspace / "obs.csv").write_text("id,f0,y0\n0,0.1,1\n")
        assert main(train_args(workspace, "x")) == 3

    def test_eval_missing_model(self, workspace):
        assert main(["eval", "--model", str(workspace / "none.json"),
                     "--data", str(workspace / "data")]) == 3

    def test_numerical_abort(self, workspace):
        (workspace / "hot.cfg").write_text("reg_weight = 1e300\nexpected_positives = 1e10\n")
        assert main(train_args(workspace, "x", "hot.cfg")) == 4

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["train"])
        assert exc.value.code == 2
