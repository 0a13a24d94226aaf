import json
import os

import numpy as np
import pytest

from softtree import save_csv
from softtree.cli import main
from softtree.synth import make_tabular


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    ds = make_tabular(120, 3, 2, 2, informative_numeric=2, informative_categorical=1,
                      class_sep=1.5, cat_sharpness=0.4, label_noise=0.1, seed=8)
    path = tmp_path_factory.mktemp("data") / "toy.csv"
    save_csv(ds, str(path))
    return str(path), ",".join(ds.categorical_codes)


def run_cli(*argv):
    return main(list(argv))


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestPipeline:
    def test_distill_train_predict_export(self, data_csv, tmp_path):
        data, cats = data_csv
        soft = str(tmp_path / "soft.csv")
        tree = str(tmp_path / "tree.json")
        preds = str(tmp_path / "preds.csv")
        rules = str(tmp_path / "rules.txt")
        tree2 = str(tmp_path / "tree2.json")

        assert run_cli("distill", "--data", data, "--label", "label",
                       "--categorical", cats, "--folds", "4", "--repeats", "2",
                       "--n-trees", "15", "--seed", "7", "--out", soft) == 0
        assert os.path.exists(soft)
        manifest = json.loads(read(soft + ".manifest.json"))
        assert manifest["kind"] == "soft_labels"
        assert manifest["seed"] == 7
        assert data in manifest["inputs"]
        assert manifest["dataset"]["n_classes"] == 2

        assert run_cli("train", "--data", data, "--label", "label",
                       "--categorical", cats, "--soft-labels", soft,
                       "--alpha", "0.2", "--min-leaf", "5", "--out", tree) == 0
        payload = json.loads(read(tree))
        assert payload["format"] == "softtree.tree/1"
        assert payload["config"]["alpha"] == 0.2
        assert payload["dataset"]["feature_names"]

        assert run_cli("predict", "--data", data, "--tree", tree, "--out", preds) == 0
        lines = read(preds).decode().splitlines()
        assert lines[0].startswith("index,prediction,p_0")
        assert len(lines) == 121

        assert run_cli("export-rules", "--tree", tree, "--out", rules) == 0
        text = read(rules).decode()
        assert "THEN class=" in text

        assert run_cli("export-tree", "--tree", tree, "--out", tree2) == 0
        assert json.loads(read(tree2))["nodes"] == payload["nodes"]

    def test_identical_invocations_byte_identical(self, data_csv, tmp_path):
        data, cats = data_csv
        a = str(tmp_path / "a.csv")
        b = str(tmp_path / "b.csv")
        args = ["distill", "--data", data, "--label", "label", "--categorical", cats,
                "--folds", "3", "--repeats", "2", "--n-trees", "10", "--seed", "3"]
        assert run_cli(*args, "--out", a) == 0
        assert run_cli(*args, "--out", b) == 0
        assert read(a) == read(b)
        ma = json.loads(read(a + ".manifest.json"))
        mb = json.loads(read(b + ".manifest.json"))
        for m in (ma, mb):  # only the recorded output path may differ
            m.pop("artifact")
            m.pop("settings_sha256")
            m["settings"].pop("out")
        assert json.dumps(ma, sort_keys=True) == json.dumps(mb, sort_keys=True)

    def test_jobs_flag_does_not_change_artifacts(self, data_csv, tmp_path, jobs):
        data, cats = data_csv
        one = str(tmp_path / "one.csv")
        two = str(tmp_path / "two.csv")
        args = ["distill", "--data", data, "--label", "label", "--categorical", cats,
                "--folds", "3", "--repeats", "2", "--n-trees", "10", "--seed", "3"]
        assert run_cli(*args, "--jobs", "1", "--out", one) == 0
        assert run_cli(*args, "--jobs", str(jobs), "--out", two) == 0
        assert read(one) == read(two)

    def test_eval_and_gridsearch(self, data_csv, tmp_path):
        data, cats = data_csv
        report = str(tmp_path / "report.json")
        curves = str(tmp_path / "curves.csv")
        assert run_cli("eval", "--data", data, "--label", "label",
                       "--categorical", cats, "--runs", "1",
                       "--alpha-grid", "0.2,1.0", "--folds", "3", "--repeats", "1",
                       "--n-trees", "10", "--seed", "5",
                       "--out", report, "--curves", curves) == 0
        payload = json.loads(read(report))
        assert payload["alpha_selection"] == "validation"
        assert payload["suggested_default_alpha"] == 0.2
        assert len(payload["runs"]) == 1
        assert os.path.exists(curves + ".manifest.json")

        grid_out = str(tmp_path / "grid.csv")
        assert run_cli("gridsearch", "--data", data, "--label", "label",
                       "--categorical", cats, "--runs", "1",
                       "--alpha-grid", "0.2,1.0", "--folds", "3", "--repeats", "1",
                       "--n-trees", "10", "--seed", "5", "--out", grid_out) == 0
        assert read(grid_out) == read(curves)

    def test_train_with_temperature(self, data_csv, tmp_path):
        data, cats = data_csv
        raw = str(tmp_path / "raw.csv")
        lines = ["index,p_0,p_1"] + [f"{i},{(-1) ** i * 3.0},0.0" for i in range(120)]
        with open(raw, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        tree = str(tmp_path / "tree.json")
        assert run_cli("train", "--data", data, "--label", "label",
                       "--categorical", cats, "--soft-labels", raw,
                       "--temperature", "4.0", "--out", tree) == 0


class TestErrors:
    def test_gridsearch_without_data_is_usage_error(self, capsys):
        code = run_cli("gridsearch", "--out", "x.csv")
        assert code == 1
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: usage:") and "\n" not in err

    def test_missing_input_file_is_data_error(self, tmp_path, capsys):
        code = run_cli("predict", "--data", str(tmp_path / "none.csv"),
                       "--tree", str(tmp_path / "none.json"),
                       "--out", str(tmp_path / "p.csv"))
        assert code == 2
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: data:") and "\n" not in err

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run_cli("distill", "--frobnicate") == 1

    def test_unknown_subcommand(self, capsys):
        assert run_cli("transmogrify") == 1

    def test_bad_alpha_is_usage_error(self, data_csv, tmp_path, capsys):
        data, cats = data_csv
        code = run_cli("train", "--data", data, "--label", "label",
                       "--soft-labels", str(tmp_path / "missing.csv"),
                       "--alpha", "7", "--out", str(tmp_path / "t.json"))
        assert code in (1, 2)  # bad alpha (1) surfaces before/along missing file (2)

    def test_internal_error_is_exit_3(self, data_csv, tmp_path, capsys, monkeypatch):
        import softtree.cli as cli_mod
        data, cats = data_csv

        def boom(*args, **kwargs):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr(cli_mod, "run_experiment", boom)
        code = run_cli("eval", "--data", data, "--label", "label",
                       "--categorical", cats, "--runs", "1",
                       "--out", str(tmp_path / "r.json"))
        assert code == 3
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: internal:")


class TestConfigPrecedence:
    def test_config_file_overrides_defaults_flags_override_config(self, data_csv, tmp_path):
        data, cats = data_csv
        soft = str(tmp_path / "s.csv")
        assert run_cli("distill", "--data", data, "--label", "label",
                       "--categorical", cats, "--folds", "3", "--repeats", "1",
                       "--n-trees", "10", "--out", soft) == 0

        cfg_path = str(tmp_path / "cfg.json")
        with open(cfg_path, "w") as fh:
            json.dump({"alpha": 0.9, "min_leaf": 3}, fh)

        out1 = str(tmp_path / "t1.json")
        assert run_cli("train", "--data", data, "--label", "label",
                       "--categorical", cats, "--soft-labels", soft,
                       "--config", cfg_path, "--out", out1) == 0
        payload = json.loads(read(out1))
        assert payload["config"]["alpha"] == 0.9
        assert payload["config"]["min_leaf"] == 3

        out2 = str(tmp_path / "t2.json")
        assert run_cli("train", "--data", data, "--label", "label",
                       "--categorical", cats, "--soft-labels", soft,
                       "--config", cfg_path, "--alpha", "0.1", "--out", out2) == 0
        assert json.loads(read(out2))["config"]["alpha"] == 0.1

    def test_unknown_config_key_rejected(self, data_csv, tmp_path, capsys):
        data, _ = data_csv
        cfg_path = str(tmp_path / "cfg.json")
        with open(cfg_path, "w") as fh:
            json.dump({"bogus_key": 1}, fh)
        code = run_cli("train", "--data", data, "--label", "label",
                       "--soft-labels", "x.csv", "--config", cfg_path,
                       "--out", str(tmp_path / "t.json"))
        assert code == 1
        assert "bogus_key" in capsys.readouterr().err
