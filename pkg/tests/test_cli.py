import json
import subprocess
import sys

import numpy as np
import pytest

from treerules.cli import main
from treerules.interchange import import_model_json
from treerules.rulepredict import RulePredictor
from treerules.rules import read_rules_csv

from synth import write_loan_csv, write_schema_config


@pytest.fixture()
def workdir(tmp_path):
    write_loan_csv(tmp_path / "loans.csv", 400, seed=31)
    write_schema_config(tmp_path / "loans.schema")
    return tmp_path


def run(*argv) -> int:
    return main([str(a) for a in argv])


def train_dt(workdir, **extra):
    argv = [
        "train",
        "--kind", "dt",
        "--data", workdir / "loans.csv",
        "--schema", workdir / "loans.schema",
        "--out", workdir / "model.json",
    ]
    for key, value in extra.items():
        argv.extend([f"--{key.replace('_', '-')}", value])
    assert run(*argv) == 0
    return workdir / "model.json"


def extract(workdir, **extra):
    argv = [
        "extract",
        "--model", workdir / "model.json",
        "--rules-out", workdir / "rules.csv",
    ]
    for key, value in extra.items():
        argv.extend([f"--{key.replace('_', '-')}", value])
    assert run(*argv) == 0
    return workdir / "rules.csv"


class TestTrain:
    def test_dt_end_to_end(self, workdir, capsys):
        train_dt(workdir)
        out = capsys.readouterr().out
        assert "trained dt: 1 tree(s)" in out
        assert "train rows: 280, test rows: 120" in out
        model = import_model_json(workdir / "model.json")
        assert model.tree_.n_leaves <= 10
        assert model.tree_.max_depth() <= 5
        assert model.feature_names_in_[0] == "loan_amnt"

    def test_rf_defaults(self, workdir, capsys):
        assert run(
            "train", "--kind", "rf",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "model.json",
        ) == 0
        assert "trained rf: 5 tree(s)" in capsys.readouterr().out
        model = import_model_json(workdir / "model.json")
        assert len(model.trees_) == 5
        assert all(t.max_depth() <= 10 for t in model.trees_)

    def test_explicit_params_override_defaults(self, workdir):
        train_dt(workdir, max_depth="2", max_leaf_nodes="4")
        model = import_model_json(workdir / "model.json")
        assert model.tree_.max_depth() <= 2
        assert model.tree_.n_leaves <= 4

    def test_deterministic_given_seed(self, workdir):
        train_dt(workdir, seed="9")
        first = (workdir / "model.json").read_text()
        train_dt(workdir, seed="9")
        assert (workdir / "model.json").read_text() == first

    def test_bad_train_frac(self, workdir):
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "model.json",
            "--train-frac", "1.5",
        ) == 2

    def test_missing_schema_file(self, workdir):
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "nope.schema",
            "--out", workdir / "model.json",
        ) == 2

    def test_malformed_schema(self, workdir):
        (workdir / "bad.schema").write_text("features loan_amnt\n")
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "bad.schema",
            "--out", workdir / "model.json",
        ) == 2

    def test_corrupt_data_cell(self, workdir):
        text = (workdir / "loans.csv").read_text().splitlines()
        fields = text[1].split(",")
        fields[0] = "oops"
        text[1] = ",".join(fields)
        (workdir / "loans.csv").write_text("\n".join(text) + "\n")
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "model.json",
        ) == 1

    def test_missing_data_file(self, workdir):
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "absent.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "model.json",
        ) == 1

    def test_schema_found_via_config_dir(self, workdir, tmp_path_factory, monkeypatch):
        config_dir = tmp_path_factory.mktemp("config")
        write_schema_config(config_dir / "shared.schema")
        monkeypatch.setenv("TREERULES_CONFIG_DIR", str(config_dir))
        assert run(
            "train", "--kind", "dt",
            "--data", workdir / "loans.csv",
            "--schema", "shared.schema",
            "--out", workdir / "model.json",
        ) == 0


class TestExtractPredict:
    def test_extract_writes_rules_and_text(self, workdir, capsys):
        train_dt(workdir)
        extract(workdir, text_out=str(workdir / "rules.txt"))
        out = capsys.readouterr().out
        assert "rules written to" in out
        ruleset = read_rules_csv(workdir / "rules.csv")
        assert ruleset.model_kind == "tree"
        text = (workdir / "rules.txt").read_text()
        assert text.count("return [") == ruleset.n_rules

    def test_predict_matches_library(self, workdir):
        train_dt(workdir)
        extract(workdir)
        assert run(
            "predict",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "probs.csv",
        ) == 0
        ruleset = read_rules_csv(workdir / "rules.csv")
        lines = (workdir / "probs.csv").read_text().splitlines()
        assert lines[0] == "sample_index,p0,p1"
        assert len(lines) == 401
        parsed = np.array(
            [[float(f) for f in line.split(",")[1:]] for line in lines[1:]]
        )
        from treerules.data import LoadOptions, load_matrix_csv

        X = load_matrix_csv(workdir / "loans.csv", ruleset.feature_names, LoadOptions())
        expected = RulePredictor(ruleset).predict_proba(X)
        assert np.array_equal(parsed, expected)

    def test_compiled_flag_identical_output(self, workdir):
        train_dt(workdir)
        extract(workdir)
        common = [
            "predict",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
        ]
        assert run(*common, "--out", workdir / "a.csv") == 0
        assert run(*common, "--out", workdir / "b.csv", "--compiled") == 0
        assert (workdir / "a.csv").read_text() == (workdir / "b.csv").read_text()

    def test_predict_without_schema(self, workdir):
        # scoring needs only the feature columns named in the rule file
        train_dt(workdir)
        extract(workdir)
        assert run(
            "predict",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--out", workdir / "probs.csv",
        ) == 0

    def test_schema_name_mismatch(self, workdir):
        train_dt(workdir)
        extract(workdir)
        other = workdir / "other.schema"
        other.write_text(
            "features = a, b\ntarget = y\nlabel.good = 1\nlabel.bad = 0\n"
        )
        assert run(
            "predict",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--schema", other,
            "--out", workdir / "probs.csv",
        ) == 2

    def test_corrupt_rules(self, workdir):
        train_dt(workdir)
        extract(workdir)
        lines = (workdir / "rules.csv").read_text().splitlines()
        del lines[-1]
        (workdir / "rules.csv").write_text("\n".join(lines) + "\n")
        code = run(
            "predict",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--out", workdir / "probs.csv",
        )
        assert code == 1

    def test_corrupt_model_json(self, workdir):
        (workdir / "model.json").write_text('{"format_version": 99}')
        assert run(
            "extract",
            "--model", workdir / "model.json",
            "--rules-out", workdir / "rules.csv",
        ) == 1


class TestVerify:
    def test_exact(self, workdir, capsys):
        train_dt(workdir)
        extract(workdir)
        assert run(
            "verify",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--out", workdir / "report.csv",
        ) == 0
        out = capsys.readouterr().out
        assert "max_abs_difference: 0.0" in out
        assert "equivalence: exact" in out
        report = (workdir / "report.csv").read_text()
        assert "# max_abs_difference,0.0" in report

    def test_rf_exact_compiled(self, workdir):
        assert run(
            "train", "--kind", "rf",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "model.json",
        ) == 0
        extract(workdir)
        assert run(
            "verify",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--compiled",
        ) == 0

    def test_tampered_probability_exits_3(self, workdir, capsys):
        train_dt(workdir)
        extract(workdir)
        lines = (workdir / "rules.csv").read_text().splitlines()
        # nudge one leaf probability pair, keeping the row well formed
        fields = lines[-1].split(",")
        fields[-2], fields[-1] = "0.25", "0.75"
        lines[-1] = ",".join(fields)
        (workdir / "rules.csv").write_text("\n".join(lines) + "\n")
        assert run(
            "verify",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
        ) == 3
        assert "equivalence: FAILED" in capsys.readouterr().out

    def test_foreign_rules_name_mismatch(self, workdir):
        train_dt(workdir)
        extract(workdir)
        text = (workdir / "rules.csv").read_text().replace("loan_amnt", "amount")
        (workdir / "rules.csv").write_text(text)
        assert run(
            "verify",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
        ) == 2


class TestExplain:
    def setup_artifacts(self, workdir):
        train_dt(workdir)
        extract(workdir)
        (workdir / "dict.csv").write_text(
            "feature_name,description\nint_rate,interest rate\ndti,debt-to-income ratio\n"
        )

    def test_single_sample(self, workdir, capsys):
        self.setup_artifacts(workdir)
        assert run(
            "explain",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--sample", "3",
            "--out", workdir / "path.txt",
        ) == 0
        out = capsys.readouterr().out
        assert "decision 1:" in out
        assert (workdir / "path.txt").read_text().startswith("decision 1:")

    def test_group_with_dictionary_and_json(self, workdir, capsys):
        self.setup_artifacts(workdir)
        assert run(
            "explain",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--group", "1,4,7",
            "--dictionary", workdir / "dict.csv",
            "--json-out", workdir / "path.json",
        ) == 0
        document = json.loads((workdir / "path.json").read_text())
        assert document["kind"] == "group"
        assert document["sample_ref"] == [1, 4, 7]

    def test_sample_out_of_range(self, workdir):
        self.setup_artifacts(workdir)
        assert run(
            "explain",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--sample", "100000",
        ) == 2

    def test_bad_group_spec(self, workdir):
        self.setup_artifacts(workdir)
        assert run(
            "explain",
            "--model", workdir / "model.json",
            "--rules", workdir / "rules.csv",
            "--data", workdir / "loans.csv",
            "--group", "1,x",
        ) == 2

    def test_sample_and_group_mutually_exclusive(self, workdir):
        self.setup_artifacts(workdir)
        with pytest.raises(SystemExit) as excinfo:
            run(
                "explain",
                "--model", workdir / "model.json",
                "--rules", workdir / "rules.csv",
                "--data", workdir / "loans.csv",
                "--sample", "1",
                "--group", "2,3",
            )
        assert excinfo.value.code == 2


class TestReportSummarize:
    def test_report(self, workdir, capsys):
        train_dt(workdir)
        assert run(
            "report",
            "--model", workdir / "model.json",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "roc.csv",
        ) == 0
        assert "auc:" in capsys.readouterr().out
        lines = (workdir / "roc.csv").read_text().splitlines()
        assert lines[0] == "fpr,tpr"
        assert lines[1] == "0.0,0.0"
        assert lines[-2] == "1.0,1.0"
        assert lines[-1].startswith("# auc,")
        auc = float(lines[-1].split(",")[1])
        assert 0.5 < auc <= 1.0

    def test_summarize_stdout(self, workdir, capsys):
        assert run(
            "summarize",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
        ) == 0
        out = capsys.readouterr().out
        assert out.startswith("feature,target_class,count,mean,std,min,q25,q50,q75,max")
        assert "loan_amnt,0," in out

    def test_summarize_to_file(self, workdir, capsys):
        assert run(
            "summarize",
            "--data", workdir / "loans.csv",
            "--schema", workdir / "loans.schema",
            "--out", workdir / "summary.csv",
        ) == 0
        assert (workdir / "summary.csv").exists()


class TestParser:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            run("frobnicate")
        assert excinfo.value.code == 2

    def test_module_entry_point(self, workdir):
        result = subprocess.run(
            [
                sys.executable, "-m", "treerules",
                "train", "--kind", "dt",
                "--data", str(workdir / "loans.csv"),
                "--schema", str(workdir / "loans.schema"),
                "--out", str(workdir / "model.json"),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert "trained dt" in result.stdout
