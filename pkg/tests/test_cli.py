import csv
import json

import jsonschema
import pytest

from resonant.cli import EVAL_JSON_SCHEMA, main
from resonant.io import load_dataset


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A small scenario-1 split at 10 dB with a trained model."""
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--scenario", "1", "--sweep", "10", "--train-per-class", "3", "--test-per-class", "150",
                 "--seed", "4", "--out-train", str(d / "train.json"), "--out-test", str(d / "test.json")]) == 0
    assert main(["train", "--data", str(d / "train.json"), "--out", str(d / "model.json")]) == 0
    return d


def test_synth_writes_requested_sizes(workdir):
    train, test = load_dataset(workdir / "train.json"), load_dataset(workdir / "test.json")
    assert (len(train), len(test), train.T) == (6, 300, 180)


def test_eval_nf_beats_td(capsys, workdir):
    code, out, _ = run(capsys, "eval", "--model", workdir / "model.json", "--data", workdir / "test.json", "--json")
    assert code == 0
    nf = json.loads(out)
    code, out, _ = run(capsys, "eval", "--model", workdir / "model.json", "--data", workdir / "test.json",
                       "--baseline", "td", "--json")
    td = json.loads(out)
    assert nf["method"] == "NF" and td["method"] == "TD"
    assert 0.0 <= nf["error_rate"] <= 0.15
    assert nf["error_rate"] < td["error_rate"]


def test_eval_json_matches_schema_and_table(capsys, workdir):
    _, out, _ = run(capsys, "eval", "--model", workdir / "model.json", "--data", workdir / "test.json", "--json")
    doc = json.loads(out)
    jsonschema.validate(doc, EVAL_JSON_SCHEMA)
    code, table, _ = run(capsys, "eval", "--model", workdir / "model.json", "--data", workdir / "test.json")
    assert code == 0
    line = [l for l in table.splitlines() if l.startswith("error_rate:")][0]
    assert float(line.split()[1]) == pytest.approx(doc["error_rate"], abs=5e-5)
    assert "F1" in table and "F2" in table


def test_predict_csv(capsys, workdir):
    out_csv = workdir / "pred.csv"
    code, _, _ = run(capsys, "predict", "--model", workdir / "model.json", "--data", workdir / "test.json",
                     "--out", out_csv)
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 300
    assert [int(r["index"]) for r in rows] == list(range(300))
    assert {r["predicted_label"] for r in rows} <= {"1", "2"}


def test_inspect(capsys, workdir):
    code, out, _ = run(capsys, "inspect", "--model", workdir / "model.json")
    assert code == 0
    assert out.startswith("regions M:")
    assert "support vectors" in out and "td baseline" in out


def test_outputs_byte_identical_across_runs(tmp_path):
    for tag in ("a", "b"):
        assert main(["synth", "--scenario", "2", "--sweep", "0.1", "--test-per-class", "5", "--seed", "1",
                     "--out-train", str(tmp_path / f"tr{tag}.json"), "--out-test", str(tmp_path / f"te{tag}.json")]) == 0
        assert main(["train", "--data", str(tmp_path / f"tr{tag}.json"), "--out", str(tmp_path / f"m{tag}.json")]) == 0
        assert main(["predict", "--model", str(tmp_path / f"m{tag}.json"), "--data", str(tmp_path / f"te{tag}.json"),
                     "--out", str(tmp_path / f"p{tag}.csv")]) == 0
    for name in ("tr{}.json", "te{}.json", "m{}.json", "p{}.csv"):
        assert (tmp_path / name.format("a")).read_bytes() == (tmp_path / name.format("b")).read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    def synth(tag, *extra):
        return main(["synth", "--scenario", "1", "--sweep", "20", "--test-per-class", "2", *extra,
                     "--out-train", str(tmp_path / f"tr{tag}.json"), "--out-test", str(tmp_path / f"te{tag}.json")])
    monkeypatch.setenv("RESONANT_SEED", "17")
    assert synth("env") == 0
    monkeypatch.delenv("RESONANT_SEED")
    assert synth("flag", "--seed", "17") == 0
    assert synth("default") == 0
    env, flag = (tmp_path / "trenv.json").read_bytes(), (tmp_path / "trflag.json").read_bytes()
    assert env == flag != (tmp_path / "trdefault.json").read_bytes()


def test_bad_seed_environment_is_usage_error(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RESONANT_SEED", "abc")
    code, _, err = run(capsys, "synth", "--scenario", "1", "--sweep", "10",
                       "--out-train", tmp_path / "a.json", "--out-test", tmp_path / "b.json")
    assert code == 1 and "RESONANT_SEED" in err


def test_sweep_csv(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--scenario", "1", "--values", "20,25", "--seeds", "2",
                     "--test-per-class", "10", "--out", tmp_path / "s.csv")
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "s.csv").open()))
    assert len(rows) == 4
    assert {(float(r["sweep_value"]), r["method"]) for r in rows} == {(v, m) for v in (20, 25) for m in ("NF", "TD")}


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["synth", "--scenario", "4", "--sweep", "1", "--out-train", "a", "--out-test", "b"],
    ["train", "--data", "x.json", "--out", "m.json", "--kernel", "sigmoid"],
    ["train", "--data", "x.json", "--out", "m.json", "--svm-c", "-1"],
    ["sweep", "--scenario", "1", "--values", "a,b", "--out", "s.csv"],
])
def test_usage_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and err and not out


def test_c_percent_range_is_usage_error(capsys, workdir):
    code, _, err = run(capsys, "train", "--data", workdir / "train.json", "--out", workdir / "x.json",
                       "--c-percent", "0")
    assert code == 1 and "c-percent" in err
    assert not (workdir / "x.json").exists()


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--data", tmp_path / "nope.json", "--out", tmp_path / "m.json")
    assert code == 2 and "nope.json" in err


def test_predict_on_empty_dataset_exit_2(capsys, workdir, tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"version": 1, "T": 180, "num_classes": 2, "signals": []}))
    code, _, err = run(capsys, "predict", "--model", workdir / "model.json", "--data", empty,
                       "--out", tmp_path / "p.csv")
    assert code == 2 and "no signals" in err


def test_invalid_model_exit_2(capsys, workdir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text((workdir / "model.json").read_text().replace('"version":1', '"version":9', 1))
    code, _, err = run(capsys, "inspect", "--model", bad)
    assert code == 2 and "version" in err


def test_all_zero_training_is_data_error(capsys, tmp_path):
    p = tmp_path / "zeros.json"
    sig = {"re": [0.0] * 20, "im": [0.0] * 20}
    p.write_text(json.dumps({"version": 1, "T": 20, "num_classes": 2,
                             "signals": [{"label": 1, **sig}, {"label": 2, **sig}]}))
    code, _, err = run(capsys, "train", "--data", p, "--out", tmp_path / "m.json")
    assert code in (2, 3) and err
