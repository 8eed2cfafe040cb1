import json
import subprocess
import sys

import pytest

from facs3d.cli import main

FAST = ["--epochs", "100", "--kernels", "linear,quadratic"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--out", str(root / "data"), "--happy", "6", "--sad", "6", "--seed", "3"]) == 0
    assert main(["extract", "--manifest", str(root / "data" / "manifest.json"), "--out", str(root / "f.csv")]) == 0
    assert main(["label", "--features", str(root / "f.csv"), "--out", str(root / "l.csv")]) == 0
    return root


def test_gen_extract_label(workdir):
    assert len(json.loads((workdir / "data" / "manifest.json").read_text())) == 12
    assert len((workdir / "f.csv").read_text().splitlines()) == 37
    header = (workdir / "l.csv").read_text().splitlines()[0]
    assert header.endswith("au1,au4,au6,au12,au15,au17,au25")


def test_eval_writes_reports_and_figures(workdir):
    out = workdir / "eval"
    assert main(["eval", "--labeled", str(workdir / "l.csv"), "--out", str(out), "--k", "3", *FAST]) == 0
    for stem in ("report_svm", "report_mlp"):
        for ext in ("md", "csv", "json", "png"):
            assert (out / f"{stem}.{ext}").stat().st_size > 0


def test_eval_no_figures(workdir):
    out = workdir / "nofig"
    assert main(["eval", "--labeled", str(workdir / "l.csv"), "--out", str(out), "--svm", "--k", "3",
                 "--no-figures", "--kernels", "linear"]) == 0
    assert not (out / "report_svm.png").exists() and not (out / "report_mlp.md").exists()


def test_report_rerenders(workdir, capsys, tmp_path):
    src = workdir / "eval" / "report_svm.json"
    if not src.exists():
        main(["eval", "--labeled", str(workdir / "l.csv"), "--out", str(workdir / "eval"), "--k", "3", *FAST])
    assert main(["report", str(src), "--format", "markdown", "--figure", str(tmp_path / "x.png")]) == 0
    assert capsys.readouterr().out == (workdir / "eval" / "report_svm.md").read_text()
    assert (tmp_path / "x.png").exists()


@pytest.mark.parametrize("model", ["svm", "mlp"])
def test_train(workdir, model):
    out = workdir / f"models_{model}"
    assert main(["train", "--labeled", str(workdir / "l.csv"), "--out", str(out), "--model", model,
                 "--aus", "1,12", "--epochs", "100"]) == 0
    assert json.loads((out / "model_au12.json").read_text())
    assert (out / "history_au1.csv").exists() == (model == "mlp")


def test_missing_point_is_data_error(workdir, tmp_path, capsys):
    doc = json.loads((workdir / "data" / "H001.json").read_text())
    doc["frames"][1]["points"] = [p for p in doc["frames"][1]["points"] if p[0] != 55]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    (tmp_path / "manifest.json").write_text(json.dumps(["bad.json"]))
    code = main(["extract", "--manifest", str(tmp_path / "manifest.json"), "--out", str(tmp_path / "f.csv")])
    err = capsys.readouterr().err
    assert code == 3
    assert "bad.json" in err and "55" in err and err.startswith("facs3d: data error:")
    assert not (tmp_path / "f.csv").exists()


@pytest.mark.parametrize("argv", [
    [],
    ["gen"],
    ["gen", "--out", "x", "--noise", "-1"],
    ["eval", "--labeled", "x", "--out", "y", "--kernels", "cubic"],
    ["eval", "--labeled", "x", "--out", "y", "--aus", "3"],
    ["label", "--features", "x", "--out", "y", "--epsilon", "-0.5"],
    ["bogus"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("facs3d: usage error:")


def test_missing_file_is_data_error(tmp_path, capsys):
    assert main(["label", "--features", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.csv")]) == 3
    assert "nope.csv" in capsys.readouterr().err


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FACS3D_SEED", "11")
    main(["gen", "--out", str(tmp_path / "a"), "--happy", "1", "--sad", "0"])
    main(["gen", "--out", str(tmp_path / "b"), "--happy", "1", "--sad", "0", "--seed", "11"])
    main(["gen", "--out", str(tmp_path / "c"), "--happy", "1", "--sad", "0", "--seed", "12"])
    a, b, c = ((tmp_path / d / "H001.json").read_text() for d in "abc")
    assert a == b != c
    monkeypatch.setenv("FACS3D_SEED", "eleven")
    assert main(["gen", "--out", str(tmp_path / "d")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "facs3d", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "pipeline" in res.stdout
