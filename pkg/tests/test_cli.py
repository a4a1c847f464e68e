import json
import shutil

import pytest

from touchauth.cli import main
from tests.conftest import tiny_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = tiny_config(seed=9).data
    cfg.pop("seed")
    (d / "config.json").write_text(json.dumps(cfg))
    assert main(["synth", "--users", "4", "--swipes", "40", "--seed", "9", "-o", str(d / "raw")]) == 0
    assert main(["ingest", "--events", str(d / "raw/events.csv"), "-o", str(d / "ing")]) == 0
    assert main(["extract", "--swipes", str(d / "ing/swipes.csv"), "-o", str(d / "feat")]) == 0
    return d


def run_evaluate(ws, out):
    return main(["evaluate", "--config", str(ws / "config.json"), "--seed", "9",
                 "--features", str(ws / "feat/features.csv"), "-o", str(ws / out)])


def test_pipeline_outputs(workspace):
    ingest = json.loads((workspace / "ing/ingest_report.json").read_text())
    assert ingest["swipes"] == ingest["total_swipes"] == 160
    header = (workspace / "feat/features.csv").read_text().splitlines()[0]
    assert header.startswith("user_id,device,swipe_id,")
    assert main(["window", "--features", str(workspace / "feat/features.csv"), "-o", str(workspace / "win")]) == 0
    rows = (workspace / "win/windows.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 36


def snapshot(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_evaluate_is_byte_identical(workspace):
    # identical config includes the output directory, so rerun into the same place
    assert run_evaluate(workspace, "eval_a") == 0
    first = snapshot(workspace / "eval_a")
    shutil.rmtree(workspace / "eval_a")
    assert run_evaluate(workspace, "eval_a") == 0
    second = snapshot(workspace / "eval_a")
    assert any(n.endswith(".model.json") for n in first)
    assert any(n.endswith(".gan.json") for n in first)
    assert sorted(first) == sorted(second)
    for name in first:
        assert first[name] == second[name], name


def test_report_command(workspace, capsys):
    if not (workspace / "eval_a/report.json").exists():
        run_evaluate(workspace, "eval_a")
    capsys.readouterr()
    assert main(["report", "--report", str(workspace / "eval_a/report.json"), "--format", "csv",
                 "-o", str(workspace / "rep")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("user,algorithm,mode,scenario,FAR,FRR,HTER")


def test_train_attack_pca(workspace):
    feats = str(workspace / "feat/features.csv")
    common = ["--config", str(workspace / "config.json"), "--seed", "9"]
    assert main(["train", "--features", feats, "--user", "u01", "--algorithm", "gbt", "--mode", "vanilla",
                 *common, "-o", str(workspace / "tr")]) == 0
    assert (workspace / "tr/models/u01_gbt_vanilla.model.json").is_file()
    assert main(["attack", "--features", feats, "--scenario", "population_same", "--n", "7",
                 *common, "-o", str(workspace / "att")]) == 0
    assert len((workspace / "att/attack_population_same.csv").read_text().splitlines()) == 8
    assert main(["pca", "--features", feats, "--user", "u01", *common, "-o", str(workspace / "pca")]) == 0
    lines = (workspace / "pca/pca_u01_gan.csv").read_text().splitlines()
    assert lines[0] == "label,pc1,pc2"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"genuine", "impostor", "genuine_synthetic",
                                                      "impostor_synthetic"}


def test_population_different_needs_attack_features(workspace, capsys):
    code = main(["evaluate", "--seed", "1", "--features", str(workspace / "feat/features.csv"),
                 "--scenario", "population_different", "-o", str(workspace / "x")])
    assert code == 2
    assert "--attack-features" in capsys.readouterr().err


def test_missing_seed_is_config_error(workspace, capsys):
    assert main(["synth", "-o", str(workspace / "noseed")]) == 2
    assert "seed" in capsys.readouterr().err


def test_missing_input_is_data_error(workspace, capsys):
    assert main(["extract", "--swipes", str(workspace / "nope.csv"), "-o", str(workspace / "y")]) == 3
    assert "nope.csv" in capsys.readouterr().err


def test_unknown_config_key(workspace, capsys):
    (workspace / "bad.json").write_text(json.dumps({"windw": {"p": 3}}))
    assert main(["window", "--config", str(workspace / "bad.json"),
                 "--features", str(workspace / "feat/features.csv"), "-o", str(workspace / "z")]) == 2
    assert "windw" in capsys.readouterr().err
