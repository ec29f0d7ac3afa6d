import hashlib
import json

import pytest

from pccc.bench.cli import main


def digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--count", "10", "--out", str(out), "--seed", "3", "--size", "32"]) == 0
    return out


def test_synth_deterministic(tmp_path):
    args = ["synth", "--count", "200", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    assert len(json.loads((tmp_path / "a" / "manifest.json").read_text())["samples"]) == 200


def test_evaluate_happy_path(corpus, tmp_path, capsys):
    prefix = tmp_path / "ev"
    rc = main(["evaluate", "--method", "grayworld", "--manifest", str(corpus / "manifest.json"),
               "--split", "test", "--out-prefix", str(prefix)])
    assert rc == 0
    assert "Mean" in capsys.readouterr().out
    assert (tmp_path / "ev_summary.txt").read_text().startswith("Method")
    assert (tmp_path / "ev_summary.csv").read_text().startswith("method,mean")
    rows = (tmp_path / "ev_samples.csv").read_text().splitlines()
    assert rows[0] == "id,error_deg,method" and len(rows) == 3


def test_missing_manifest(tmp_path):
    assert main(["evaluate", "--method", "grayworld", "--manifest", str(tmp_path / "x.json")]) == 2


def test_unknown_flag(capsys):
    assert main(["evaluate", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_runtime_failure_exit_3(corpus, tmp_path):
    bad = tmp_path / "bad.pccc"
    bad.write_bytes(b"PCCC\x01\x00")
    rc = main(["estimate", "--manifest", str(corpus / "manifest.json"), "--method", "pccc", "--model", str(bad)])
    assert rc == 3


def test_train_then_evaluate_reproducible(corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 2, "batch_size": 4, "augment": {"max_rotation_deg": 5}}))
    results = []
    for run in ("a", "b"):
        model = tmp_path / f"{run}.pccc"
        assert main(["train", "--manifest", str(corpus / "manifest.json"), "--out", str(model),
                     "--config", str(cfg), "--points", "64", "--seed", "1"]) == 0
        assert (tmp_path / f"{run}.loss.csv").exists()
        prefix = tmp_path / f"ev_{run}"
        assert main(["evaluate", "--manifest", str(corpus / "manifest.json"), "--method", "pccc",
                     "--model", str(model), "--points", "64", "--out-prefix", str(prefix)]) == 0
        results.append((tmp_path / f"ev_{run}_samples.csv").read_text())
    assert results[0] == results[1]
    assert (tmp_path / "a.pccc").read_bytes() == (tmp_path / "b.pccc").read_bytes()


def test_bad_config_key(corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epoch": 2}))
    assert main(["train", "--manifest", str(corpus / "manifest.json"), "--out", str(tmp_path / "m"),
                 "--config", str(cfg)]) == 2


@pytest.fixture(scope="module")
def model(corpus, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "m.pccc"
    assert main(["train", "--manifest", str(corpus / "manifest.json"), "--out", str(path),
                 "--epochs", "1", "--points", "64", "--no-aug"]) == 0
    return path


def test_estimate(corpus, capsys):
    assert main(["estimate", "--manifest", str(corpus / "manifest.json"), "--id", "scene_0002",
                 "--method", "sog", "--p", "4"]) == 0
    parts = capsys.readouterr().out.split()
    assert parts[0] == "scene_0002" and len(parts) == 4


def test_awb_relight_export(corpus, model, tmp_path):
    m = str(corpus / "manifest.json")
    assert main(["awb", "--manifest", m, "--id", "scene_0001", "--method", "grayedge1",
                 "--out", str(tmp_path / "g.png")]) == 0
    assert main(["awb", "--manifest", m, "--id", "scene_0001", "--local", "--model", str(model),
                 "--out", str(tmp_path / "l.png"), "--map-out", str(tmp_path / "map.png"), "--srgb"]) == 0
    assert main(["relight", "--manifest", m, "--id", "scene_0001", "--model", str(model),
                 "--chromaticity", "0.3,0.5,0.8", "--out", str(tmp_path / "r.png")]) == 0
    assert main(["export-ply", "--manifest", m, "--id", "scene_0001", "--points", "100",
                 "--out", str(tmp_path / "c.ply")]) == 0
    for name in ("g.png", "l.png", "map.png", "r.png", "c.ply"):
        assert (tmp_path / name).stat().st_size > 0
    assert main(["awb", "--manifest", m, "--id", "scene_0001", "--local", "--out", str(tmp_path / "x.png")]) == 2
    assert main(["export-ply", "--manifest", m, "--id", "nope", "--out", str(tmp_path / "c.ply")]) == 2


def test_thumbnail_estimate(corpus, model, capsys):
    m = str(corpus / "manifest.json")
    assert main(["estimate", "--manifest", m, "--id", "scene_0003", "--method", "pccc", "--model", str(model),
                 "--thumbnail", "16"]) == 0
    assert len(capsys.readouterr().out.split()) == 4
    assert main(["estimate", "--manifest", m, "--id", "scene_0003", "--method", "pccc", "--model", str(model),
                 "--thumbnail", "7"]) == 2
