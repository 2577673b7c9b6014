import json

import numpy as np
import pytest

from wstal.cli import main
from wstal.data import load_segments_json, write_features


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_synth")
    code = run_cli("synth", out, "--classes", 3, "--dim", 12, "--train-videos", 6,
                   "--test-videos", 3, "--min-segments", 40, "--max-segments", 50,
                   "--max-block-len", 12, "--seed", 7)
    assert code == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_runs")
    code = run_cli("train", synth_dir / "train_manifest.json", "--out", out,
                   "--epochs", 3, "--hidden", 8, "--seed", 1)
    assert code == 0
    return out


def test_synth_writes_expected_files(synth_dir):
    for name in ("train_manifest.json", "test_manifest.json", "ground_truth.json",
                 "train_ground_truth.json"):
        assert (synth_dir / name).exists()
    assert any((synth_dir / "features").iterdir())


def test_synth_deterministic_across_runs(tmp_path, capsys):
    for sub in ("a", "b"):
        assert run_cli("synth", tmp_path / sub, "--classes", 2, "--dim", 6,
                       "--train-videos", 2, "--test-videos", 1,
                       "--min-segments", 40, "--max-segments", 44,
                       "--max-block-len", 10, "--seed", 3) == 0
    a = (tmp_path / "a" / "train_manifest.json").read_bytes()
    b = (tmp_path / "b" / "train_manifest.json").read_bytes()
    assert a == b
    for f in sorted((tmp_path / "a" / "features").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / "features" / f.name).read_bytes()


def test_synth_invalid_block_config_fails(tmp_path, capsys):
    code = run_cli("synth", tmp_path, "--min-segments", 10, "--max-segments", 12,
                   "--min-block-len", 20, "--max-block-len", 30)
    assert code != 0
    assert "error:" in capsys.readouterr().err


def test_every_subcommand_prints_effective_config(tmp_path, capsys):
    run_cli("synth", tmp_path / "cfg", "--train-videos", 1, "--test-videos", 0,
            "--classes", 2, "--dim", 4, "--min-segments", 40, "--max-segments", 44,
            "--max-block-len", 10)
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("effective-config "))
    config = json.loads(line.split(" ", 1)[1])
    assert config["command"] == "synth"
    assert config["seed"] == 0


def test_train_writes_checkpoints_and_traces(trained_dir):
    for modality in ("rgb", "flow"):
        assert (trained_dir / f"{modality}.ckpt").exists()
        trace = (trained_dir / f"{modality}_trace.csv").read_text().splitlines()
        assert trace[0] == "epoch,l_fg,l_bg,l_guide,l_cluster,l_sparse,total"
        assert len(trace) == 4  # header + 3 epochs


def test_train_missing_manifest_fails(tmp_path, capsys):
    assert run_cli("train", tmp_path / "nope.json", "--out", tmp_path) != 0
    assert "error:" in capsys.readouterr().err


def test_train_single_modality(synth_dir, tmp_path):
    assert run_cli("train", synth_dir / "train_manifest.json", "--out", tmp_path,
                   "--modality", "rgb", "--epochs", 1, "--hidden", 4) == 0
    assert (tmp_path / "rgb.ckpt").exists()
    assert not (tmp_path / "flow.ckpt").exists()


def test_train_default_flags_match_documented_defaults(synth_dir, tmp_path, capsys):
    assert run_cli("train", synth_dir / "train_manifest.json", "--out", tmp_path,
                   "--epochs", 1, "--hidden", 4) == 0
    line = next(l for l in capsys.readouterr().out.splitlines()
                if l.startswith("effective-config "))
    config = json.loads(line.split(" ", 1)[1])
    assert config["alpha"] == 0.1 and config["beta"] == 0.1 and config["gamma"] == 0.1
    assert config["sparsity"] == 0.0 and config["lr"] == 1e-4 and config["sigma"] == 2.0


def test_detect_writes_detections_json(synth_dir, trained_dir, tmp_path, capsys):
    out_file = tmp_path / "detections.json"
    code = run_cli("detect", synth_dir / "test_manifest.json",
                   "--rgb-checkpoint", trained_dir / "rgb.ckpt",
                   "--flow-checkpoint", trained_dir / "flow.ckpt",
                   "--out", out_file)
    assert code == 0
    line = next(l for l in capsys.readouterr().out.splitlines()
                if l.startswith("effective-config "))
    config = json.loads(line.split(" ", 1)[1])
    assert config["class_threshold"] == 0.1
    assert config["nms"] == 0.5 and config["theta"] == 0.5
    assert len(config["attention_thresholds"]) == 21
    doc = load_segments_json(out_file)
    assert len(doc) == 3
    for entries in doc.values():
        for e in entries:
            assert set(e) == {"label", "score", "segment"}


def test_detect_empty_manifest_gives_empty_json(synth_dir, trained_dir, tmp_path):
    manifest = tmp_path / "empty_manifest.json"
    manifest.write_text(json.dumps({"classes": ["action_01", "action_02", "action_03"],
                                    "videos": []}))
    out_file = tmp_path / "detections.json"
    assert run_cli("detect", manifest,
                   "--rgb-checkpoint", trained_dir / "rgb.ckpt",
                   "--flow-checkpoint", trained_dir / "flow.ckpt",
                   "--out", out_file) == 0
    assert json.loads(out_file.read_text()) == {}


def test_detect_dimension_mismatch_names_both(synth_dir, trained_dir, tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    write_features(tmp_path / "bad.wsf1", np.ones((5, 99)))
    manifest.write_text(json.dumps({
        "classes": ["action_01"],
        "videos": [{"id": "v", "labels": ["action_01"],
                    "features": {"rgb": "bad.wsf1", "flow": "bad.wsf1"}}],
    }))
    code = run_cli("detect", manifest,
                   "--rgb-checkpoint", trained_dir / "rgb.ckpt",
                   "--flow-checkpoint", trained_dir / "flow.ckpt",
                   "--out", tmp_path / "d.json")
    assert code != 0
    err = capsys.readouterr().err
    assert "99" in err and "12" in err


def test_detect_theta_one_runs(synth_dir, trained_dir, tmp_path):
    assert run_cli("detect", synth_dir / "test_manifest.json",
                   "--rgb-checkpoint", trained_dir / "rgb.ckpt",
                   "--flow-checkpoint", trained_dir / "flow.ckpt",
                   "--theta", 1.0, "--out", tmp_path / "d.json") == 0


def test_eval_verbatim_ground_truth_scores_one(synth_dir, tmp_path, capsys):
    gt = load_segments_json(synth_dir / "ground_truth.json")
    dets = {vid: [dict(e, score=1.0) for e in entries] for vid, entries in gt.items()}
    det_path = tmp_path / "dets.json"
    det_path.write_text(json.dumps(dets))
    csv_path = tmp_path / "eval.csv"
    assert run_cli("eval", det_path, synth_dir / "ground_truth.json",
                   "--csv", csv_path) == 0
    out = capsys.readouterr().out
    assert "mAP" in out
    rows = csv_path.read_text().strip().splitlines()
    assert rows[0].split(",")[1:] == [repr(0.1 * k) for k in range(1, 10)] or \
           rows[0].split(",")[1:] == [str(round(0.1 * k, 1)) for k in range(1, 10)]
    map_row = rows[-1].split(",")
    assert map_row[0] == "mAP"
    assert all(float(v) == 1.0 for v in map_row[1:])


def test_eval_no_detections_zero_table(synth_dir, tmp_path, capsys):
    det_path = tmp_path / "dets.json"
    det_path.write_text("{}")
    csv_path = tmp_path / "eval.csv"
    assert run_cli("eval", det_path, synth_dir / "ground_truth.json",
                   "--csv", csv_path) == 0
    map_row = csv_path.read_text().strip().splitlines()[-1].split(",")
    assert all(float(v) == 0.0 for v in map_row[1:])


def test_eval_schema_violation_fails(synth_dir, tmp_path, capsys):
    det_path = tmp_path / "dets.json"
    det_path.write_text(json.dumps({"v": [{"segment": [0.0, 1.0]}]}))
    assert run_cli("eval", det_path, synth_dir / "ground_truth.json") != 0
    assert "error:" in capsys.readouterr().err


def test_eval_warns_on_unknown_detection_labels(synth_dir, tmp_path, capsys):
    det_path = tmp_path / "dets.json"
    det_path.write_text(json.dumps(
        {"v": [{"label": "not_a_class", "score": 0.5, "segment": [0.0, 1.0]}]}
    ))
    assert run_cli("eval", det_path, synth_dir / "ground_truth.json",
                   "--csv", tmp_path / "e.csv") == 0
    assert "no ground truth" in capsys.readouterr().err


def test_gradcheck_passes_and_is_deterministic(capsys):
    assert run_cli("gradcheck", "--trials", 3, "--seed", 7) == 0
    first = capsys.readouterr().out
    assert run_cli("gradcheck", "--trials", 3, "--seed", 7) == 0
    second = capsys.readouterr().out
    assert first == second
    assert "PASS" in first


def test_gradcheck_fault_injection_fails(capsys):
    assert run_cli("gradcheck", "--trials", 1, "--seed", 7,
                   "--inject-error", "0.01") == 1
    assert "FAIL" in capsys.readouterr().out
