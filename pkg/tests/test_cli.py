import json
import shutil

import pandas as pd
import pytest

from egostory.core.importance import save_model
from egostory.main import main

from conftest import TINY_DIR, cue_model


def error_payload(err: str) -> dict:
    return json.loads([line for line in err.splitlines() if line.startswith("{")][-1])


@pytest.fixture
def model_path(tmp_path):
    return str(save_model(cue_model("objectness"), tmp_path / "model.json"))


# 📡 summarize
def test_budget_summary_is_reproducible(tmp_path, model_path):
    outputs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        argv = ["summarize", str(TINY_DIR), "--model", model_path, "--mode", "budget", "-k", "3", "--out", str(out)]
        assert main(argv) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    manifest = json.loads(outputs[0])
    assert manifest["mode"] == "budget"
    assert len(manifest["entries"]) == 3
    assert manifest["header"]["parameters"]["summary"]["k"] == 3


def test_criterion_summary_with_clusters(tmp_path, model_path):
    out = tmp_path / "board.json"
    assert main(["summarize", str(TINY_DIR), "--model", model_path, "--dump-clusters", "--out", str(out)]) == 0
    manifest = json.loads(out.read_text())
    assert [e["frame"] for e in manifest["entries"]] == [0, 2, 3, 4, 5]
    assert manifest["clusters"]


def test_missing_model(tmp_path, capsys):
    assert main(["summarize", str(TINY_DIR), "--model", str(tmp_path / "absent.json")]) == 5
    payload = error_payload(capsys.readouterr().err)
    assert payload["error"] == "ModelError"
    assert payload["exit_code"] == 5


def test_training_video_needs_override(tmp_path, capsys):
    model = cue_model("objectness").model_copy(update={"training_video_ids": ["tiny"]})
    path = str(save_model(model, tmp_path / "model.json"))
    assert main(["summarize", str(TINY_DIR), "--model", path]) == 10
    assert error_payload(capsys.readouterr().err)["error"] == "ProtocolError"
    assert main(["summarize", str(TINY_DIR), "--model", path, "--allow-overlap", "--out", str(tmp_path / "s.json")]) == 0


# 📡 validate and synth
def test_synth_then_validate(tmp_path):
    out = tmp_path / "blocks"
    assert main(["synth", "--preset", "three-blocks", "--seed", "2", "--out", str(out)]) == 0
    assert (out / "oracle.json").exists()
    assert main(["validate", str(out)]) == 0


def test_synth_outputs_carry_a_header(tmp_path):
    out = tmp_path / "block"
    assert main(["synth", "--preset", "one-block", "--seed", "6", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    oracle = json.loads((out / "oracle.json").read_text())
    assert manifest["header"]["seed"] == 6
    assert oracle["header"]["config_hash"] == manifest["header"]["config_hash"]
    assert oracle["header"]["seed"] == 6
    assert len(manifest["header"]["config_hash"]) == 64
    assert main(["validate", str(out)]) == 0


def test_synth_needs_a_scenario(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "x")]) == 2
    assert error_payload(capsys.readouterr().err)["error"] == "ConfigError"


def test_validate_counts_violations(tmp_path, capsys):
    bundle = tmp_path / "tiny"
    shutil.copytree(TINY_DIR, bundle)
    frames = bundle / "frames.jsonl"
    frames.write_text(frames.read_text().replace("[[0,153600.0]", "[[0,-1.0]", 1))
    assert main(["validate", "--json", str(bundle)]) == 1
    (violation,) = json.loads(capsys.readouterr().out)
    assert violation["rule"] == "nonnegative-hist"
    assert violation["frame_index"] == 0


def test_print_schema(capsys):
    assert main(["validate", "--print-schema"]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"manifest.json", "frames.jsonl", "ground_truth.jsonl"}


# 📡 cues and events
def test_cue_table_export(tmp_path):
    out = tmp_path / "cues.csv"
    assert main(["cues", str(TINY_DIR), "--out", str(out)]) == 0
    table = pd.read_csv(out)
    assert len(table) == 12
    assert list(table.columns[:3]) == ["video_id", "frame", "region_id"]
    header = json.loads((tmp_path / "cues.header.json").read_text())
    assert header["parameters"]["cues"]["theta_p"] == 0.7


def test_cue_table_on_stdout_starts_with_header(capsys):
    assert main(["cues", str(TINY_DIR)]) == 0
    first, columns, *rows = capsys.readouterr().out.splitlines()
    assert first.startswith("# header ")
    assert "config_hash" in json.loads(first[len("# header ") :])
    assert columns.startswith("video_id,frame,region_id")
    assert len(rows) == 12


def test_events_document(tmp_path):
    out = tmp_path / "events.json"
    matrix = tmp_path / "d.npy"
    assert main(["events", str(TINY_DIR), "--out", str(out), "--matrix", str(matrix)]) == 0
    document = json.loads(out.read_text())
    assert document["video_id"] == "tiny"
    assert len(document["events"]) == 1
    assert matrix.exists()


# 📡 config flags
def test_bad_overrides_exit_with_config_status(capsys):
    assert main(["--set", "cues.theta_p=2", "cues", str(TINY_DIR)]) == 2
    assert main(["--set", "cues.theta_p", "cues", str(TINY_DIR)]) == 2


def test_stride_must_divide(capsys):
    assert main(["cues", str(TINY_DIR), "--stride", "20"]) == 3


# 📡 train and weights
@pytest.mark.slow
def test_train_is_deterministic(tmp_path, capsys):
    days = []
    for seed in (1, 2):
        out = tmp_path / f"day{seed}"
        assert main(["synth", "--preset", "planted-day", "--seed", str(seed), "--out", str(out)]) == 0
        days.append(str(out))
    first, second = tmp_path / "m1.json", tmp_path / "m2.json"
    assert main(["train", *days, "--out", str(first)]) == 0
    assert main(["train", *days, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    model = json.loads(first.read_text())
    assert model["training_video_ids"] == ["planted-day-1", "planted-day-2"]
    assert model["energy_term_stats"] is not None

    capsys.readouterr()
    assert main(["weights", str(first), "--top", "5", "--json"]) == 0
    ranked = json.loads(capsys.readouterr().out)
    assert len(ranked) == 5
    assert ranked[0]["weight"] >= ranked[-1]["weight"]


# 📡 failures outside the pipeline
def test_unwritable_output_is_a_storage_error(tmp_path, capsys):
    blocker = tmp_path / "taken"
    blocker.write_text("not a directory")
    assert main(["synth", "--preset", "one-block", "--out", str(blocker)]) == 11
    payload = error_payload(capsys.readouterr().err)
    assert payload["error"] == "StorageError"
    assert payload["context"]["kind"] == "FileExistsError"


def test_unreachable_registry_is_a_storage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EGOSTORY_DATABASE_URL", f"sqlite:///{tmp_path / 'missing' / 'dir' / 'runs.db'}")
    assert main(["runs"]) == 11
    assert error_payload(capsys.readouterr().err)["error"] == "StorageError"


def test_unexpected_failure_is_reported_as_json(model_path, monkeypatch, capsys):
    def broken(model):
        raise RuntimeError("weights exploded")

    monkeypatch.setattr("egostory.commands.weights.rank_weights", broken)
    assert main(["weights", model_path]) == 1
    payload = error_payload(capsys.readouterr().err)
    assert payload == {"error": "RuntimeError", "detail": "weights exploded", "exit_code": 1}


def test_threshold_space_is_documented(capsys):
    with pytest.raises(SystemExit):
        main(["events", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "chi2" in text
    assert "sigma_multiplier" in text

    with pytest.raises(SystemExit):
        main(["summarize", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "chi2 (default)" in text
