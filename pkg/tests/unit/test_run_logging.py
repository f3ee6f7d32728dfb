import json

from lfdeblur.utils.run_logging import log_run


def test_log_run_writes_a_json_record(tmp_path):
    """Records carry the subcommand, the resolved config and the outcome."""
    path = log_run("train", {"channels": 22, "seed": 0}, {"final_step": 10}, log_dir=tmp_path / "runs")

    with open(path) as f:
        record = json.load(f)

    assert path.startswith(str(tmp_path / "runs" / "train_"))
    assert record["subcommand"] == "train"
    assert record["config"] == {"channels": 22, "seed": 0}
    assert record["result"] == {"final_step": 10}
    assert record["success"] is True
    assert "error" not in record


def test_log_run_records_failures(tmp_path):
    path = log_run("eval", {"pred": "p"}, error="Metric error: too small", exit_code=1, log_dir=tmp_path)

    with open(path) as f:
        record = json.load(f)

    assert record["success"] is False
    assert record["exit_code"] == 1
    assert record["error"] == "Metric error: too small"


def test_log_run_serializes_non_json_values(tmp_path):
    path = log_run("infer", {"ckpt": tmp_path / "ckpt"}, log_dir=tmp_path)

    with open(path) as f:
        assert json.load(f)["config"]["ckpt"] == str(tmp_path / "ckpt")


def test_log_run_never_raises(tmp_path):
    """An unwritable log directory is logged and reported as an empty path."""
    blocker = tmp_path / "file"
    blocker.write_text("")

    assert log_run("info", {}, log_dir=blocker / "runs") == ""
