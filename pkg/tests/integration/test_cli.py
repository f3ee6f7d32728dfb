import json

import numpy as np
import pytest
from PIL import Image as PILImage

from lfdeblur.core.config import ModelConfig
from lfdeblur.main import run
from lfdeblur.network.deblur_net import DeblurNet, build_model
from lfdeblur.network.param_count import count_params
from lfdeblur.services.blur_service import TRAJECTORY_FILE
from lfdeblur.services.checkpoint_service import checkpoint_dir, save_checkpoint
from lfdeblur.utils.image_utils import load_light_field

TINY_MODEL_FLAGS = ["--angular-u", "2", "--angular-v", "2", "--channels", "4", "--num-blocks", "1"]


@pytest.fixture
def logs(tmp_path):
    return str(tmp_path / "logs")


@pytest.fixture
def scene(random_lf, write_lf):
    return write_lf(random_lf(2, 2, 24, 24, 3), "scene")


def _synth(scene, out, logs, *extra):
    return run(["synth", "--in", str(scene), "--out", str(out), "--log-dir", logs, "--samples", "4", *extra])


def test_synth_is_deterministic(tmp_path, scene, logs, capsys):
    assert _synth(scene, tmp_path / "b1", logs, "--dof", "3", "--seed", "7") == 0
    assert _synth(scene, tmp_path / "b2", logs, "--dof", "3", "--seed", "7") == 0

    first, second = load_light_field(tmp_path / "b1"), load_light_field(tmp_path / "b2")
    np.testing.assert_array_equal(first.data, second.data)
    assert (tmp_path / "b1" / TRAJECTORY_FILE).read_text() == (tmp_path / "b2" / TRAJECTORY_FILE).read_text()
    out = capsys.readouterr().out
    assert "dof=3" in out and "seed=7" in out and "samples=4" in out


def test_synth_jobs_over_scene_root(tmp_path, random_lf, write_lf, logs):
    for name in ("a", "b", "c"):
        write_lf(random_lf(2, 2, 12, 12, 3), f"sharp/{name}")

    assert _synth(tmp_path / "sharp", tmp_path / "out", logs, "--jobs", "2") == 0
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["a", "b", "c"]


def test_train_infer_eval_pipeline(tmp_path, scene, logs, capsys, monkeypatch):
    """synth, train, infer with the best alias, then eval with four metric columns."""
    blurred = tmp_path / "blurred"
    assert _synth(scene, blurred, logs, "--seed", "1") == 0

    code = run([
        "train", "--sharp", str(scene), "--blurred", str(blurred), "--out", str(tmp_path / "run"),
        "--log-dir", logs, *TINY_MODEL_FLAGS,
        "--batch-size", "1", "--patch-w", "16", "--patch-h", "16", "--max-steps", "3",
    ])
    assert code == 0
    assert "checkpoint=" in capsys.readouterr().out

    monkeypatch.chdir(tmp_path / "run")
    assert run(["infer", "--ckpt", "best", "--in", str(blurred), "--out", str(tmp_path / "sharp"), "--log-dir", logs]) == 0
    assert load_light_field(tmp_path / "sharp").shape == (2, 2, 24, 24, 3)
    capsys.readouterr()

    report = tmp_path / "report.txt"
    assert run(["eval", "--pred", str(tmp_path / "sharp"), "--gt", str(scene), "--report", str(report), "--log-dir", logs]) == 0

    lines = report.read_text().splitlines()
    assert lines[0].split() == ["name", "psnr", "ssim", "ncc", "lmse"]
    assert lines[1].split()[0] == "scene"
    assert len(lines[1].split()) == 5
    assert lines[2].split()[0] == "MEAN"
    assert lines[1] in capsys.readouterr().out


def test_infer_runs_one_forward_pass_for_all_views(tmp_path, random_lf, write_lf, logs, mocker):
    config = ModelConfig(channels=2, num_blocks=1)
    save_checkpoint(checkpoint_dir(tmp_path / "run", "best"), build_model(config))
    blurred = write_lf(random_lf(5, 5, 12, 12, 3), "blurred")
    spy = mocker.spy(DeblurNet, "forward")

    code = run(["infer", "--ckpt", str(tmp_path / "run"), "--in", str(blurred), "--out", str(tmp_path / "out"), "--log-dir", logs])

    assert code == 0
    assert spy.call_count == 1
    assert load_light_field(tmp_path / "out").shape == (5, 5, 12, 12, 3)


def test_infer_rejects_a_mismatched_config(tmp_path, scene, logs, capsys):
    save_checkpoint(tmp_path / "ckpt_dir", build_model(ModelConfig(angular_u=2, angular_v=2, channels=4, num_blocks=1)))

    code = run([
        "infer", "--ckpt", str(tmp_path / "ckpt_dir"), "--in", str(scene), "--out", str(tmp_path / "out"),
        "--log-dir", logs, *TINY_MODEL_FLAGS[:4], "--channels", "8", "--num-blocks", "1",
    ])

    assert code == 1
    assert "channels: checkpoint=4 requested=8" in capsys.readouterr().err


def test_info_matches_count_params(tmp_path, logs, capsys):
    cfg = tmp_path / "default.cfg"
    cfg.write_text("channels=22\n")

    assert run(["info", "--config", str(cfg), "--log-dir", logs]) == 0

    out = capsys.readouterr().out.splitlines()
    total = next(line for line in out if line.startswith("total "))
    assert int(total.split()[1]) == count_params(ModelConfig()).total
    assert "channels=22" in out


def test_info_ablation_delta(logs, capsys):
    assert run(["info", "--ablation", "vasc", "--log-dir", logs]) == 0

    out = capsys.readouterr().out.splitlines()
    assert "delta_vs_full -140288" in out
    assert "use_vasc=False" in out


def test_slice_exports(tmp_path, scene, logs):
    epi_path = tmp_path / "epi.png"
    sai_path = tmp_path / "sai.png"
    micro_path = tmp_path / "micro.png"

    assert run(["slice", "--in", str(scene), "--out", str(epi_path), "--kind", "epi", "--orientation", "vertical",
                "--fixed-angular", "1", "--fixed-spatial", "5", "--scale", "3", "--log-dir", logs]) == 0
    assert run(["slice", "--in", str(scene), "--out", str(sai_path), "--kind", "sai", "--u", "1", "--v", "0",
                "--log-dir", logs]) == 0
    assert run(["slice", "--in", str(scene), "--out", str(micro_path), "--kind", "micro", "--x", "3", "--y", "4",
                "--log-dir", logs]) == 0

    with PILImage.open(epi_path) as img:
        assert np.asarray(img).shape == (6, 72, 3)
    with PILImage.open(sai_path) as img:
        sai = np.asarray(img)
    assert sai.shape == (24, 24, 3)
    with PILImage.open(micro_path) as img:
        assert np.asarray(img).shape == (2, 2, 3)
    expected = np.round(load_light_field(scene).data[1, 0] * 255).astype(np.uint8)
    np.testing.assert_array_equal(sai, expected)


@pytest.mark.parametrize("argv", [
    ["infer", "--in", "somewhere"],
    ["eval", "--pred", "p"],
    ["info", "--no-such-flag"],
    ["transmogrify"],
])
def test_usage_errors_exit_2(argv, logs):
    assert run(argv + ["--log-dir", logs]) == 2


def test_invalid_config_value_exits_2(logs, capsys):
    assert run(["info", "--channels", "many", "--log-dir", logs]) == 2
    assert "error: Config error" in capsys.readouterr().err


def test_unknown_log_level_exits_2(logs, capsys):
    assert run(["info", "--log-level", "LOUD", "--log-dir", logs]) == 2
    assert "unknown log level 'LOUD'" in capsys.readouterr().err


def test_runtime_failures_exit_1(tmp_path, scene, logs):
    assert run(["infer", "--ckpt", str(tmp_path / "nothing"), "--in", str(scene), "--out", str(tmp_path / "o"),
                "--log-dir", logs]) == 1
    assert run(["slice", "--in", str(scene), "--out", str(tmp_path / "x.png"), "--kind", "sai", "--u", "9",
                "--log-dir", logs]) == 1


def test_eval_failure_exits_1(tmp_path, random_lf, write_lf, logs):
    small = write_lf(random_lf(2, 2, 8, 8, 3), "small")

    assert run(["eval", "--pred", str(small), "--gt", str(small), "--log-dir", logs]) == 1


def test_every_run_leaves_a_record(tmp_path, logs):
    run(["info", "--log-dir", logs])
    run(["info", "--channels", "many", "--log-dir", logs])

    records = sorted((tmp_path / "logs").glob("info_*.json"))
    assert len(records) == 2
    outcomes = sorted(json.loads(p.read_text())["exit_code"] for p in records)
    assert outcomes == [0, 2]
