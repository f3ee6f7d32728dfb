import pytest
import torch

from lfdeblur.core.config import CHECKPOINT_FILE, TrainConfig
from lfdeblur.core.exceptions import CheckpointError, CheckpointMismatchError
from lfdeblur.network.deblur_net import build_model
from lfdeblur.schemas import TrainState
from lfdeblur.services.checkpoint_service import (
    checkpoint_dir,
    config_differences,
    load_checkpoint,
    load_model,
    resolve_checkpoint_path,
    save_checkpoint,
)


def test_checkpoint_dir_layout(tmp_path):
    assert checkpoint_dir(tmp_path, "epoch_3") == tmp_path / "ckpt" / "epoch_3"


def test_save_and_load_round_trip(tmp_path, tiny_config):
    net = build_model(tiny_config, seed=4)
    state = TrainState(epoch=2, step=7, best_psnr=21.5)

    path = save_checkpoint(tmp_path / "ckpt" / "best", net, TrainConfig(), state=state)
    loaded, payload = load_model(path, tiny_config)

    assert path.name == CHECKPOINT_FILE
    assert payload["model_config"] == tiny_config
    assert payload["train_state"]["step"] == 7
    assert payload["train_config"]["batch_size"] == 4
    for key, value in net.state_dict().items():
        assert torch.equal(loaded.state_dict()[key], value)


def test_load_without_expected_config_trusts_the_checkpoint(tmp_path, tiny_config):
    save_checkpoint(tmp_path / "run", build_model(tiny_config))

    net, _ = load_model(tmp_path / "run")

    assert net.config == tiny_config


def test_config_mismatch_is_reported_per_field(tmp_path, tiny_config):
    save_checkpoint(tmp_path / "run", build_model(tiny_config))
    requested = tiny_config.model_copy(update={"channels": 8, "use_ape": False})

    with pytest.raises(CheckpointMismatchError) as exc_info:
        load_checkpoint(tmp_path / "run", requested)

    keys = [key for key, _, _ in exc_info.value.differences]
    assert keys == ["channels", "use_ape"]
    assert "channels: checkpoint=4 requested=8" in str(exc_info.value)


def test_config_differences_empty_for_equal_configs(tiny_config):
    assert config_differences(tiny_config.model_dump(), tiny_config) == []


def test_other_format_version_is_rejected(tmp_path, tiny_config):
    path = save_checkpoint(tmp_path / "run", build_model(tiny_config))
    payload = torch.load(path, weights_only=False)
    payload["format_version"] = 99
    torch.save(payload, path)

    with pytest.raises(CheckpointError, match="format version 99"):
        load_checkpoint(path)


def test_unreadable_checkpoint(tmp_path):
    path = tmp_path / CHECKPOINT_FILE
    path.write_text("not a checkpoint")

    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_resolve_checkpoint_forms(tmp_path, tiny_config, monkeypatch):
    """File, directory, run directory and the best/last aliases all resolve."""
    net = build_model(tiny_config)
    last = save_checkpoint(checkpoint_dir(tmp_path, "last"), net)

    assert resolve_checkpoint_path(last) == last
    assert resolve_checkpoint_path(last.parent) == last
    assert resolve_checkpoint_path(tmp_path) == last
    assert resolve_checkpoint_path("last", search_root=tmp_path) == last

    best = save_checkpoint(checkpoint_dir(tmp_path, "best"), net)
    assert resolve_checkpoint_path(tmp_path) == best

    monkeypatch.chdir(tmp_path)
    assert resolve_checkpoint_path("best").resolve() == best.resolve()


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError, match="no checkpoint found"):
        resolve_checkpoint_path(tmp_path / "nothing")
