"""
Checkpoint containers.

A checkpoint is one torch file holding the format version, the serialized
ModelConfig and TrainConfig, the named parameter arrays, the optimizer state
and the scalar training state. Training writes them under
<out>/ckpt/epoch_{e}, <out>/ckpt/best and <out>/ckpt/last.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import torch

from lfdeblur.core.config import CHECKPOINT_FILE, CHECKPOINT_FORMAT_VERSION, ModelConfig, TrainConfig
from lfdeblur.core.exceptions import CheckpointError, CheckpointMismatchError
from lfdeblur.core.logger import get_logger
from lfdeblur.network.deblur_net import DeblurNet
from lfdeblur.schemas import TrainState

logger = get_logger(__name__)

CKPT_DIR = "ckpt"
CHECKPOINT_ALIASES = ("best", "last")


def checkpoint_dir(out_dir: Union[str, Path], name: str) -> Path:
    """Directory of a named checkpoint, e.g. checkpoint_dir(out, 'epoch_3')."""
    return Path(out_dir) / CKPT_DIR / name


def save_checkpoint(
    directory: Union[str, Path],
    net: DeblurNet,
    train_cfg: Optional[TrainConfig] = None,
    optimizer: Optional[torch.optim.Optimizer] = None,
    state: Optional[TrainState] = None,
) -> Path:
    """
    Write a checkpoint into a directory.

    Args:
        directory: Target directory (created if missing)
        net: Network whose parameters and config are stored
        train_cfg: Training config of the run, if any
        optimizer: Optimizer whose moments are stored, if any
        state: Scalar training state, if any

    Returns:
        Path to the written checkpoint file
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CHECKPOINT_FILE
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_config": net.config.model_dump(),
        "train_config": train_cfg.model_dump() if train_cfg else None,
        "state_dict": net.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer else None,
        "train_state": state.model_dump() if state else None,
    }
    try:
        torch.save(payload, path)
    except OSError as e:
        logger.error(f"Failed to write checkpoint {path}: {str(e)}")
        raise CheckpointError(f"cannot write {path}: {e}") from e
    logger.info(f"Checkpoint saved to {path}")
    return path


def resolve_checkpoint_path(path: Union[str, Path], search_root: Optional[Union[str, Path]] = None) -> Path:
    """
    Find the checkpoint file a user-facing path refers to.

    Accepted forms: the checkpoint file itself, a checkpoint directory, a
    training output directory (its ckpt/best, else ckpt/last), or one of the
    aliases 'best' / 'last' looked up under search_root/ckpt.
    """
    path = Path(path)
    candidates = [path, path / CHECKPOINT_FILE]
    candidates += [checkpoint_dir(path, alias) / CHECKPOINT_FILE for alias in CHECKPOINT_ALIASES]
    if str(path) in CHECKPOINT_ALIASES:
        root = Path(search_root) if search_root is not None else Path.cwd()
        candidates.append(checkpoint_dir(root, str(path)) / CHECKPOINT_FILE)
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise CheckpointError(f"no checkpoint found at {path}")


def config_differences(saved: Dict[str, Any], requested: ModelConfig) -> List[Tuple[str, Any, Any]]:
    """(key, checkpoint value, requested value) for every field that disagrees."""
    wanted = requested.model_dump()
    keys = sorted(set(saved) | set(wanted))
    return [(key, saved.get(key), wanted.get(key)) for key in keys if saved.get(key) != wanted.get(key)]


def load_checkpoint(
    path: Union[str, Path],
    model_cfg: Optional[ModelConfig] = None,
    map_location: Union[str, torch.device] = "cpu",
) -> Dict[str, Any]:
    """
    Read a checkpoint and check it against the requested model config.

    Args:
        path: Any form accepted by resolve_checkpoint_path
        model_cfg: Expected model config; None accepts the stored one
        map_location: Device for the loaded tensors

    Returns:
        The checkpoint payload with 'model_config' parsed into a ModelConfig

    Raises:
        CheckpointError: If the file is missing, unreadable or of another format version
        CheckpointMismatchError: If the stored model config differs from model_cfg
    """
    file_path = resolve_checkpoint_path(path)
    try:
        payload = torch.load(file_path, map_location=map_location, weights_only=False)
    except Exception as e:
        logger.error(f"Failed to read checkpoint {file_path}: {str(e)}")
        raise CheckpointError(f"cannot read {file_path}: {e}") from e

    if not isinstance(payload, dict) or payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        version = payload.get("format_version") if isinstance(payload, dict) else None
        raise CheckpointError(
            f"{file_path} has format version {version!r}, expected {CHECKPOINT_FORMAT_VERSION}"
        )

    saved = payload["model_config"]
    if model_cfg is not None:
        differences = config_differences(saved, model_cfg)
        if differences:
            raise CheckpointMismatchError(differences)
    payload["model_config"] = ModelConfig(**saved)
    payload["path"] = file_path
    logger.info(f"Loaded checkpoint {file_path}")
    return payload


def load_model(
    path: Union[str, Path],
    model_cfg: Optional[ModelConfig] = None,
    device: Union[str, torch.device] = "cpu",
) -> Tuple[DeblurNet, Dict[str, Any]]:
    """Rebuild the network stored in a checkpoint; returns (network, payload)."""
    payload = load_checkpoint(path, model_cfg, map_location=device)
    net = DeblurNet(payload["model_config"]).to(device)
    net.load_state_dict(payload["state_dict"])
    return net, payload
