import time
from pathlib import Path
from typing import List, Optional, Union

import torch

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.exceptions import AngularSizeMismatchError
from lfdeblur.core.lightfield import LightField
from lfdeblur.core.logger import get_logger
from lfdeblur.network import deblur_net
from lfdeblur.network.deblur_net import DeblurNet
from lfdeblur.services.checkpoint_service import load_model
from lfdeblur.utils.image_utils import list_scene_dirs, load_light_field, save_light_field

logger = get_logger(__name__)


def deblur_light_field(lf: LightField, net: DeblurNet) -> LightField:
    """
    Restore one light field with a single forward pass over all of its views.

    Raises:
        AngularSizeMismatchError: If the light field's (U, V) differs from the network's
    """
    expected = (net.config.angular_u, net.config.angular_v)
    if (lf.U, lf.V) != expected:
        raise AngularSizeMismatchError(expected, (lf.U, lf.V))
    start = time.perf_counter()
    restored = deblur_net.forward(lf, net)
    logger.info(f"Restored {lf.U}x{lf.V} views of {lf.X}x{lf.Y} pixels in {time.perf_counter() - start:.3f}s")
    return restored


def infer(
    ckpt: Union[str, Path],
    in_path: Union[str, Path],
    out_path: Union[str, Path],
    model_cfg: Optional[ModelConfig] = None,
    device: Union[str, torch.device] = "cpu",
) -> List[Path]:
    """
    Deblur a light-field directory, or every scene under a root, with a checkpoint.

    Args:
        ckpt: Checkpoint file, directory or alias
        in_path: Blurred view directory or root of scene directories
        out_path: Output view directory (mirrors the scene layout of in_path)
        model_cfg: Expected model config; None trusts the checkpoint
        device: Torch device for the forward pass

    Returns:
        Written output directories
    """
    net, payload = load_model(ckpt, model_cfg, device)
    logger.info(f"Running inference with {payload['path']}")
    return infer_with_model(net, in_path, out_path)


def infer_with_model(net: DeblurNet, in_path: Union[str, Path], out_path: Union[str, Path]) -> List[Path]:
    """Deblur every scene under in_path with an already loaded network."""
    in_path, out_path = Path(in_path), Path(out_path)
    scenes = list_scene_dirs(in_path)
    single = len(scenes) == 1 and scenes[0] == in_path

    written = []
    for scene in scenes:
        restored = deblur_light_field(load_light_field(scene), net)
        written.append(save_light_field(restored, out_path if single else out_path / scene.name))
    return written
