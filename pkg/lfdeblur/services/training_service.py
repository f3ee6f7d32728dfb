"""
L1-supervised training with light-field aware augmentation, Adam and a staged
learning-rate schedule.

An epoch is num_scenes × patches_per_scene optimizer steps. Every step draws
batch_size samples; each sample picks a scene, a uniform spatial origin and an
augmentation op from one numpy Generator, so the data order is a function of
the seed alone and survives checkpoint round-trips.
"""
import math
import random
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from lfdeblur.core.config import CHECKPOINT_FILE, ModelConfig, TrainConfig
from lfdeblur.core.exceptions import (
    AngularSizeMismatchError,
    LFDeblurError,
    PatchBoundsError,
    ShapeMismatchError,
    TrainingDivergedError,
)
from lfdeblur.core.lightfield import LightField
from lfdeblur.core.logger import get_logger
from lfdeblur.network.deblur_net import DeblurNet
from lfdeblur.schemas import TrainResult, TrainState
from lfdeblur.services import checkpoint_service
from lfdeblur.utils.image_utils import is_view_directory, list_scene_dirs, load_light_field

logger = get_logger(__name__)

AUGMENT_OPS = ("none", "hflip", "vflip", "rot90")


class TrainingPair(NamedTuple):
    name: str
    blurred: LightField
    sharp: LightField


def l1_loss(pred: LightField, gt: LightField) -> float:
    """Mean absolute difference over all (u, v, x, y, c)."""
    if pred.shape != gt.shape:
        raise ShapeMismatchError("L1 loss operands", gt.shape, pred.shape)
    return float(np.mean(np.abs(pred.data - gt.data)))


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """
    Learning rate of an epoch.

    base_lr for epoch < warm_epochs, then divided by decay_factor once when the
    warm phase ends and again every decay_every epochs.
    """
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    if epoch < cfg.warm_epochs:
        return cfg.base_lr
    return cfg.base_lr / cfg.decay_factor ** (1 + (epoch - cfg.warm_epochs) // cfg.decay_every)


def augment_array(data: np.ndarray, op: str) -> np.ndarray:
    """
    Apply a geometry-preserving augmentation to a (U, V, X, Y, C) array.

    hflip reverses x together with v, vflip reverses y together with u, and
    rot90 rotates the (x, y) plane together with the (v, u) grid.
    """
    if op == "none":
        return data
    if op == "hflip":
        return np.flip(data, axis=(1, 2))
    if op == "vflip":
        return np.flip(data, axis=(0, 3))
    if op == "rot90":
        U, V, X, Y = data.shape[:4]
        if U != V or X != Y:
            raise ShapeMismatchError("rot90 augmentation needs U == V and X == Y", (U, U, X, X), (U, V, X, Y))
        return np.rot90(np.rot90(data, 1, axes=(2, 3)), 1, axes=(1, 0))
    raise ValueError(f"unknown augmentation op '{op}', expected one of {AUGMENT_OPS}")


def augment(lf: LightField, op: str) -> LightField:
    return LightField(augment_array(lf.data, op), image_valued=lf.image_valued)


def set_seeds(seed: int) -> np.random.Generator:
    """Seed every RNG training touches and switch torch to deterministic kernels."""
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    return np.random.default_rng(seed)


def available_ops(cfg: TrainConfig, U: int, V: int) -> Tuple[str, ...]:
    if not cfg.augment:
        return ("none",)
    if U == V and cfg.patch_w == cfg.patch_h:
        return AUGMENT_OPS
    return AUGMENT_OPS[:3]


def assemble_batch(
    dataset: Sequence[TrainingPair],
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw one training batch.

    Each sample uses the same crop window and augmentation op on the blurred and
    sharp light fields.

    Returns:
        (blurred, sharp) arrays of shape (batch_size, U, V, patch_w, patch_h, 3)
    """
    U, V = dataset[0].sharp.U, dataset[0].sharp.V
    ops = available_ops(cfg, U, V)
    blurred_batch, sharp_batch = [], []
    for _ in range(cfg.batch_size):
        pair = dataset[int(rng.integers(len(dataset)))]
        X, Y = pair.sharp.X, pair.sharp.Y
        if cfg.patch_w > X or cfg.patch_h > Y:
            raise PatchBoundsError(0, 0, cfg.patch_w, cfg.patch_h, X, Y)
        x0 = int(rng.integers(X - cfg.patch_w + 1))
        y0 = int(rng.integers(Y - cfg.patch_h + 1))
        op = ops[int(rng.integers(len(ops)))]
        window = (slice(None), slice(None), slice(x0, x0 + cfg.patch_w), slice(y0, y0 + cfg.patch_h))
        blurred_batch.append(augment_array(pair.blurred.data[window], op))
        sharp_batch.append(augment_array(pair.sharp.data[window], op))
    return np.stack(blurred_batch), np.stack(sharp_batch)


def build_optimizer(net: DeblurNet, cfg: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        net.parameters(),
        lr=cfg.base_lr,
        betas=(cfg.adam_beta1, cfg.adam_beta2),
        eps=cfg.adam_eps,
    )


def load_dataset(sharp_path: Union[str, Path], blurred_path: Union[str, Path]) -> List[TrainingPair]:
    """
    Pair sharp and blurred light fields.

    Both paths are either single view directories or roots of scene
    directories; scenes are matched by directory name.
    """
    sharp_path, blurred_path = Path(sharp_path), Path(blurred_path)
    if is_view_directory(sharp_path) and is_view_directory(blurred_path):
        return [TrainingPair(sharp_path.name, load_light_field(blurred_path), load_light_field(sharp_path))]

    blurred_scenes = {p.name: p for p in list_scene_dirs(blurred_path)}
    pairs = []
    for scene in list_scene_dirs(sharp_path):
        if scene.name not in blurred_scenes:
            logger.warning(f"No blurred counterpart for scene '{scene.name}', skipping")
            continue
        pairs.append(TrainingPair(scene.name, load_light_field(blurred_scenes[scene.name]), load_light_field(scene)))
    if not pairs:
        raise FileNotFoundError(f"No matching scenes between {sharp_path} and {blurred_path}")
    logger.info(f"Loaded {len(pairs)} training scene(s)")
    return pairs


def _validate_dataset(dataset: Sequence[TrainingPair], model_cfg: ModelConfig, train_cfg: TrainConfig) -> None:
    if not dataset:
        raise ValueError("training needs at least one scene")
    expected = (model_cfg.angular_u, model_cfg.angular_v)
    for pair in dataset:
        if pair.blurred.shape != pair.sharp.shape:
            raise ShapeMismatchError(f"scene '{pair.name}' blurred vs sharp", pair.sharp.shape, pair.blurred.shape)
        if (pair.sharp.U, pair.sharp.V) != expected:
            raise AngularSizeMismatchError(expected, (pair.sharp.U, pair.sharp.V))
        if pair.sharp.C != 3:
            raise ShapeMismatchError(f"scene '{pair.name}' colour channels", (3,), (pair.sharp.C,))
        if train_cfg.patch_w > pair.sharp.X or train_cfg.patch_h > pair.sharp.Y:
            raise PatchBoundsError(0, 0, train_cfg.patch_w, train_cfg.patch_h, pair.sharp.X, pair.sharp.Y)


def batch_psnr(pred: torch.Tensor, gt: torch.Tensor) -> float:
    mse = float(torch.mean((pred.detach().clamp(0.0, 1.0) - gt) ** 2))
    return math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)


def _capture_rng(rng: np.random.Generator) -> dict:
    return {"numpy": rng.bit_generator.state, "torch": torch.get_rng_state()}


def _restore_rng(rng: np.random.Generator, state: dict) -> None:
    rng.bit_generator.state = state["numpy"]
    torch.set_rng_state(torch.as_tensor(state["torch"]).cpu())


def train_loop(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    dataset: Sequence[TrainingPair],
    out_dir: Union[str, Path],
    resume: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """
    Train the deblurring network.

    Args:
        model_cfg: Network configuration
        train_cfg: Training protocol
        dataset: (blurred, sharp) scene pairs in a fixed order
        out_dir: Run directory; checkpoints go to out_dir/ckpt
        resume: Optional checkpoint to continue from

    Returns:
        TrainResult with checkpoint paths and the per-step losses of this call

    Raises:
        TrainingDivergedError: If a loss is not finite
        CheckpointMismatchError: If the resume checkpoint has another model config
    """
    _validate_dataset(dataset, model_cfg, train_cfg)
    out_dir = Path(out_dir)
    device = torch.device(train_cfg.device)

    rng = set_seeds(train_cfg.seed)
    net = DeblurNet(model_cfg).to(device)
    optimizer = build_optimizer(net, train_cfg)
    state = TrainState()

    if resume is not None:
        payload = checkpoint_service.load_checkpoint(resume, model_cfg, map_location=device)
        if payload.get("train_state") is None or payload.get("optimizer") is None:
            raise LFDeblurError(f"checkpoint {payload['path']} carries no training state to resume from")
        net.load_state_dict(payload["state_dict"])
        optimizer.load_state_dict(payload["optimizer"])
        state = TrainState(**payload["train_state"])
        _restore_rng(rng, state.rng_state)
        logger.info(f"Resuming from {payload['path']} at epoch={state.epoch} step={state.step}")

    steps_per_epoch = len(dataset) * train_cfg.patches_per_scene
    max_steps = train_cfg.max_steps if train_cfg.max_steps is not None else train_cfg.total_epochs * steps_per_epoch
    logger.info(
        f"Training {len(dataset)} scene(s), {steps_per_epoch} step(s)/epoch, "
        f"epochs {state.epoch}..{train_cfg.total_epochs}, max_steps={max_steps}"
    )

    losses: List[float] = []

    best_path: Optional[Path] = None
    best_dir = checkpoint_service.checkpoint_dir(out_dir, "best")
    if resume is not None and (best_dir / CHECKPOINT_FILE).is_file():
        best_path = best_dir / CHECKPOINT_FILE

    def snapshot(name: str) -> Path:
        state.rng_state = _capture_rng(rng)
        return checkpoint_service.save_checkpoint(
            checkpoint_service.checkpoint_dir(out_dir, name), net, train_cfg, optimizer, state
        )

    net.train()
    done = False
    while state.epoch < train_cfg.total_epochs and not done:
        epoch = state.epoch
        lr = lr_at(epoch, train_cfg)
        for group in optimizer.param_groups:
            group["lr"] = lr

        while state.epoch_step < steps_per_epoch:
            if state.step >= max_steps:
                done = True
                break
            blurred, sharp = assemble_batch(dataset, train_cfg, rng)
            blurred_t = torch.as_tensor(blurred, dtype=torch.float32, device=device)
            sharp_t = torch.as_tensor(sharp, dtype=torch.float32, device=device)

            optimizer.zero_grad()
            pred = net(blurred_t)
            loss = F.l1_loss(pred, sharp_t)
            loss_value = float(loss.item())
            step = state.step + 1
            if not math.isfinite(loss_value):
                logger.error(f"Non-finite loss at step={step} epoch={epoch} lr={lr:g}")
                raise TrainingDivergedError(step, lr, loss_value)
            loss.backward()
            optimizer.step()

            state.step = step
            state.epoch_step += 1
            state.epoch_psnr.append(batch_psnr(pred, sharp_t))
            losses.append(loss_value)
            if step % train_cfg.log_every == 0:
                logger.info(f"step={step} epoch={epoch} loss={loss_value:.6f} lr={lr:.6g}")

        if done:
            break
        state.epoch = epoch + 1
        mean_psnr = float(np.mean(state.epoch_psnr))
        state.epoch_step = 0
        state.epoch_psnr = []

        if mean_psnr > state.best_psnr:
            state.best_psnr = mean_psnr
            best_path = snapshot("best")
            logger.info(f"New best epoch-mean training PSNR {mean_psnr:.3f} dB at epoch={epoch}")
        if state.epoch % train_cfg.checkpoint_every == 0:
            snapshot(f"epoch_{state.epoch}")

    last_path = snapshot("last")
    logger.info(f"Training finished at step={state.step} epoch={state.epoch}")
    return TrainResult(
        checkpoint_dir=out_dir / checkpoint_service.CKPT_DIR,
        last_checkpoint=last_path,
        best_checkpoint=best_path,
        losses=losses,
        final_step=state.step,
        final_epoch=state.epoch,
    )
