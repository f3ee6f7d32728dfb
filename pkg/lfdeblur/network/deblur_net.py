"""
The deblurring network: per-view stem, a stack of VASC blocks, then the DPVA head.
"""
import torch
import torch.nn as nn
import torch.nn.functional as F

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.exceptions import AngularSizeMismatchError, ShapeMismatchError
from lfdeblur.core.lightfield import LightField
from lfdeblur.core.logger import get_logger
from lfdeblur.network.dpva import DPVA
from lfdeblur.network.layers import ViewConv2d, lightfields_to_tensor, tensor_to_lightfields
from lfdeblur.network.vasc import VASCBlock

logger = get_logger(__name__)


_ABLATION_UPDATES = {
    "none": {},
    "vasc": {"use_vasc": False},
    "dpva": {"use_dpva": False},
    "ape": {"use_ape": False},
}


def ablation_config(base: ModelConfig, variant: str) -> ModelConfig:
    """
    Derive an ablated configuration.

    Args:
        base: Full model configuration
        variant: "none", "vasc" (w/o VASC), "dpva" (w/o DPVA) or "ape" (w/o APE)

    Returns:
        A copy of base with the matching flag switched off
    """
    if variant not in _ABLATION_UPDATES:
        raise ValueError(f"unknown ablation variant '{variant}', expected one of {sorted(_ABLATION_UPDATES)}")
    return base.model_copy(update=_ABLATION_UPDATES[variant])


class DeblurNet(nn.Module):
    """Maps a blurred (B, U, V, X, Y, 3) light field to a sharp one in a single pass."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.stem = ViewConv2d(3, config.channels, config.kernel_size)
        self.blocks = nn.ModuleList([VASCBlock(config) for _ in range(config.num_blocks)])
        if config.use_dpva:
            self.head: nn.Module = DPVA(config)
        else:
            self.head = ViewConv2d(config.channels, 3, config.kernel_size)

    def _check_input(self, lf: torch.Tensor) -> None:
        if lf.dim() != 6:
            raise ShapeMismatchError("light-field batch (B, U, V, X, Y, 3)", (6,), (lf.dim(),))
        angular = (lf.shape[1], lf.shape[2])
        expected = (self.config.angular_u, self.config.angular_v)
        if angular != expected:
            raise AngularSizeMismatchError(expected, angular)
        if lf.shape[-1] != 3:
            raise ShapeMismatchError("light-field colour channels", (3,), (lf.shape[-1],))

    def features(self, lf: torch.Tensor) -> torch.Tensor:
        """F_VA: stem followed by every VASC block."""
        self._check_input(lf)
        feat = F.relu(self.stem(lf))
        for block in self.blocks:
            feat = block(feat)
        return feat

    def attention_weights(self, lf: torch.Tensor) -> torch.Tensor:
        """W_dp of the DPVA head for a light-field batch, shape (B, U, V, X, Y, U·V·C)."""
        if not isinstance(self.head, DPVA):
            raise RuntimeError("attention weights are unavailable in the w/o-DPVA configuration")
        return self.head.attention_weights(self.features(lf))

    def forward(self, lf: torch.Tensor) -> torch.Tensor:
        out = self.head(self.features(lf))
        if self.config.residual:
            out = out + lf
        return out


def build_model(config: ModelConfig, seed: int = 0) -> DeblurNet:
    """Initialise a network with a fixed torch seed."""
    torch.manual_seed(seed)
    net = DeblurNet(config)
    logger.debug(
        f"Built network U={config.angular_u} V={config.angular_v} C={config.channels} "
        f"blocks={config.num_blocks} vasc={config.use_vasc} dpva={config.use_dpva} ape={config.use_ape}"
    )
    return net


def forward(lf: LightField, net: DeblurNet) -> LightField:
    """
    Restore one blurred light field.

    All views go through the network together; the output is clamped to [0, 1].

    Args:
        lf: Blurred light field of shape (U, V, X, Y, 3)
        net: Network whose config matches the light field's angular size

    Returns:
        Restored light field of the same shape
    """
    param = next(net.parameters())
    batch = lightfields_to_tensor(lf, dtype=param.dtype, device=param.device)
    was_training = net.training
    net.eval()
    try:
        with torch.no_grad():
            out = net(batch)
    finally:
        net.train(was_training)
    return tensor_to_lightfields(out)[0]
