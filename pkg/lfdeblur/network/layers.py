"""
Tensor layout helpers and the per-view convolution.

Network tensors keep the light-field index order with a leading batch axis:
(B, U, V, X, Y, C). Convolutions fold the views into the batch axis and move
channels first.
"""
from typing import List, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn

from lfdeblur.core.exceptions import ShapeMismatchError
from lfdeblur.core.lightfield import LightField


def fold_views(feat: torch.Tensor) -> Tuple[torch.Tensor, Tuple[int, int, int]]:
    """(B, U, V, X, Y, C) -> (B*U*V, C, X, Y), plus (B, U, V) for unfolding."""
    if feat.dim() != 6:
        raise ShapeMismatchError("light-field features (B, U, V, X, Y, C)", (6,), (feat.dim(),))
    B, U, V, X, Y, C = feat.shape
    return feat.reshape(B * U * V, X, Y, C).permute(0, 3, 1, 2), (B, U, V)


def unfold_views(t: torch.Tensor, lead: Tuple[int, int, int]) -> torch.Tensor:
    """(B*U*V, C, X, Y) -> (B, U, V, X, Y, C)."""
    B, U, V = lead
    N, C, X, Y = t.shape
    return t.permute(0, 2, 3, 1).reshape(B, U, V, X, Y, C)


class ViewConv2d(nn.Module):
    """A 2D convolution with weights shared by every view, replicate same-padding."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int):
        super().__init__()
        self.conv = nn.Conv2d(
            in_channels,
            out_channels,
            kernel_size,
            padding=kernel_size // 2,
            padding_mode="replicate",
        )

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        folded, lead = fold_views(feat)
        return unfold_views(self.conv(folded), lead)


def lightfields_to_tensor(
    lfs: Union[LightField, Sequence[LightField]],
    dtype: torch.dtype = torch.float32,
    device: Union[str, torch.device] = "cpu",
) -> torch.Tensor:
    """Stack light fields into a (B, U, V, X, Y, C) tensor."""
    if isinstance(lfs, LightField):
        lfs = [lfs]
    array = np.stack([lf.data for lf in lfs], axis=0)
    return torch.as_tensor(array, dtype=dtype, device=device)


def tensor_to_lightfields(t: torch.Tensor, clamp: bool = True) -> List[LightField]:
    """Split a (B, U, V, X, Y, C) tensor into light fields, clamped to [0, 1] by default."""
    array = t.detach().to("cpu", torch.float64).numpy()
    if clamp:
        array = np.clip(array, 0.0, 1.0)
    return [LightField(a, image_valued=clamp) for a in array]
