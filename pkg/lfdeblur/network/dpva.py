"""
Depth perception view attention (DPVA) with angular position embedding (APE).

Lower branch: a per-view convolution expands C channels to U·V·C view-exclusive
features, laid out in blocks blk(û, v̂, c) = (û·V + v̂)·C + c.
Upper branch: a per-view convolution maps C to U·V depth-perception channels;
every view then gathers, from all views, the channel carrying its own angular
index, appends its (u, v) coordinates and turns the result into per-pixel
attention weights over the U·V·C expanded channels.
"""
from typing import Tuple, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.exceptions import ShapeMismatchError
from lfdeblur.network.layers import ViewConv2d


def reorganize_dp(f_dp: torch.Tensor) -> torch.Tensor:
    """
    Exchange the view and channel indices of depth-perception features.

    out[..., u, v, x, y, û·V + v̂] = f_dp[..., û, v̂, x, y, u·V + v]. The map is
    its own inverse.

    Args:
        f_dp: Tensor of shape (..., U, V, X, Y, U·V)

    Returns:
        Reorganized tensor of the same shape
    """
    if f_dp.dim() < 5:
        raise ShapeMismatchError("depth-perception features rank", (5,), (f_dp.dim(),))
    *lead, U, V, X, Y, K = f_dp.shape
    if K != U * V:
        raise ShapeMismatchError("depth-perception channels", (U * V,), (K,))
    flat = f_dp.reshape(*lead, U * V, X, Y, K)
    return flat.transpose(-4, -1).reshape(f_dp.shape)


def apply_ape(
    f_ndp: torch.Tensor, u: Union[int, torch.Tensor], v: Union[int, torch.Tensor]
) -> torch.Tensor:
    """
    Append two channels holding the raw angular coordinates u and v.

    u and v are ints for a single view, or tensors broadcastable to
    f_ndp.shape[:-1] to embed a whole view grid in one call.
    """
    u = torch.as_tensor(u, dtype=f_ndp.dtype, device=f_ndp.device)
    v = torch.as_tensor(v, dtype=f_ndp.dtype, device=f_ndp.device)
    coords = torch.stack(torch.broadcast_tensors(u, v), dim=-1)
    return torch.cat([f_ndp, coords.expand(*f_ndp.shape[:-1], 2)], dim=-1)


def angular_coordinates(U: int, V: int, dtype: torch.dtype, device: torch.device) -> torch.Tensor:
    """(U, V, 2) grid of absolute angular coordinates."""
    uu, vv = torch.meshgrid(
        torch.arange(U, dtype=dtype, device=device),
        torch.arange(V, dtype=dtype, device=device),
        indexing="ij",
    )
    return torch.stack([uu, vv], dim=-1)


def fuse_views(f_ve: torch.Tensor, w_dp: torch.Tensor, num_views: int, channels: int) -> torch.Tensor:
    """F_sharp[..., c] = Σ_{û,v̂} F_ve[..., blk(û,v̂,c)] · W_dp[..., blk(û,v̂,c)]."""
    if f_ve.shape != w_dp.shape:
        raise ShapeMismatchError("view-exclusive features vs attention weights", f_ve.shape, w_dp.shape)
    if f_ve.shape[-1] != num_views * channels:
        raise ShapeMismatchError("view-exclusive channels", (num_views * channels,), (f_ve.shape[-1],))
    weighted = (f_ve * w_dp).reshape(*f_ve.shape[:-1], num_views, channels)
    return weighted.sum(dim=-2)


class DPVA(nn.Module):
    """The DPVA head: maps (B, U, V, X, Y, C) features to a (B, U, V, X, Y, 3) light field."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.U, self.V = config.angular_u, config.angular_v
        self.channels = config.channels
        self.use_ape = config.use_ape
        n = config.num_views
        k = config.kernel_size

        self.expand_conv = ViewConv2d(config.channels, n * config.channels, k)
        self.dp_conv = ViewConv2d(config.channels, n, k)
        self.attention_mlp = nn.Sequential(
            nn.Linear(config.attention_in, config.hidden_width),
            nn.ReLU(),
            nn.Linear(config.hidden_width, n * config.channels),
        )
        self.out_conv = ViewConv2d(config.channels, 3, k)

    def embed(self, f_ndp: torch.Tensor) -> torch.Tensor:
        """Concatenate every view's (u, v) to its reorganized features when APE is on."""
        if not self.use_ape:
            return f_ndp
        _, U, V, _, _, _ = f_ndp.shape
        grid = angular_coordinates(U, V, f_ndp.dtype, f_ndp.device)[None, :, :, None, None, :]
        return apply_ape(f_ndp, grid[..., 0], grid[..., 1])

    def attention_from_ndp(self, f_ndp: torch.Tensor) -> torch.Tensor:
        """Per-pixel attention weights W_dp from reorganized depth-perception features."""
        return self.attention_mlp(self.embed(f_ndp))

    def branches(self, f_va: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return (F_ve, W_dp), both of shape (B, U, V, X, Y, U·V·C)."""
        if f_va.dim() != 6 or f_va.shape[1:3] != (self.U, self.V) or f_va.shape[-1] != self.channels:
            raise ShapeMismatchError(
                "DPVA input (B, U, V, X, Y, C)",
                (self.U, self.V, self.channels),
                (tuple(f_va.shape[1:3]) + (f_va.shape[-1],)) if f_va.dim() == 6 else tuple(f_va.shape),
            )
        f_ve = F.relu(self.expand_conv(f_va))
        f_dp = F.relu(self.dp_conv(f_va))
        w_dp = self.attention_from_ndp(reorganize_dp(f_dp))
        return f_ve, w_dp

    def attention_weights(self, f_va: torch.Tensor) -> torch.Tensor:
        return self.branches(f_va)[1]

    def forward(self, f_va: torch.Tensor) -> torch.Tensor:
        f_ve, w_dp = self.branches(f_va)
        f_sharp = fuse_views(f_ve, w_dp, self.U * self.V, self.channels)
        return self.out_conv(f_sharp)


def dpva(f_va: torch.Tensor, head: DPVA) -> torch.Tensor:
    """Apply the DPVA head to unbatched (U, V, X, Y, C) features; returns (U, V, X, Y, 3)."""
    return head(f_va[None])[0]
