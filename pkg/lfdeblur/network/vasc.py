"""
View adaptive spatial convolution (VASC).

Each view pools its own features, maps the descriptor through two small fully
connected layers, and emits an exclusive spatial kernel. The per-view features
are then fused across the (u, v) grid by an angular convolution.
"""
import math
from typing import Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.exceptions import ShapeMismatchError
from lfdeblur.network.layers import fold_views, unfold_views


class VASCBlock(nn.Module):
    """One VASC block: per-view dynamic convolution, angular fusion, residual skip."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        C, C_K, k = config.channels, config.descriptor_width, config.kernel_size
        self.channels = C
        self.kernel_size = k
        self.depthwise = config.depthwise
        self.use_vasc = config.use_vasc
        self.kernel_shape: Tuple[int, int, int, int] = (C, 1 if config.depthwise else C, k, k)
        kernel_numel = math.prod(self.kernel_shape)

        if self.use_vasc:
            self.fc1 = nn.Linear(C, C_K)
            self.fc2 = nn.Linear(C_K, C_K)
            self.kernel_gen = nn.Linear(C_K, kernel_numel)
            self._init_generator()
        else:
            # w/o-VASC ablation: one learned kernel shared by all views
            self.static_kernel = nn.Parameter(torch.empty(self.kernel_shape))
            nn.init.kaiming_uniform_(self.static_kernel, a=math.sqrt(5))

        ka = config.angular_kernel_size
        self.angular_conv = nn.Conv2d(C, C, ka, padding=ka // 2)

    def _init_generator(self) -> None:
        # Start from an ordinary conv initialisation carried by the bias; the
        # descriptor-dependent part starts small.
        fan_in = self.kernel_shape[1] * self.kernel_size * self.kernel_size
        bound = 1.0 / math.sqrt(fan_in)
        with torch.no_grad():
            nn.init.uniform_(self.kernel_gen.bias, -bound, bound)
            nn.init.uniform_(self.kernel_gen.weight, -0.1 * bound, 0.1 * bound)

    def generate_kernels(self, feat: torch.Tensor) -> torch.Tensor:
        """
        Generate one kernel per view.

        Args:
            feat: Features of shape (B, U, V, X, Y, C)

        Returns:
            Kernels of shape (B, U, V, C_out, C_in, k, k); C_in is 1 when depthwise
        """
        if not self.use_vasc:
            raise RuntimeError("kernel generation is disabled in the w/o-VASC configuration")
        pooled = feat.mean(dim=(3, 4))
        descriptor = F.relu(self.fc2(F.relu(self.fc1(pooled))))
        kernels = self.kernel_gen(descriptor)
        return kernels.reshape(*pooled.shape[:3], *self.kernel_shape)

    def spatial_conv(self, feat: torch.Tensor) -> torch.Tensor:
        """Convolve every view with its own kernel (replicate same-padding)."""
        folded, lead = fold_views(feat)
        N, C, X, Y = folded.shape
        pad = self.kernel_size // 2
        padded = F.pad(folded, (pad, pad, pad, pad), mode="replicate")

        if self.use_vasc:
            kernels = self.generate_kernels(feat).reshape(N * C, self.kernel_shape[1], self.kernel_size, self.kernel_size)
            groups = N * C if self.depthwise else N
            out = F.conv2d(padded.reshape(1, N * C, X + 2 * pad, Y + 2 * pad), kernels, groups=groups)
            out = out.reshape(N, C, X, Y)
        else:
            out = F.conv2d(padded, self.static_kernel, groups=C if self.depthwise else 1)
        return unfold_views(out, lead)

    def angular_fuse(self, feat: torch.Tensor) -> torch.Tensor:
        """Convolve over the (u, v) grid independently at every pixel (zero padding)."""
        B, U, V, X, Y, C = feat.shape
        grid = feat.permute(0, 3, 4, 5, 1, 2).reshape(B * X * Y, C, U, V)
        fused = self.angular_conv(grid)
        return fused.reshape(B, X, Y, C, U, V).permute(0, 4, 5, 1, 2, 3)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        if feat.dim() != 6:
            raise ShapeMismatchError("VASC block input rank", (6,), (feat.dim(),))
        if feat.shape[-1] != self.channels:
            raise ShapeMismatchError("VASC block channels", (self.channels,), (feat.shape[-1],))
        spatial = F.relu(self.spatial_conv(feat))
        return feat + F.relu(self.angular_fuse(spatial))


def generate_view_kernel(sai_features: torch.Tensor, block: VASCBlock) -> torch.Tensor:
    """Kernel (C_out, C_in, k, k) generated from one view's (X, Y, C) features."""
    return block.generate_kernels(sai_features[None, None, None])[0, 0, 0]


def vasc_block(feat: torch.Tensor, block: VASCBlock) -> torch.Tensor:
    """Apply a VASC block to unbatched (U, V, X, Y, C) features."""
    if feat.dim() != 5:
        raise ShapeMismatchError("VASC block input (U, V, X, Y, C)", (5,), (feat.dim(),))
    return block(feat[None])[0]
