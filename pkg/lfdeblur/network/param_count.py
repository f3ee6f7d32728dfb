"""
Closed-form trainable-parameter counts.

Counts are derived from the config alone, so they can be printed without
building the network; tests cross-check them against the instantiated modules.
"""
from typing import Dict, Optional

import torch.nn as nn

from lfdeblur.core.config import ModelConfig
from lfdeblur.schemas import BlockParamReport, ParamReport


def conv_param_count(c_in: int, c_out: int, k: int, bias: bool = True) -> int:
    return c_in * c_out * k * k + (c_out if bias else 0)


def linear_param_count(n_in: int, n_out: int, bias: bool = True) -> int:
    return n_in * n_out + (n_out if bias else 0)


def generator_param_count(C: int, C_K: int, k: int, bias: bool = True, c_in: Optional[int] = None) -> int:
    """
    Scalars in one kernel generator: C·C_K + C_K² + C_K·C_out·C_in·k² (+ biases).

    c_in defaults to C; pass 1 for depthwise kernels.
    """
    c_in = C if c_in is None else c_in
    kernel_numel = C * c_in * k * k
    return (
        linear_param_count(C, C_K, bias)
        + linear_param_count(C_K, C_K, bias)
        + linear_param_count(C_K, kernel_numel, bias)
    )


def _block_report(config: ModelConfig) -> BlockParamReport:
    C, k = config.channels, config.kernel_size
    c_in = 1 if config.depthwise else C
    if config.use_vasc:
        generator = generator_param_count(C, config.descriptor_width, k, bias=True, c_in=c_in)
        static_kernel = 0
    else:
        generator = 0
        static_kernel = C * c_in * k * k
    return BlockParamReport(
        generator=generator,
        static_kernel=static_kernel,
        angular_conv=conv_param_count(C, C, config.angular_kernel_size),
    )


def _head_report(config: ModelConfig) -> Dict[str, int]:
    C, k, n = config.channels, config.kernel_size, config.num_views
    if not config.use_dpva:
        return {"out_conv": conv_param_count(C, 3, k)}
    H = config.hidden_width
    return {
        "expand_conv": conv_param_count(C, n * C, k),
        "dp_conv": conv_param_count(C, n, k),
        "attention_mlp": linear_param_count(config.attention_in, H) + linear_param_count(H, n * C),
        "out_conv": conv_param_count(C, 3, k),
    }


def count_params(config: ModelConfig) -> ParamReport:
    """Exact trainable scalar count of a configuration, broken down per module."""
    stem = conv_param_count(3, config.channels, config.kernel_size)
    blocks = [_block_report(config) for _ in range(config.num_blocks)]
    head = _head_report(config)
    total = stem + sum(b.total for b in blocks) + sum(head.values())
    return ParamReport(stem=stem, blocks=blocks, head=head, total=total)


def count_module_params(module: nn.Module) -> int:
    """Trainable scalars of an instantiated module."""
    return sum(p.numel() for p in module.parameters() if p.requires_grad)
