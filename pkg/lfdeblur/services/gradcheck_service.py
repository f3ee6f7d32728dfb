"""
Finite-difference gradient checks for every trainable sub-module.

Each check builds the module in float64 with a fixed seed, evaluates the scalar
objective sum(|out - target|) with target = out + random ±1 offsets, and
compares autograd gradients of parameters and inputs with central
differences. Every coordinate of every tensor is checked unless a sample size
is given. A coordinate's error is |analytic - numeric| / max(|analytic|,
|numeric|, ABS_FLOOR), and a tensor reports its worst coordinate.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.exceptions import GradientCheckError
from lfdeblur.core.logger import get_logger
from lfdeblur.network.deblur_net import DeblurNet
from lfdeblur.network.dpva import DPVA, fuse_views
from lfdeblur.network.layers import ViewConv2d
from lfdeblur.network.vasc import VASCBlock

logger = get_logger(__name__)

STEP = 1e-5
MAX_RETRIES = 3
# one-sided slopes further apart than this, relative to the tensor's largest gradient, mark a kink
KINK_TOLERANCE = 1e-4
# partial derivatives below this magnitude are compared in absolute terms
ABS_FLOOR = 1e-3

ShapeSpec = Tuple[int, int, int, int, int]


@dataclass
class GradCase:
    """A module under test: its parameters, its inputs and how to evaluate it."""
    module: nn.Module
    inputs: List[torch.Tensor]
    evaluate: Callable[..., torch.Tensor]


def _config(shape: ShapeSpec) -> ModelConfig:
    U, V, _, _, C = shape
    return ModelConfig(angular_u=U, angular_v=V, channels=C, num_blocks=1)


def _features(shape: ShapeSpec, gen: torch.Generator, channels: Optional[int] = None) -> torch.Tensor:
    U, V, X, Y, C = shape
    return torch.rand((1, U, V, X, Y, channels or C), generator=gen, dtype=torch.float64)


def _linear_case(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
    C = shape[-1]
    layer = nn.Linear(C, C)
    return GradCase(layer, [torch.randn((4, C), generator=gen, dtype=torch.float64)], layer)


def _stem_case(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
    conv = ViewConv2d(3, shape[-1], 3)
    return GradCase(conv, [_features(shape, gen, 3)], conv)


def _block_case(method: str) -> Callable[[ShapeSpec, torch.Generator], GradCase]:
    def build(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
        block = VASCBlock(_config(shape))
        return GradCase(block, [_features(shape, gen)], getattr(block, method))
    return build


def _dpva_case(method: str, channels: Callable[[ShapeSpec], int]) -> Callable[[ShapeSpec, torch.Generator], GradCase]:
    def build(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
        head = DPVA(_config(shape))
        return GradCase(head, [_features(shape, gen, channels(shape))], getattr(head, method))
    return build


def _fusion_case(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
    U, V, _, _, C = shape
    width = U * V * C
    f_ve = _features(shape, gen, width)
    w_dp = torch.randn(f_ve.shape, generator=gen, dtype=torch.float64)
    return GradCase(nn.Module(), [f_ve, w_dp], lambda f_ve, w_dp: fuse_views(f_ve, w_dp, U * V, C))


def _out_conv_case(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
    conv = ViewConv2d(shape[-1], 3, 3)
    return GradCase(conv, [_features(shape, gen)], conv)


def _network_case(shape: ShapeSpec, gen: torch.Generator) -> GradCase:
    net = DeblurNet(_config(shape))
    return GradCase(net, [_features(shape, gen, 3)], net)


MODULE_CASES: Dict[str, Callable[[ShapeSpec, torch.Generator], GradCase]] = {
    "linear": _linear_case,
    "stem": _stem_case,
    "kernel_generator": _block_case("generate_kernels"),
    "dynamic_conv": _block_case("spatial_conv"),
    "angular_conv": _block_case("angular_fuse"),
    "vasc_block": _block_case("forward"),
    "attention_mlp": _dpva_case("attention_from_ndp", lambda s: s[0] * s[1]),
    "dpva_fusion": _fusion_case,
    "dpva": _dpva_case("forward", lambda s: s[-1]),
    "out_conv": _out_conv_case,
    "network": _network_case,
}


def build_case(module_id: str, shape: ShapeSpec, seed: int = 0) -> GradCase:
    if module_id not in MODULE_CASES:
        raise GradientCheckError(module_id, f"unknown module id, expected one of {sorted(MODULE_CASES)}")
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    case = MODULE_CASES[module_id](tuple(shape), gen)
    case.module.double()
    for t in case.inputs:
        t.requires_grad_(True)
    return case


def _coordinate_error(analytic: float, quotients: Sequence[float]) -> float:
    """
    Relative error of one analytic partial derivative.

    quotients holds the central difference quotient and the two one-sided ones;
    the closest counts, since autograd reports the slope on the side of a ReLU
    switch the point lies on.
    """
    return min(abs(analytic - numeric) / max(abs(analytic), abs(numeric), ABS_FLOOR) for numeric in quotients)


def grad_check_report(
    module_id: str,
    shape: Sequence[int],
    seed: int = 0,
    samples: Optional[int] = None,
) -> Dict[str, float]:
    """
    Relative gradient error of every parameter and input tensor of a module.

    The error of a tensor is the largest per-coordinate error over the checked
    coordinates, each measured against the larger of |analytic|, |numeric| and
    ABS_FLOOR.

    Args:
        module_id: Key of MODULE_CASES
        shape: (U, V, X, Y, C) the module is instantiated for
        seed: Seed of parameters, inputs, targets and coordinate sampling
        samples: Coordinates checked per tensor; None checks all of them

    Returns:
        Mapping of tensor name to relative error

    Raises:
        GradientCheckError: If module_id is unknown
    """
    case = build_case(module_id, tuple(shape), seed)
    named = [(f"param.{name}", p) for name, p in case.module.named_parameters()]
    named += [(f"input.{i}", t) for i, t in enumerate(case.inputs)]

    with torch.no_grad():
        reference = case.evaluate(*case.inputs)
        gen = torch.Generator().manual_seed(seed + 1)
        signs = torch.randint(0, 2, reference.shape, generator=gen).to(torch.float64) * 2.0 - 1.0
        target = reference + signs

    def objective() -> torch.Tensor:
        return torch.sum(torch.abs(case.evaluate(*case.inputs) - target))

    loss = objective()
    grads = torch.autograd.grad(loss, [t for _, t in named], allow_unused=True)
    f0 = float(loss.detach())

    rng = np.random.default_rng(seed)
    errors: Dict[str, float] = {}
    for (name, tensor), grad in zip(named, grads):
        analytic = np.zeros(tensor.numel()) if grad is None else grad.detach().reshape(-1).numpy()
        scale = float(np.max(np.abs(analytic), initial=0.0))
        flat = tensor.data.view(-1)
        if samples is None or samples >= tensor.numel():
            chosen = np.arange(tensor.numel())
        else:
            chosen = rng.choice(tensor.numel(), size=samples, replace=False)

        worst = 0.0
        for index in chosen:
            index = int(index)
            original = float(flat[index])
            step = STEP
            for attempt in range(MAX_RETRIES + 1):
                with torch.no_grad():
                    flat[index] = original + step
                    f_plus = float(objective())
                    flat[index] = original - step
                    f_minus = float(objective())
                    flat[index] = original
                forward_slope = (f_plus - f0) / step
                backward_slope = (f0 - f_minus) / step
                if abs(forward_slope - backward_slope) <= KINK_TOLERANCE * max(scale, ABS_FLOOR):
                    break
                if attempt == MAX_RETRIES:
                    logger.debug(f"{module_id}/{name}: kink at coordinate {index} persists, using one-sided slopes")
                    break
                logger.debug(f"{module_id}/{name}: kink at coordinate {index}, retrying with step {step / 2:.1e}")
                step /= 2.0
            central = (f_plus - f_minus) / (2.0 * step)
            error = _coordinate_error(float(analytic[index]), (central, forward_slope, backward_slope))
            worst = max(worst, error)

        errors[name] = worst

    worst_name = max(errors, key=errors.get)
    logger.info(
        f"Gradient check {module_id} {tuple(shape)}: max relative error {errors[worst_name]:.3e} ({worst_name})"
    )
    return errors


def grad_check(module_id: str, shape: Sequence[int], seed: int = 0, samples: Optional[int] = None) -> float:
    """Maximum relative gradient error over all tensors of a module."""
    return max(grad_check_report(module_id, shape, seed, samples).values())
