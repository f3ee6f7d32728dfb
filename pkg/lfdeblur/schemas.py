import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CameraPose(BaseModel):
    """One camera pose sample: translation in reference-disparity units, rotation in radians."""
    model_config = ConfigDict(frozen=True)

    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0

    @field_validator("tx", "ty", "tz", "rx", "ry", "rz")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("pose components must be finite")
        return v

    @property
    def translation(self) -> Tuple[float, float, float]:
        return (self.tx, self.ty, self.tz)

    @property
    def rotation(self) -> Tuple[float, float, float]:
        return (self.rx, self.ry, self.rz)

    def as_tuple(self) -> Tuple[float, float, float, float, float, float]:
        return self.translation + self.rotation

    def is_identity(self) -> bool:
        return all(value == 0.0 for value in self.as_tuple())


class CameraTrajectory(BaseModel):
    """Camera poses sampled over the exposure; the motion path every view integrates over."""
    model_config = ConfigDict(frozen=True)

    poses: List[CameraPose]
    dof: int = 3
    baseline: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def validate_dof(self) -> "CameraTrajectory":
        if self.dof not in (3, 6):
            raise ValueError(f"dof must be 3 or 6, got {self.dof}")
        if self.dof == 3 and any(pose.rotation != (0.0, 0.0, 0.0) for pose in self.poses):
            raise ValueError("3-DOF trajectories cannot rotate")
        return self

    @property
    def T(self) -> int:
        return len(self.poses)


class BlockParamReport(BaseModel):
    """Trainable scalars of one VASC block."""
    generator: int = 0
    static_kernel: int = 0
    angular_conv: int = 0

    @property
    def total(self) -> int:
        return self.generator + self.static_kernel + self.angular_conv


class ParamReport(BaseModel):
    """Per-module trainable-parameter breakdown of a network configuration."""
    stem: int
    blocks: List[BlockParamReport]
    head: Dict[str, int]
    total: int

    def lines(self) -> List[str]:
        out = [f"stem {self.stem}"]
        for i, block in enumerate(self.blocks):
            out.append(
                f"block_{i} generator={block.generator} static_kernel={block.static_kernel} "
                f"angular_conv={block.angular_conv} total={block.total}"
            )
        for name, count in self.head.items():
            out.append(f"head.{name} {count}")
        out.append(f"total {self.total} ({self.total / 1e6:.3f} M)")
        return out


class ViewMetrics(BaseModel):
    u: int
    v: int
    psnr: float
    ssim: float
    ncc: float
    lmse: float


class SceneMetrics(BaseModel):
    """Metrics of one scene, each averaged over all U·V views."""
    name: str
    psnr: float
    ssim: float
    ncc: float
    lmse: float
    per_view: List[ViewMetrics] = Field(default_factory=list)

    @property
    def psnr_infinite(self) -> bool:
        return math.isinf(self.psnr)


class MetricReport(BaseModel):
    """Per-scene rows plus their arithmetic mean."""
    per_scene: List[SceneMetrics]
    mean: Optional[SceneMetrics] = None
    failures: List[str] = Field(default_factory=list)


class TrainState(BaseModel):
    """Scalar training progress; optimizer moments live next to it in the checkpoint."""
    epoch: int = 0
    step: int = 0
    # progress inside the current epoch, so a mid-epoch resume finishes it
    epoch_step: int = 0
    epoch_psnr: List[float] = Field(default_factory=list)
    best_psnr: float = float("-inf")
    rng_state: Dict[str, Any] = Field(default_factory=dict)


class TrainResult(BaseModel):
    checkpoint_dir: Path
    last_checkpoint: Path
    best_checkpoint: Optional[Path] = None
    losses: List[float] = Field(default_factory=list)
    final_step: int = 0
    final_epoch: int = 0

    @property
    def checkpoint_path(self) -> Path:
        return self.last_checkpoint
