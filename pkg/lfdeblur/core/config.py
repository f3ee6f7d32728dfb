from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Type, TypeVar, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from lfdeblur.core.exceptions import ConfigError

# Logging configuration
LOG_LEVEL: str = "INFO"
LOG_DIR: str = "logs/runs"

# Checkpoint container format
CHECKPOINT_FORMAT_VERSION: int = 1
CHECKPOINT_FILE: str = "checkpoint.pt"


class ModelConfig(BaseModel):
    """Architecture hyperparameters of the deblurring network, including ablation flags."""
    model_config = ConfigDict(extra="forbid", frozen=True, protected_namespaces=())

    angular_u: int = Field(5, ge=1, description="U, angular rows")
    angular_v: int = Field(5, ge=1, description="V, angular columns")
    channels: int = Field(22, ge=1, description="C, feature width")
    kernel_size: int = Field(3, ge=1, description="k, spatial kernel size")
    descriptor_width: int = Field(4, ge=1, description="C_K, kernel-descriptor width")
    num_blocks: int = Field(8, ge=1, description="number of VASC blocks")
    angular_kernel_size: int = Field(3, ge=1, description="k_a, angular fusion kernel size")
    attention_hidden: Optional[int] = Field(None, ge=1, description="H, attention MLP width (None: U*V*C)")
    use_vasc: bool = True
    use_dpva: bool = True
    use_ape: bool = True
    residual: bool = False
    depthwise: bool = False

    @field_validator("kernel_size", "angular_kernel_size")
    @classmethod
    def validate_odd(cls, v: int) -> int:
        """Kernels need a centre tap for same-padding."""
        if v % 2 == 0:
            raise ValueError(f"kernel sizes must be odd, got {v}")
        return v

    @property
    def num_views(self) -> int:
        return self.angular_u * self.angular_v

    @property
    def hidden_width(self) -> int:
        if self.attention_hidden is not None:
            return self.attention_hidden
        return self.num_views * self.channels

    @property
    def attention_in(self) -> int:
        return self.num_views + 2 if self.use_ape else self.num_views


class TrainConfig(BaseModel):
    """Training protocol: patching, augmentation, Adam and the staged learning-rate schedule."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    batch_size: int = Field(4, ge=1)
    patch_w: int = Field(64, ge=1)
    patch_h: int = Field(64, ge=1)
    base_lr: float = Field(1e-3, gt=0)
    warm_epochs: int = Field(200, ge=0)
    decay_every: int = Field(100, ge=1)
    decay_factor: float = Field(10.0, gt=1)
    total_epochs: int = Field(400, ge=1)
    seed: int = 0
    augment: bool = True
    patches_per_scene: int = Field(1, ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    checkpoint_every: int = Field(1, ge=1)
    log_every: int = Field(1, ge=1)
    adam_beta1: float = Field(0.9, ge=0, lt=1)
    adam_beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    device: str = "cpu"


class SynthConfig(BaseModel):
    """Blur synthesis parameters. Translations are in units of the reference disparity."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    dof: int = 3
    trans_mag: float = Field(0.03, ge=0)
    rot_mag: float = Field(0.005, ge=0)
    samples: int = Field(20, ge=1)
    seed: int = 0
    disparity: float = Field(100.0, ge=0)
    baseline: float = Field(0.01, ge=0)
    focal_ratio: float = Field(1.0, gt=0)

    @field_validator("dof")
    @classmethod
    def validate_dof(cls, v: int) -> int:
        if v not in (3, 6):
            raise ValueError(f"dof must be 3 or 6, got {v}")
        return v


CONFIG_MODELS = (ModelConfig, TrainConfig, SynthConfig)

C = TypeVar("C", bound=BaseModel)

_NONE_STRINGS = {"", "none", "null"}


def known_keys() -> Dict[str, Type[BaseModel]]:
    """Map every flat config key to the first config model that owns it."""
    keys: Dict[str, Type[BaseModel]] = {}
    for model_cls in CONFIG_MODELS:
        for key in model_cls.model_fields:
            keys.setdefault(key, model_cls)
    return keys


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Parse a flat key=value config file.

    The file is read with python-dotenv's parser; the process environment is
    neither read nor modified.

    Args:
        path: Path to the config file

    Returns:
        Mapping of keys to raw string values

    Raises:
        ConfigError: If the file is missing, a line has no value, or a key is unknown
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    values = dotenv_values(path, interpolate=False)
    known = known_keys()
    resolved: Dict[str, str] = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in {path}")
        if value is None:
            raise ConfigError(f"key '{key}' in {path} has no value")
        resolved[key] = value
    return resolved


def resolve_config(
    model_cls: Type[C],
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> C:
    """
    Build a config model from defaults < config file values < explicit overrides.

    Args:
        model_cls: One of ModelConfig, TrainConfig, SynthConfig
        file_values: Raw values from load_config_file (keys of other models are skipped)
        overrides: Values from CLI flags; None entries mean "not given"

    Returns:
        A validated config instance

    Raises:
        ConfigError: If validation fails
    """
    data: Dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in model_cls.model_fields or value is None:
                continue
            if isinstance(value, str) and value.strip().lower() in _NONE_STRINGS:
                value = None
            data[key] = value
    try:
        return model_cls(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid {model_cls.__name__}: {e}") from e


def render_config(*configs: BaseModel) -> str:
    """Render configs as flat key=value lines that load_config_file accepts back."""
    lines = []
    seen = set()
    for config in configs:
        for key, value in config.model_dump().items():
            if key in seen:
                continue
            seen.add(key)
            lines.append(f"{key}={'none' if value is None else value}")
    return "\n".join(lines)
