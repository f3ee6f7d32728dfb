from typing import Iterable, List, Optional, Sequence, Tuple


class LFDeblurError(Exception):
    """Base exception for all light-field deblurring toolkit errors."""
    pass


class ConfigError(LFDeblurError):
    """Raised when a configuration file or flag set cannot be resolved."""
    def __init__(self, message: str):
        self.message = f"Config error: {message}"
        super().__init__(self.message)


class LightFieldValueError(LFDeblurError, ValueError):
    """Raised when a light field array violates the container invariants."""
    def __init__(self, message: str):
        self.message = f"Invalid light field: {message}"
        super().__init__(self.message)


class IncompleteGridError(LFDeblurError):
    """Raised when a view directory does not hold a dense U×V grid."""
    def __init__(self, path: str, missing: Sequence[Tuple[int, int]]):
        self.path = path
        self.missing = list(missing)
        shown = ", ".join(f"view_{u:02d}_{v:02d}.png" for u, v in self.missing[:8])
        more = f" (+{len(self.missing) - 8} more)" if len(self.missing) > 8 else ""
        self.message = f"Incomplete view grid in {path}: missing {shown}{more}"
        super().__init__(self.message)


class ViewSizeMismatchError(LFDeblurError):
    """Raised when the views of one light field differ in size."""
    def __init__(self, path: str, first: Tuple[int, ...], other: Tuple[int, ...], view: str):
        self.path = path
        self.first = first
        self.other = other
        self.message = f"View size mismatch in {path}: expected {first}, got {other} for {view}"
        super().__init__(self.message)


class AngularIndexError(LFDeblurError, IndexError):
    """Raised for an out-of-range (u, v) index."""
    def __init__(self, u: int, v: int, U: int, V: int):
        self.message = f"Angular index ({u}, {v}) out of range for {U}x{V} views"
        super().__init__(self.message)


class SpatialIndexError(LFDeblurError, IndexError):
    """Raised for an out-of-range (x, y) index."""
    def __init__(self, x: int, y: int, X: int, Y: int):
        self.message = f"Spatial index ({x}, {y}) out of range for {X}x{Y} pixels"
        super().__init__(self.message)


class PatchBoundsError(LFDeblurError, ValueError):
    """Raised when a crop window does not fit the light field."""
    def __init__(self, x0: int, y0: int, w: int, h: int, X: int, Y: int):
        self.message = f"Patch ({x0}, {y0}, {w}, {h}) out of bounds for {X}x{Y} light field"
        super().__init__(self.message)


class ShapeMismatchError(LFDeblurError, ValueError):
    """Raised when two arrays that must agree in shape do not."""
    def __init__(self, what: str, expected: Iterable[int], got: Iterable[int]):
        self.expected = tuple(expected)
        self.got = tuple(got)
        self.message = f"Shape mismatch for {what}: expected {self.expected}, got {self.got}"
        super().__init__(self.message)


class AngularSizeMismatchError(ShapeMismatchError):
    """Raised when a light field's angular size disagrees with the model config."""
    def __init__(self, expected: Tuple[int, int], got: Tuple[int, int]):
        super().__init__("angular size", expected, got)


class TrajectoryError(LFDeblurError, ValueError):
    """Raised for invalid trajectory parameters or empty trajectories."""
    def __init__(self, message: str):
        self.message = f"Trajectory error: {message}"
        super().__init__(self.message)


class WarpError(LFDeblurError, ValueError):
    """Raised when a pose induces a degenerate warp."""
    def __init__(self, message: str):
        self.message = f"Warp error: {message}"
        super().__init__(self.message)


class CheckpointError(LFDeblurError):
    """Raised when a checkpoint cannot be read or written."""
    def __init__(self, message: str):
        self.message = f"Checkpoint error: {message}"
        super().__init__(self.message)


class CheckpointMismatchError(CheckpointError):
    """Raised when a checkpoint's model config disagrees with the requested one."""
    def __init__(self, differences: List[Tuple[str, object, object]]):
        self.differences = differences
        detail = "; ".join(f"{key}: checkpoint={a!r} requested={b!r}" for key, a, b in differences)
        super().__init__(f"config mismatch ({detail})")


class TrainingDivergedError(LFDeblurError):
    """Raised when the training loss stops being finite."""
    def __init__(self, step: int, lr: float, loss: float):
        self.step = step
        self.lr = lr
        self.loss = loss
        self.message = f"Training diverged at step {step}: loss={loss} with lr={lr:g}"
        super().__init__(self.message)


class GradientCheckError(LFDeblurError):
    """Raised when a gradient check cannot find a differentiable sample."""
    def __init__(self, module_id: str, message: str):
        self.module_id = module_id
        self.message = f"Gradient check failed for {module_id}: {message}"
        super().__init__(self.message)


class MetricError(LFDeblurError, ValueError):
    """Raised when a metric cannot be evaluated on its inputs."""
    def __init__(self, message: str, scene: Optional[str] = None, view: Optional[Tuple[int, int]] = None):
        self.detail = message
        self.scene = scene
        self.view = view
        where = ""
        if scene is not None:
            where += f" [scene={scene}"
            where += f" view={view}]" if view is not None else "]"
        self.message = f"Metric error{where}: {message}"
        super().__init__(self.message)


# CLI exit codes
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code reported for it."""
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    return EXIT_RUNTIME
