import re
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from PIL import Image as PILImage

from lfdeblur.core.exceptions import IncompleteGridError, LightFieldValueError, ViewSizeMismatchError
from lfdeblur.core.lightfield import Image, LightField
from lfdeblur.core.logger import get_logger

logger = get_logger(__name__)

VIEW_PATTERN = re.compile(r"^view_(\d{2})_(\d{2})\.png$")


def view_filename(u: int, v: int) -> str:
    return f"view_{u:02d}_{v:02d}.png"


def is_view_directory(path: Union[str, Path]) -> bool:
    """True if the directory holds at least one view_UU_VV.png file."""
    path = Path(path)
    return path.is_dir() and any(VIEW_PATTERN.match(p.name) for p in path.iterdir())


def list_scene_dirs(root: Union[str, Path]) -> List[Path]:
    """
    Resolve a light-field path to the scenes it holds.

    Args:
        root: Either a view directory (one scene) or a directory of view directories

    Returns:
        Scene directories sorted by name
    """
    root = Path(root)
    if is_view_directory(root):
        return [root]
    if not root.is_dir():
        raise FileNotFoundError(f"Light field directory not found: {root}")
    scenes = sorted(p for p in root.iterdir() if is_view_directory(p))
    if not scenes:
        raise FileNotFoundError(f"No light field views found under {root}")
    return scenes


def to_uint8(data: np.ndarray) -> np.ndarray:
    return np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)


def load_light_field(path: Union[str, Path]) -> LightField:
    """
    Load a light field stored as one 8-bit RGB PNG per view.

    Args:
        path: Directory holding view_{u:02d}_{v:02d}.png files (u = row, v = column)

    Returns:
        LightField of shape (U, V, X, Y, 3) scaled to [0, 1]

    Raises:
        IncompleteGridError: If the index range has gaps
        ViewSizeMismatchError: If two views differ in size
    """
    path = Path(path)
    files: Dict[Tuple[int, int], Path] = {}
    for entry in sorted(path.iterdir()):
        match = VIEW_PATTERN.match(entry.name)
        if match:
            files[(int(match.group(1)), int(match.group(2)))] = entry
    if not files:
        raise IncompleteGridError(str(path), [(0, 0)])

    U = max(u for u, _ in files) + 1
    V = max(v for _, v in files) + 1
    missing = [(u, v) for u in range(U) for v in range(V) if (u, v) not in files]
    if missing:
        logger.error(f"Light field at {path} is missing {len(missing)} of {U * V} views")
        raise IncompleteGridError(str(path), missing)

    first_shape = None
    rows: List[List[np.ndarray]] = []
    for u in range(U):
        row = []
        for v in range(V):
            with PILImage.open(files[(u, v)]) as img:
                array = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
            if first_shape is None:
                first_shape = array.shape
            elif array.shape != first_shape:
                raise ViewSizeMismatchError(str(path), first_shape, array.shape, view_filename(u, v))
            row.append(array)
        rows.append(row)

    lf = LightField.from_views(rows)
    logger.info(f"Loaded light field {lf.shape} from {path}")
    return lf


def save_light_field(lf: LightField, path: Union[str, Path]) -> Path:
    """
    Write a light field as one 8-bit PNG per view.

    Args:
        lf: Image-valued light field with 1 or 3 channels
        path: Output directory (created if missing)

    Returns:
        The output directory
    """
    if not lf.image_valued:
        raise LightFieldValueError("only image-valued light fields can be saved as PNG")
    if lf.C not in (1, 3):
        raise LightFieldValueError(f"PNG export needs 1 or 3 channels, got {lf.C}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for u in range(lf.U):
        for v in range(lf.V):
            pixels = to_uint8(lf.data[u, v])
            if lf.C == 1:
                pixels = pixels[..., 0]
            PILImage.fromarray(pixels).save(path / view_filename(u, v))
    logger.info(f"Saved light field {lf.shape} to {path}")
    return path


def export_image(image: Image, path: Union[str, Path], scale: int = 1) -> Path:
    """
    Save an SAI, micro-lens image or EPI as an 8-bit PNG.

    Args:
        image: Image with values in [0, 1]
        path: Output file
        scale: Integer nearest-neighbour upscaling factor applied to both axes

    Returns:
        The written path
    """
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    pixels = np.repeat(np.repeat(to_uint8(image.data), scale, axis=0), scale, axis=1)
    if pixels.shape[-1] == 1:
        pixels = pixels[..., 0]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(pixels).save(path)
    logger.info(f"Exported image {image.shape} x{scale} to {path}")
    return path
