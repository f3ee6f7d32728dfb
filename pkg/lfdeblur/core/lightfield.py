"""
Light-field containers and re-slicers.

A light field is stored as one array indexed (u, v, x, y, c): (u, v) pick the
view, (x, y) the pixel, c the channel. Every re-slicer returns a read-only view
or a copy; the source array is never written.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np

from lfdeblur.core.exceptions import (
    AngularIndexError,
    LightFieldValueError,
    PatchBoundsError,
    SpatialIndexError,
)


class EPIOrientation(str, Enum):
    """Which angular/spatial pair an epipolar-plane image mixes."""
    HORIZONTAL = "horizontal"  # fixed u and y: samples (v, x)
    VERTICAL = "vertical"      # fixed v and x: samples (u, y)


def _frozen(array: np.ndarray) -> np.ndarray:
    view = array.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class Image:
    """A 2-D image of shape (H, W, C): an SAI, a micro-lens image or an EPI."""
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise LightFieldValueError(f"image must have shape (H, W, C), got {data.shape}")
        if min(data.shape) < 1:
            raise LightFieldValueError(f"image extents must be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise LightFieldValueError("image contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.data.shape)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class LightField:
    """
    Immutable 5-D light field of shape (U, V, X, Y, C).

    Image-valued fields (the default) must lie in [0, 1]; feature-valued fields
    only need to be finite. The array is copied on construction and frozen.
    """
    data: np.ndarray
    image_valued: bool = True

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 5:
            raise LightFieldValueError(f"expected shape (U, V, X, Y, C), got {data.shape}")
        if min(data.shape) < 1:
            raise LightFieldValueError(f"all extents must be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise LightFieldValueError("light field contains non-finite values")
        if self.image_valued and (data.min() < 0.0 or data.max() > 1.0):
            raise LightFieldValueError(
                f"image-valued light field must lie in [0, 1], got [{data.min()}, {data.max()}]"
            )
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> Tuple[int, int, int, int, int]:
        return tuple(self.data.shape)  # type: ignore[return-value]

    @property
    def U(self) -> int:
        return self.data.shape[0]

    @property
    def V(self) -> int:
        return self.data.shape[1]

    @property
    def X(self) -> int:
        return self.data.shape[2]

    @property
    def Y(self) -> int:
        return self.data.shape[3]

    @property
    def C(self) -> int:
        return self.data.shape[4]

    @classmethod
    def from_views(cls, views: Sequence[Sequence[np.ndarray]], image_valued: bool = True) -> "LightField":
        """Stack a U×V nested sequence of (X, Y, C) arrays into a light field."""
        return cls(np.stack([np.stack(row, axis=0) for row in views], axis=0), image_valued=image_valued)


def _check_angular(lf: LightField, u: int, v: int) -> None:
    if not (0 <= u < lf.U and 0 <= v < lf.V):
        raise AngularIndexError(u, v, lf.U, lf.V)


def _check_spatial(lf: LightField, x: int, y: int) -> None:
    if not (0 <= x < lf.X and 0 <= y < lf.Y):
        raise SpatialIndexError(x, y, lf.X, lf.Y)


def sai(lf: LightField, u: int, v: int) -> Image:
    """Sub-aperture image of view (u, v): shape (X, Y, C)."""
    _check_angular(lf, u, v)
    return Image(lf.data[u, v])


def micro_lens(lf: LightField, x: int, y: int) -> Image:
    """Micro-lens image at pixel (x, y): shape (U, V, C), one ray bundle across all views."""
    _check_spatial(lf, x, y)
    return Image(lf.data[:, :, x, y])


def epi(
    lf: LightField,
    orientation: Union[EPIOrientation, str],
    fixed_angular: int,
    fixed_spatial: int,
) -> Image:
    """
    Epipolar-plane image.

    Args:
        lf: Source light field
        orientation: "horizontal" fixes u and y and returns (V, X, C);
            "vertical" fixes v and x and returns (U, Y, C)
        fixed_angular: The fixed u (horizontal) or v (vertical) index
        fixed_spatial: The fixed y (horizontal) or x (vertical) index

    Returns:
        The EPI as an Image
    """
    orientation = EPIOrientation(orientation)
    if orientation is EPIOrientation.HORIZONTAL:
        _check_angular(lf, fixed_angular, 0)
        _check_spatial(lf, 0, fixed_spatial)
        return Image(lf.data[fixed_angular, :, :, fixed_spatial])
    _check_angular(lf, 0, fixed_angular)
    _check_spatial(lf, fixed_spatial, 0)
    return Image(lf.data[:, fixed_angular, fixed_spatial, :])


def crop_patch(lf: LightField, x0: int, y0: int, w: int, h: int) -> LightField:
    """Crop every view at the same spatial window [x0, x0+w) × [y0, y0+h)."""
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > lf.X or y0 + h > lf.Y:
        raise PatchBoundsError(x0, y0, w, h, lf.X, lf.Y)
    return LightField(lf.data[:, :, x0:x0 + w, y0:y0 + h], image_valued=lf.image_valued)


def central_view(lf: LightField) -> Image:
    return sai(lf, lf.U // 2, lf.V // 2)
