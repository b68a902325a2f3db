"""Location/size pre-alignment of in-shop clothing to a person.

The in-shop garment is first translated so the center of its bounding
rectangle coincides with the center of the person's clothing region,
then rescaled about that shared center so both regions have the same
pixel height. Height (not width) drives the scale because articulated
poses corrupt the horizontal extent of the worn garment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegionError, ShapeMismatchError
from .imageops import sample_grid
from .person import UPPER_CLOTHES, class_mask

__all__ = [
    "Rect",
    "PreAlignResult",
    "circumscribed_rect",
    "rect_center",
    "clothing_height",
    "translate",
    "prealign",
]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle with inclusive pixel bounds."""

    x_min: int
    x_max: int
    y_min: int
    y_max: int

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1


@dataclass(frozen=True)
class PreAlignResult:
    shifted: np.ndarray      # garment translated onto the person center
    scaled: np.ndarray       # translated garment rescaled to the person's height
    scaled_mask: np.ndarray  # garment support surviving the same resample
    shift: tuple[int, int]   # integer (dx, dy) applied to the garment
    ratio: float             # source height / target height


def circumscribed_rect(mask: np.ndarray) -> Rect:
    """Minimal axis-aligned rectangle containing all set pixels."""
    mask = np.asarray(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptyRegionError("mask has no set pixels")
    return Rect(int(xs.min()), int(xs.max()), int(ys.min()), int(ys.max()))


def rect_center(rect: Rect) -> tuple[float, float]:
    return ((rect.x_min + rect.x_max) / 2.0, (rect.y_min + rect.y_max) / 2.0)


def clothing_height(mask: np.ndarray) -> int:
    """Row extent of the circumscribed rectangle of a region mask."""
    return circumscribed_rect(mask).height


def translate(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer translation with zero fill; works on (H, W) or (C, H, W)."""
    img = np.asarray(img)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    _, h, w = img.shape
    out = np.zeros_like(img)
    src_x = slice(max(0, -dx), min(w, w - dx))
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_x = slice(max(0, dx), min(w, w + dx))
    dst_y = slice(max(0, dy), min(h, h + dy))
    if src_x.start < src_x.stop and src_y.start < src_y.stop:
        out[:, dst_y, dst_x] = img[:, src_y, src_x]
    return out[0] if squeeze else out


def prealign(cloth: np.ndarray, cloth_mask: np.ndarray, parsing: np.ndarray) -> PreAlignResult:
    """Align an in-shop garment with a person in location and size.

    Args:
        cloth: (3, H, W) in-shop clothing image.
        cloth_mask: (H, W) garment support in ``cloth``.
        parsing: (7, H, W) source parsing map of the person; its
            upper-clothing class defines the target location and height.

    Returns:
        PreAlignResult whose ``scaled`` garment has its support centered
        on the person's clothing-rectangle center (within 1 px) with
        matching height (within 1 px for regions at least 8 px tall).

    Raises:
        EmptyRegionError: either clothing region is empty.
    """
    cloth = np.asarray(cloth, dtype=np.float64)
    cloth_mask = np.asarray(cloth_mask, dtype=np.float64)
    if cloth.shape[1:] != cloth_mask.shape:
        raise ShapeMismatchError(
            f"cloth {cloth.shape} does not match its mask {cloth_mask.shape}"
        )
    target_mask = class_mask(parsing, {UPPER_CLOTHES})
    src_rect = circumscribed_rect(cloth_mask)
    tgt_rect = circumscribed_rect(target_mask)
    src_cx, src_cy = rect_center(src_rect)
    tgt_cx, tgt_cy = rect_center(tgt_rect)

    dx = round(tgt_cx - src_cx)
    dy = round(tgt_cy - src_cy)
    shifted = translate(cloth, dx, dy)

    ratio = src_rect.height / tgt_rect.height

    if ratio == 1.0:
        # equal heights make the whole transform a pure translation; keep
        # it on the integer grid so repeated runs are bitwise idempotent
        scaled = shifted.copy()
        scaled_mask = translate(cloth_mask, dx, dy)
    else:
        # One backward map folds the exact (sub-pixel) shift into the
        # scale: output pixel p samples the original garment at
        # src_center + (p - tgt_center) * ratio. A solid support of
        # height h_s then lands on exactly the target rows (half-up
        # rounding keeps the sampling window half-open), so a second run
        # measures ratio 1 and a center offset that rounds to zero shift.
        h, w = cloth_mask.shape
        gy, gx = np.indices((h, w), dtype=np.float64)
        src_x = src_cx + (gx - tgt_cx) * ratio
        src_y = src_cy + (gy - tgt_cy) * ratio
        scaled = sample_grid(cloth, src_x, src_y, oob="zero")

        nx = np.floor(src_x + 0.5).astype(np.intp)
        ny = np.floor(src_y + 0.5).astype(np.intp)
        inside = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
        scaled_mask = np.zeros_like(cloth_mask)
        scaled_mask[inside] = cloth_mask[ny[inside], nx[inside]]
        scaled_mask = (scaled_mask >= 0.5).astype(np.float64)

    return PreAlignResult(
        shifted=shifted,
        scaled=scaled,
        scaled_mask=scaled_mask,
        shift=(int(dx), int(dy)),
        ratio=float(ratio),
    )
