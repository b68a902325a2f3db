"""Person representation: parsing maps, keypoint maps, agnostic masking.

A parsing map is a 7-channel one-hot segmentation with the fixed label
convention below; a keypoint map is an 18-channel raster holding one
rendered disk per visible body joint.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyRegionError, ParameterError, ShapeMismatchError
from .imageops import extract_patches

NUM_CLASSES = 7
NUM_KEYPOINTS = 18

BACKGROUND = 0
HAIR = 1
FACE = 2
UPPER_CLOTHES = 3
LEFT_ARM = 4
RIGHT_ARM = 5
LOWER_BODY = 6

ARM_CLASSES = (LEFT_ARM, RIGHT_ARM)

CLASS_NAMES = (
    "background",
    "hair",
    "face",
    "upper_clothes",
    "left_arm",
    "right_arm",
    "lower_body",
)

__all__ = [
    "NUM_CLASSES",
    "NUM_KEYPOINTS",
    "BACKGROUND",
    "HAIR",
    "FACE",
    "UPPER_CLOTHES",
    "LEFT_ARM",
    "RIGHT_ARM",
    "LOWER_BODY",
    "ARM_CLASSES",
    "CLASS_NAMES",
    "onehot_from_labels",
    "labels_from_onehot",
    "validate_parsing",
    "class_mask",
    "build_agnostic_mask",
    "apply_agnostic_mask",
    "extract_limb_map",
    "limb_patches",
    "render_keypoints",
]


def onehot_from_labels(labels: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    """Expand an (H, W) integer label map into one-hot (num_classes, H, W)."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ParameterError(
            f"labels must lie in 0..{num_classes - 1}, got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    onehot = np.zeros((num_classes,) + labels.shape, dtype=np.float64)
    h_idx, w_idx = np.indices(labels.shape)
    onehot[labels, h_idx, w_idx] = 1.0
    return onehot


def labels_from_onehot(parsing: np.ndarray) -> np.ndarray:
    validate_parsing(parsing)
    return np.argmax(parsing, axis=0).astype(np.int64)


def validate_parsing(parsing: np.ndarray) -> np.ndarray:
    """Check that a parsing map is a one-hot partition of the raster."""
    parsing = np.asarray(parsing)
    if parsing.ndim != 3 or parsing.shape[0] != NUM_CLASSES:
        raise ShapeMismatchError(
            f"expected ({NUM_CLASSES}, H, W) parsing map, got shape {parsing.shape}"
        )
    if not np.isin(parsing, (0.0, 1.0)).all():
        raise ParameterError("parsing map values must be exactly 0 or 1")
    if not (parsing.sum(axis=0) == 1.0).all():
        raise ParameterError("parsing map must be one-hot per pixel")
    return parsing


def class_mask(parsing: np.ndarray, classes: Iterable[int]) -> np.ndarray:
    """Binary mask of pixels whose one-hot class lies in ``classes``."""
    parsing = np.asarray(parsing)
    ids = sorted(set(int(c) for c in classes))
    if any(c < 0 or c >= NUM_CLASSES for c in ids):
        raise ParameterError(f"class ids must lie in 0..{NUM_CLASSES - 1}, got {ids}")
    if not ids:
        return np.zeros(parsing.shape[1:], dtype=np.float64)
    return parsing[ids].sum(axis=0).astype(np.float64)


def build_agnostic_mask(parsing: np.ndarray) -> np.ndarray:
    """Clothing-agnostic occlusion mask for a source person.

    The mask is the filled circumscribed rectangle of the upper-clothing
    pixels (extreme row/column indices of that class) united with all
    exposed arm pixels, so neither clothing pixels nor the clothing
    silhouette survive masking.
    """
    cloth = class_mask(parsing, {UPPER_CLOTHES})
    ys, xs = np.nonzero(cloth)
    if ys.size == 0:
        raise EmptyRegionError("parsing map contains no upper-clothing pixels")
    mask = np.zeros_like(cloth)
    mask[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1] = 1.0
    return np.maximum(mask, class_mask(parsing, ARM_CLASSES))


def apply_agnostic_mask(
    person: np.ndarray, parsing: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Occlude a person image and its parsing map.

    Masked image pixels become 0; masked parsing pixels become one-hot
    background. Inputs are not modified.
    """
    person = np.asarray(person, dtype=np.float64)
    parsing = np.asarray(parsing)
    mask = np.asarray(mask, dtype=np.float64)
    if person.shape[1:] != mask.shape or parsing.shape[1:] != mask.shape:
        raise ShapeMismatchError(
            f"shape mismatch: person {person.shape}, parsing {parsing.shape}, "
            f"mask {mask.shape}"
        )
    person_masked = person * (1.0 - mask)
    parsing_masked = parsing * (1.0 - mask)
    parsing_masked[BACKGROUND] = np.where(mask == 1.0, 1.0, parsing_masked[BACKGROUND])
    return person_masked, parsing_masked


def extract_limb_map(parsing: np.ndarray, person: np.ndarray) -> np.ndarray:
    """Person image restricted to arm-class pixels, zero elsewhere."""
    person = np.asarray(person, dtype=np.float64)
    parsing = np.asarray(parsing)
    if person.shape[1:] != parsing.shape[1:]:
        raise ShapeMismatchError(
            f"shape mismatch: person {person.shape} vs parsing {parsing.shape}"
        )
    return person * class_mask(parsing, ARM_CLASSES)


def limb_patches(limb: np.ndarray, grid_scale: int) -> np.ndarray:
    """Patch grid of each color channel, concatenated color-major.

    Returns (3 * s^2, ceil(H/s), ceil(W/s)): the s^2 row-major tiles of
    the red channel, then green, then blue.
    """
    limb = np.asarray(limb)
    if limb.ndim != 3 or limb.shape[0] != 3:
        raise ShapeMismatchError(f"expected (3, H, W) limb map, got shape {limb.shape}")
    stacks = [extract_patches(limb[c], grid_scale).patches for c in range(3)]
    return np.concatenate(stacks, axis=0)


def render_keypoints(
    points: Sequence[tuple[int, float, float]],
    height: int,
    width: int,
    radius: float | None = None,
) -> np.ndarray:
    """Render body keypoints as filled unit disks, one channel per joint.

    Args:
        points: (id, x, y) triples with unique ids in 0..17.
        radius: disk radius in pixels; default 4 at a 256-row raster,
            scaled proportionally to ``height``.

    Absent ids leave their channel all-zero; disks are clipped to bounds.
    """
    if radius is None:
        radius = 4.0 * height / 256.0
    ids = [int(p[0]) for p in points]
    if len(set(ids)) != len(ids):
        raise ParameterError(f"duplicate keypoint ids in {ids}")
    if any(i < 0 or i >= NUM_KEYPOINTS for i in ids):
        raise ParameterError(f"keypoint ids must lie in 0..{NUM_KEYPOINTS - 1}")
    out = np.zeros((NUM_KEYPOINTS, height, width), dtype=np.float64)
    gy, gx = np.indices((height, width))
    for kp_id, x, y in points:
        disk = (gx - float(x)) ** 2 + (gy - float(y)) ** 2 <= float(radius) ** 2
        out[int(kp_id)][disk] = 1.0
    return out
