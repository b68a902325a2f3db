"""Appearance flows: backward warping, pyramid shapes, gated aggregation.

A flow is a (2, H, W) array of per-pixel displacements in pixel units:
channel 0 is dx (columns), channel 1 is dy (rows). Warping gathers:
out(y, x) = src(y + dy, x + dx), bilinearly interpolated, zero outside
the source raster.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeMismatchError
from .imageops import resize_bilinear, sample_grid
from .nets import ConvGRUCell

__all__ = [
    "PYRAMID_LEVELS",
    "validate_flow",
    "warp_with_flow",
    "warp_mask",
    "upsample_flow",
    "pyramid_level_sizes",
    "validate_pyramid",
    "aggregate_flows",
]

PYRAMID_LEVELS = 5


def validate_flow(flow: np.ndarray) -> np.ndarray:
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[0] != 2:
        raise ShapeMismatchError(f"expected (2, H, W) flow, got shape {flow.shape}")
    if not np.isfinite(flow).all():
        raise ParameterError("flow contains non-finite displacements")
    return flow


def warp_with_flow(src: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward-warp ``src`` by a displacement field of the same raster size."""
    src = np.asarray(src, dtype=np.float64)
    flow = validate_flow(flow)
    if src.ndim != 3 or src.shape[1:] != flow.shape[1:]:
        raise ShapeMismatchError(
            f"source {src.shape} does not match flow raster {flow.shape[1:]}"
        )
    h, w = flow.shape[1:]
    gy, gx = np.indices((h, w), dtype=np.float64)
    return sample_grid(src, gx + flow[0], gy + flow[1], oob="zero")


def warp_mask(mask: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Warp a binary mask as a real raster, then re-binarize at 0.5."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) mask, got shape {mask.shape}")
    warped = warp_with_flow(mask[None], flow)[0]
    return (warped >= 0.5).astype(np.float64)


def upsample_flow(flow: np.ndarray, new_height: int, new_width: int) -> np.ndarray:
    """Resize a flow and rescale displacements to target-grid pixel units."""
    flow = validate_flow(flow)
    h, w = flow.shape[1:]
    out = resize_bilinear(flow, new_height, new_width)
    out[0] *= new_width / w
    out[1] *= new_height / h
    return out


def pyramid_level_sizes(height: int, width: int, mode: str = "literal") -> list[tuple[int, int]]:
    """Raster size of each of the 5 sub-flow levels, coarse to fine.

    "literal" divides by 5, 4, 3, 2, 1 (ceiling); "pow2" by 16, 8, 4, 2, 1.
    Level 5 is always full resolution.
    """
    if mode == "literal":
        denoms = [PYRAMID_LEVELS + 1 - k for k in range(1, PYRAMID_LEVELS + 1)]
    elif mode == "pow2":
        denoms = [2 ** (PYRAMID_LEVELS - k) for k in range(1, PYRAMID_LEVELS + 1)]
    else:
        raise ParameterError(f"unknown pyramid mode {mode!r}")
    return [(-(-height // d), -(-width // d)) for d in denoms]


def validate_pyramid(levels: list[np.ndarray], height: int, width: int, mode: str = "literal"):
    """Check a sub-flow pyramid against the documented size schedule."""
    if len(levels) != PYRAMID_LEVELS:
        raise ParameterError(f"expected {PYRAMID_LEVELS} pyramid levels, got {len(levels)}")
    expected = pyramid_level_sizes(height, width, mode)
    for k, (level, size) in enumerate(zip(levels, expected), start=1):
        level = validate_flow(level)
        if level.shape[1:] != size:
            raise ParameterError(
                f"pyramid level {k} has raster {level.shape[1:]}, expected {size}"
            )


def aggregate_flows(levels: list[np.ndarray], cell: ConvGRUCell) -> np.ndarray:
    """Fuse a coarse-to-fine sub-flow pyramid into one full-resolution flow.

    The running flow is the GRU hidden state: at each level it is
    upsampled to the level's raster and gated against that sub-flow.
    """
    if len(levels) != PYRAMID_LEVELS:
        raise ParameterError(f"expected {PYRAMID_LEVELS} pyramid levels, got {len(levels)}")
    levels = [validate_flow(level) for level in levels]
    state = np.zeros_like(levels[0])
    for level in levels:
        state = upsample_flow(state, level.shape[1], level.shape[2])
        state = cell.step(state, level)
    return state
