"""Dense raster primitives: sampling, resizing, filtering, patching.

Conventions used throughout the package:

* images / feature maps are ``(channels, height, width)`` float arrays,
  image-valued tensors nominally in [0, 1];
* binary masks are ``(height, width)`` arrays with values exactly 0 or 1;
* x is the column index, y the row index, origin at the top-left pixel.

Out-of-bounds sampling returns zero (warped content must vanish outside
its source), while resizing clamps to the edge (resizing must not invent
dark borders).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeMismatchError

__all__ = [
    "PatchSet",
    "sample_grid",
    "bilinear_sample",
    "resize_bilinear",
    "sobel_gradients",
    "sobel_adjoint",
    "gaussian_kernel_1d",
    "gaussian_blur",
    "extract_patches",
    "reassemble_patches",
    "l1_mean",
]

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()


@dataclass(frozen=True)
class PatchSet:
    """An s x s grid of equally sized single-channel tiles, row-major."""

    grid_scale: int
    patches: np.ndarray  # (s*s, tile_h, tile_w)

    def __post_init__(self):
        s = self.grid_scale
        if self.patches.ndim != 3 or self.patches.shape[0] != s * s:
            raise ShapeMismatchError(
                f"expected {s * s} patches, got array of shape {self.patches.shape}"
            )


def _require_chw(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or min(img.shape) < 1:
        raise ShapeMismatchError(f"expected (C, H, W) array, got shape {img.shape}")
    return img


def sample_grid(img: np.ndarray, xs: np.ndarray, ys: np.ndarray, oob: str = "zero") -> np.ndarray:
    """Bilinearly sample ``img`` at real-valued coordinate grids.

    Args:
        img: (C, H, W) source.
        xs, ys: broadcast-compatible coordinate arrays (pixel units).
        oob: "zero" returns the zero vector for points outside
            [0, W-1] x [0, H-1]; "clamp" clamps coordinates to the edge.

    Returns:
        (C, *xs.shape) array of interpolated values.
    """
    img = _require_chw(img)
    _, h, w = img.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)

    if oob == "clamp":
        xs = np.clip(xs, 0.0, w - 1.0)
        ys = np.clip(ys, 0.0, h - 1.0)
        inside = None
    elif oob == "zero":
        inside = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
        xs = np.clip(xs, 0.0, w - 1.0)
        ys = np.clip(ys, 0.0, h - 1.0)
    else:
        raise ParameterError(f"unknown oob mode {oob!r}")

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    v00 = img[:, y0, x0]
    v01 = img[:, y0, x1]
    v10 = img[:, y1, x0]
    v11 = img[:, y1, x1]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    out = top * (1.0 - fy) + bot * fy

    if inside is not None:
        out = out * inside
    return out


def bilinear_sample(img: np.ndarray, x: float, y: float) -> np.ndarray:
    """Sample one point; coordinates outside the raster give the zero vector."""
    return sample_grid(img, np.float64(x), np.float64(y), oob="zero")


def resize_bilinear(img: np.ndarray, new_height: int, new_width: int) -> np.ndarray:
    """Resize with the align-corners-false convention and edge clamping.

    Output pixel (i, j) samples the source at
    ((i + 0.5) * H / new_height - 0.5, (j + 0.5) * W / new_width - 0.5).
    """
    img = _require_chw(img)
    if new_height < 1 or new_width < 1:
        raise ParameterError("target size must be at least 1x1")
    _, h, w = img.shape
    ys = (np.arange(new_height, dtype=np.float64) + 0.5) * (h / new_height) - 0.5
    xs = (np.arange(new_width, dtype=np.float64) + 0.5) * (w / new_width) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return sample_grid(img, gx, gy, oob="clamp")


def _replicate_pad(img: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(img, ((0, 0), (pad, pad), (pad, pad)), mode="edge")


def _correlate3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 3x3 correlation with replicate padding."""
    _, h, w = img.shape
    padded = _replicate_pad(img, 1)
    out = np.zeros_like(img, dtype=np.float64)
    for i in range(3):
        for j in range(3):
            out += kernel[i, j] * padded[:, i : i + h, j : j + w]
    return out


def sobel_gradients(img: np.ndarray) -> np.ndarray:
    """Horizontal and vertical Sobel responses, interleaved per channel.

    Output plane 2c is the x-gradient of channel c, plane 2c+1 the
    y-gradient. Borders use replicate padding; requires H, W >= 3.
    """
    img = _require_chw(img)
    c, h, w = img.shape
    if h < 3 or w < 3:
        raise ShapeMismatchError(f"sobel needs at least 3x3, got {h}x{w}")
    gx = _correlate3(img, SOBEL_X)
    gy = _correlate3(img, SOBEL_Y)
    out = np.empty((2 * c, h, w), dtype=np.float64)
    out[0::2] = gx
    out[1::2] = gy
    return out


def sobel_adjoint(grad: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`sobel_gradients` (for analytic loss gradients).

    Maps a (2C, H, W) cotangent back to image space (C, H, W), including
    the replicate-padding adjoint that folds border contributions onto
    edge pixels.
    """
    grad = _require_chw(grad)
    if grad.shape[0] % 2 != 0:
        raise ShapeMismatchError("adjoint input must have an even channel count")
    c = grad.shape[0] // 2
    h, w = grad.shape[1:]
    acc = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    for kernel, g in ((SOBEL_X, grad[0::2]), (SOBEL_Y, grad[1::2])):
        for i in range(3):
            for j in range(3):
                acc[:, i : i + h, j : j + w] += kernel[i, j] * g
    out = acc[:, 1 : h + 1, 1 : w + 1].copy()
    # fold padded rows/cols back onto the replicated edge pixels
    out[:, 0, :] += acc[:, 0, 1 : w + 1]
    out[:, -1, :] += acc[:, h + 1, 1 : w + 1]
    out[:, :, 0] += acc[:, 1 : h + 1, 0]
    out[:, :, -1] += acc[:, 1 : h + 1, w + 1]
    out[:, 0, 0] += acc[:, 0, 0]
    out[:, 0, -1] += acc[:, 0, w + 1]
    out[:, -1, 0] += acc[:, h + 1, 0]
    out[:, -1, -1] += acc[:, h + 1, w + 1]
    return out


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (taps / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicate padding."""
    img = _require_chw(img)
    kernel = gaussian_kernel_1d(sigma)
    radius = len(kernel) // 2
    _, h, w = img.shape
    padded = np.pad(img, ((0, 0), (radius, radius), (0, 0)), mode="edge")
    rows = np.zeros_like(img, dtype=np.float64)
    for i, k in enumerate(kernel):
        rows += k * padded[:, i : i + h, :]
    padded = np.pad(rows, ((0, 0), (0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(rows)
    for j, k in enumerate(kernel):
        out += k * padded[:, :, j : j + w]
    return out


def extract_patches(img: np.ndarray, grid_scale: int) -> PatchSet:
    """Split a single-channel raster into an s x s grid of tiles.

    Tiles are ceil(H/s) x ceil(W/s), row-major; right/bottom tiles are
    zero-padded when s does not divide the raster size.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) array, got shape {img.shape}")
    h, w = img.shape
    s = int(grid_scale)
    if s < 1:
        raise ParameterError(f"grid scale must be >= 1, got {grid_scale}")
    if s > min(h, w):
        raise ParameterError(f"grid scale {s} exceeds min(H, W) = {min(h, w)}")
    tile_h = -(-h // s)
    tile_w = -(-w // s)
    padded = np.zeros((s * tile_h, s * tile_w), dtype=img.dtype)
    padded[:h, :w] = img
    tiles = (
        padded.reshape(s, tile_h, s, tile_w)
        .transpose(0, 2, 1, 3)
        .reshape(s * s, tile_h, tile_w)
    )
    return PatchSet(grid_scale=s, patches=tiles.copy())


def reassemble_patches(patches: PatchSet, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`extract_patches`, cropped to the original size."""
    s = patches.grid_scale
    _, tile_h, tile_w = patches.patches.shape
    full = (
        patches.patches.reshape(s, s, tile_h, tile_w)
        .transpose(0, 2, 1, 3)
        .reshape(s * tile_h, s * tile_w)
    )
    if height > full.shape[0] or width > full.shape[1]:
        raise ShapeMismatchError(
            f"patches cover {full.shape}, cannot reassemble {height}x{width}"
        )
    return full[:height, :width].copy()


def l1_mean(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference over all elements."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))
