"""File formats: 8-bit PNGs, indexed parsing PNGs, keypoint JSON, and the
flat binary flow ("PLVF") and weight ("PLVW") containers.

All writers are atomic (temp file in the target directory, then rename),
so a failed run never leaves partial outputs behind.
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError, ShapeMismatchError
from .person import NUM_CLASSES, labels_from_onehot, onehot_from_labels

__all__ = [
    "atomic_write_bytes",
    "write_json_atomic",
    "save_image",
    "load_image",
    "save_mask",
    "load_mask",
    "save_parsing",
    "load_parsing",
    "save_keypoints",
    "load_keypoints",
    "save_flow",
    "load_flow",
    "save_weights",
    "load_weights",
]

FLOW_MAGIC = b"PLVF"
WEIGHTS_MAGIC = b"PLVW"

# one distinctive palette entry per parsing class, for viewable indexed PNGs
PARSING_PALETTE = [
    (0, 0, 0),        # background
    (128, 64, 0),     # hair
    (255, 200, 160),  # face
    (0, 128, 255),    # upper clothes
    (0, 255, 0),      # left arm
    (255, 255, 0),    # right arm
    (128, 0, 128),    # lower body
]


def atomic_write_bytes(path: str | Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str | Path, obj):
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_image(path: str | Path, img: np.ndarray):
    """Write a (3, H, W) [0,1] image as 8-bit RGB PNG."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeMismatchError(f"expected (3, H, W) image, got shape {img.shape}")
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(data.transpose(1, 2, 0), "RGB")))


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        data = np.asarray(img.convert("RGB"), dtype=np.float64)
    return data.transpose(2, 0, 1) / 255.0


def save_mask(path: str | Path, mask: np.ndarray):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) mask, got shape {mask.shape}")
    data = (np.asarray(mask) >= 0.5).astype(np.uint8) * 255
    atomic_write_bytes(path, _png_bytes(Image.fromarray(data, "L")))


def load_mask(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        data = np.asarray(img.convert("L"))
    return (data >= 128).astype(np.float64)


def save_parsing(path: str | Path, parsing: np.ndarray):
    """Write a one-hot parsing map as an indexed PNG (pixel value = class)."""
    labels = labels_from_onehot(parsing).astype(np.uint8)
    img = Image.fromarray(labels, "P")
    palette = []
    for rgb in PARSING_PALETTE:
        palette.extend(rgb)
    img.putpalette(palette)
    atomic_write_bytes(path, _png_bytes(img))


def load_parsing(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "P":
            raise ParameterError(f"parsing map {path} is not an indexed PNG (mode {img.mode})")
        labels = np.asarray(img)
    if labels.max() >= NUM_CLASSES:
        raise ParameterError(
            f"parsing map {path} holds class {labels.max()}, valid ids are 0..{NUM_CLASSES - 1}"
        )
    return onehot_from_labels(labels.astype(np.int64))


def save_keypoints(path: str | Path, points: list[tuple[int, float, float]]):
    payload = [{"id": int(i), "x": float(x), "y": float(y)} for i, x, y in points]
    write_json_atomic(path, payload)


def load_keypoints(path: str | Path) -> list[tuple[int, float, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise ParameterError(f"keypoint file {path} must hold a JSON array")
    try:
        return [(int(p["id"]), float(p["x"]), float(p["y"])) for p in payload]
    except (TypeError, KeyError) as exc:
        raise ParameterError(f"malformed keypoint entry in {path}: {exc}") from exc


def save_flow(path: str | Path, flow: np.ndarray):
    """Serialize a (2, H, W) flow: magic, u32 H, u32 W, f32 (dx, dy) pairs."""
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[0] != 2:
        raise ShapeMismatchError(f"expected (2, H, W) flow, got shape {flow.shape}")
    h, w = flow.shape[1:]
    pairs = np.stack([flow[0], flow[1]], axis=-1).astype("<f4")
    atomic_write_bytes(path, FLOW_MAGIC + struct.pack("<II", h, w) + pairs.tobytes())


def load_flow(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != FLOW_MAGIC:
        raise ParameterError(f"{path} is not a flow file (bad magic {blob[:4]!r})")
    h, w = struct.unpack("<II", blob[4:12])
    expected = 12 + h * w * 2 * 4
    if len(blob) != expected:
        raise ParameterError(f"{path} is truncated: {len(blob)} bytes, expected {expected}")
    pairs = np.frombuffer(blob, dtype="<f4", offset=12).reshape(h, w, 2)
    return np.stack([pairs[..., 0], pairs[..., 1]], axis=0).astype(np.float64)


def save_weights(path: str | Path, params: dict[str, np.ndarray]):
    """Serialize named arrays: (u32 name len, name, u32 rank, dims, f32 data)."""
    out = io.BytesIO()
    out.write(WEIGHTS_MAGIC)
    for name in params:
        arr = np.asarray(params[name], dtype="<f4")
        encoded = name.encode("utf-8")
        out.write(struct.pack("<I", len(encoded)))
        out.write(encoded)
        out.write(struct.pack("<I", arr.ndim))
        out.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.write(arr.tobytes())
    atomic_write_bytes(path, out.getvalue())


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[:4] != WEIGHTS_MAGIC:
        raise ParameterError(f"{path} is not a weights file (bad magic {blob[:4]!r})")
    params: dict[str, np.ndarray] = {}
    offset = 4
    try:
        while offset < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            shape = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = int(np.prod(shape)) if rank else 1
            arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            offset += count * 4
            params[name] = arr.reshape(shape).copy()
    except (struct.error, ValueError) as exc:
        raise ParameterError(f"{path} is corrupt: {exc}") from exc
    return params
