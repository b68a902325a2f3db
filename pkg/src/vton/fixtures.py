"""Procedurally drawn synthetic try-on scenes.

Each scene is a person (head, hair, striped top, arms with exposed
skin, legs) plus a separately positioned in-shop garment on a white
background, with a consistent parsing map and 18 pose keypoints. Scenes
are deterministic in the seed and quantized to the 8-bit grid so PNG
round trips are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import person as P
from .person import render_keypoints

__all__ = ["Scene", "make_scene"]


@dataclass
class Scene:
    cloth: np.ndarray                                # (3, H, W), white background
    cloth_mask: np.ndarray                           # (H, W) garment support
    person: np.ndarray                               # (3, H, W)
    parsing: np.ndarray                              # (7, H, W) one-hot
    keypoints: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def height(self) -> int:
        return self.person.shape[1]

    @property
    def width(self) -> int:
        return self.person.shape[2]

    def keypoint_map(self, radius: float | None = None) -> np.ndarray:
        return render_keypoints(self.keypoints, self.height, self.width, radius)


def _quantize(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def _ellipse(labels: np.ndarray, cy: float, cx: float, ry: float, rx: float, value: int):
    h, w = labels.shape
    gy, gx = np.indices((h, w), dtype=np.float64)
    inside = ((gy - cy) / ry) ** 2 + ((gx - cx) / rx) ** 2 <= 1.0
    labels[inside] = value


def _rect(labels: np.ndarray, y0: float, y1: float, x0: float, x1: float, value: int):
    h, w = labels.shape
    ya, yb = int(max(0, round(y0))), int(min(h, round(y1)))
    xa, xb = int(max(0, round(x0))), int(min(w, round(x1)))
    if ya < yb and xa < xb:
        labels[ya:yb, xa:xb] = value


def _striped(img: np.ndarray, region: np.ndarray, base, accent, period: int = 6):
    """Paint a region with horizontal two-tone stripes."""
    h = img.shape[1]
    bands = (np.arange(h) // max(1, period // 2)) % 2
    for c in range(3):
        plane = np.where(bands[:, None] == 0, base[c], accent[c])
        img[c] = np.where(region, plane, img[c])


def make_scene(seed: int = 42, height: int = 96, width: int = 64) -> Scene:
    """Draw one randomized person/garment pair at the given raster size."""
    rng = np.random.default_rng(seed)
    h, w = height, width

    # ---- person layout ----
    cx = w * (0.5 + rng.uniform(-0.04, 0.04))
    head_cy = h * 0.13
    head_ry, head_rx = h * 0.055, w * 0.10
    torso_top = h * (0.22 + rng.uniform(-0.02, 0.02))
    torso_bot = h * (0.52 + rng.uniform(-0.02, 0.06))
    torso_half = w * (0.17 + rng.uniform(0.0, 0.05))
    arm_w = w * 0.07
    wrist_y = torso_bot + h * rng.uniform(0.08, 0.14)
    sleeve_frac = rng.uniform(0.15, 0.85)  # how far sleeves reach down the arm
    sleeve_y = torso_top + sleeve_frac * (wrist_y - torso_top)
    leg_bot = h * 0.95

    labels = np.zeros((h, w), dtype=np.int64)
    _ellipse(labels, head_cy - head_ry * 0.7, cx, head_ry * 1.25, head_rx * 1.15, P.HAIR)
    _ellipse(labels, head_cy, cx, head_ry, head_rx, P.FACE)
    _rect(labels, head_cy + head_ry * 0.5, torso_top, cx - w * 0.03, cx + w * 0.03, P.FACE)  # neck
    _rect(labels, torso_bot, leg_bot, cx - torso_half * 0.8, cx + torso_half * 0.8, P.LOWER_BODY)
    # full arms first, then the sleeved part is overwritten by clothing
    _rect(labels, torso_top, wrist_y, cx - torso_half - arm_w, cx - torso_half, P.LEFT_ARM)
    _rect(labels, torso_top, wrist_y, cx + torso_half, cx + torso_half + arm_w, P.RIGHT_ARM)
    _rect(labels, torso_top, torso_bot, cx - torso_half, cx + torso_half, P.UPPER_CLOTHES)
    _rect(labels, torso_top, min(sleeve_y, wrist_y - 2), cx - torso_half - arm_w, cx - torso_half, P.UPPER_CLOTHES)
    _rect(labels, torso_top, min(sleeve_y, wrist_y - 2), cx + torso_half, cx + torso_half + arm_w, P.UPPER_CLOTHES)
    parsing = P.onehot_from_labels(labels)

    skin = np.array([0.87, 0.72, 0.60]) + rng.uniform(-0.05, 0.05, 3)
    hair = np.array([0.22, 0.14, 0.10]) + rng.uniform(-0.05, 0.05, 3)
    top_base = rng.uniform(0.15, 0.85, 3)
    top_accent = np.clip(top_base + rng.uniform(-0.35, 0.35, 3), 0.05, 0.95)
    pants = np.array([0.16, 0.18, 0.35]) + rng.uniform(-0.05, 0.05, 3)

    person_img = np.full((3, h, w), 0.92)
    for value, color in (
        (P.HAIR, hair),
        (P.FACE, skin),
        (P.LEFT_ARM, skin * 0.97),
        (P.RIGHT_ARM, skin * 0.94),
        (P.LOWER_BODY, pants),
    ):
        region = labels == value
        for c in range(3):
            person_img[c] = np.where(region, color[c], person_img[c])
    _striped(person_img, labels == P.UPPER_CLOTHES, top_base, top_accent)
    person_img = _quantize(person_img)

    # ---- keypoints (COCO-18 order) ----
    shoulder_y = torso_top + 2
    hip_y = torso_bot
    elbow_y = (shoulder_y + wrist_y) / 2
    knee_y = (hip_y + leg_bot) / 2
    lx, rx_ = cx - torso_half - arm_w / 2, cx + torso_half + arm_w / 2
    keypoints = [
        (0, cx, head_cy),                         # nose
        (1, cx, torso_top),                       # neck
        (2, cx + torso_half, shoulder_y),         # right shoulder
        (3, rx_, elbow_y),                        # right elbow
        (4, rx_, wrist_y - 1),                    # right wrist
        (5, cx - torso_half, shoulder_y),         # left shoulder
        (6, lx, elbow_y),                         # left elbow
        (7, lx, wrist_y - 1),                     # left wrist
        (8, cx + torso_half * 0.5, hip_y),        # right hip
        (9, cx + torso_half * 0.5, knee_y),       # right knee
        (10, cx + torso_half * 0.5, leg_bot - 1), # right ankle
        (11, cx - torso_half * 0.5, hip_y),       # left hip
        (12, cx - torso_half * 0.5, knee_y),      # left knee
        (13, cx - torso_half * 0.5, leg_bot - 1), # left ankle
        (14, cx + head_rx * 0.4, head_cy - 1),    # right eye
        (15, cx - head_rx * 0.4, head_cy - 1),    # left eye
        (16, cx + head_rx * 0.9, head_cy),        # right ear
        (17, cx - head_rx * 0.9, head_cy),        # left ear
    ]

    # ---- in-shop garment, independently located and sized ----
    g_cx = w * (0.5 + rng.uniform(-0.10, 0.10))
    g_cy = h * (0.45 + rng.uniform(-0.08, 0.08))
    g_half = w * (0.16 + rng.uniform(0.0, 0.06))
    g_height = h * (0.24 + rng.uniform(0.0, 0.14))
    g_sleeve = g_height * rng.uniform(0.3, 0.95)
    g_arm_w = w * 0.06

    garment = np.zeros((h, w), dtype=np.int64)
    _rect(garment, g_cy - g_height / 2, g_cy + g_height / 2, g_cx - g_half, g_cx + g_half, 1)
    _rect(garment, g_cy - g_height / 2, g_cy - g_height / 2 + g_sleeve,
          g_cx - g_half - g_arm_w, g_cx - g_half, 1)
    _rect(garment, g_cy - g_height / 2, g_cy - g_height / 2 + g_sleeve,
          g_cx + g_half, g_cx + g_half + g_arm_w, 1)
    cloth_mask = garment.astype(np.float64)

    c_base = rng.uniform(0.15, 0.85, 3)
    c_accent = np.clip(c_base + rng.uniform(-0.35, 0.35, 3), 0.05, 0.95)
    cloth_img = np.ones((3, h, w))
    _striped(cloth_img, garment == 1, c_base, c_accent)
    cloth_img = _quantize(cloth_img)

    return Scene(
        cloth=cloth_img,
        cloth_mask=cloth_mask,
        person=person_img,
        parsing=parsing,
        keypoints=keypoints,
    )
