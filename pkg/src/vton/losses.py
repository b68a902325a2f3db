"""Training objectives, their analytic gradients, and Gaussian Fréchet distance.

All norms are per-element means, so the default loss weights transfer
across raster sizes. Every gradient here is checked against central
finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeMismatchError
from .flow import validate_flow
from .imageops import l1_mean, sobel_adjoint, sobel_gradients
from .nets import FeatureExtractor

__all__ = [
    "WarpLossWeights",
    "ParsingClassWeights",
    "FusionLossWeights",
    "DEFAULT_LEVEL_WEIGHTS",
    "GaussianStats",
    "mask_loss",
    "cloth_ground_truth",
    "cloth_loss",
    "perceptual_loss",
    "tv_loss",
    "warping_objective",
    "weighted_cross_entropy",
    "edge_loss",
    "composite_image_loss",
    "fusion_objective",
    "loss_gradient",
    "gaussian_stats",
    "frechet_distance",
]

# relative weight of each feature level inside the perceptual term
DEFAULT_LEVEL_WEIGHTS = (1 / 32, 1 / 16, 1 / 8, 1 / 4, 1.0)

PROB_FLOOR = 1e-12          # clamp before log in cross-entropy
NORMALIZATION_TOL = 1e-5    # per-pixel probability sum tolerance
TV_GRAD_EPS = 1e-8          # smoothing inside the TV gradient denominator
PSD_TOL = 1e-8              # eigenvalue tolerance for covariance matrices


@dataclass(frozen=True)
class WarpLossWeights:
    """Weights of the clothing-warping objective's four terms."""

    mask: float = 2.5
    cloth: float = 5.0
    perceptual: float = 1.0
    smoothness: float = 0.1


@dataclass(frozen=True)
class ParsingClassWeights:
    """Per-class weights of the parsing cross-entropy (clothing/arms x3)."""

    values: tuple[float, ...] = (1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 1.0)

    def __post_init__(self):
        if len(self.values) != 7 or any(v <= 0 for v in self.values):
            raise ParameterError("expected 7 positive class weights")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class FusionLossWeights:
    """Weights of the texture-fusion reconstruction objective."""

    image: float = 1.0
    perceptual: float = 2.0
    edge: float = 0.1


def mask_loss(pred_mask: np.ndarray, true_mask: np.ndarray) -> float:
    """Mean L1 distance between a warped region mask and its target."""
    return l1_mean(pred_mask, true_mask)


def cloth_ground_truth(person: np.ndarray, cloth_region: np.ndarray) -> np.ndarray:
    """Clothing pixels of the person image: person * mask per channel."""
    person = np.asarray(person, dtype=np.float64)
    cloth_region = np.asarray(cloth_region, dtype=np.float64)
    if person.ndim != 3 or person.shape[1:] != cloth_region.shape:
        raise ShapeMismatchError(
            f"person {person.shape} does not match region mask {cloth_region.shape}"
        )
    return person * cloth_region


def cloth_loss(warped: np.ndarray, target: np.ndarray) -> float:
    """Mean L1 distance between warped clothing and its in-image target."""
    return l1_mean(warped, target)


def _check_image_pair(a: np.ndarray, b: np.ndarray):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 3 or a.shape[0] != 3:
        raise ShapeMismatchError(f"expected (3, H, W) images, got {a.shape}")
    return a, b


def perceptual_loss(
    a: np.ndarray,
    b: np.ndarray,
    extractor: FeatureExtractor,
    level_weights=DEFAULT_LEVEL_WEIGHTS,
) -> float:
    """Weighted mean-L1 distance between multi-level feature maps."""
    a, b = _check_image_pair(a, b)
    feats_a = extractor.features(a)
    feats_b = extractor.features(b)
    if len(level_weights) != len(feats_a):
        raise ParameterError(f"expected {len(feats_a)} level weights")
    return float(
        sum(w * l1_mean(fa, fb) for w, fa, fb in zip(level_weights, feats_a, feats_b))
    )


def perceptual_loss_grad(
    a: np.ndarray,
    b: np.ndarray,
    extractor: FeatureExtractor,
    level_weights=DEFAULT_LEVEL_WEIGHTS,
) -> np.ndarray:
    """Gradient of :func:`perceptual_loss` w.r.t. its first image."""
    a, b = _check_image_pair(a, b)
    feats_a = extractor.features(a)
    feats_b = extractor.features(b)
    cotangents = [
        w * np.sign(fa - fb) / fa.size
        for w, fa, fb in zip(level_weights, feats_a, feats_b)
    ]
    return extractor.input_gradient(a, cotangents)


def _tv_diffs(flow: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = np.zeros_like(flow)
    dy = np.zeros_like(flow)
    dx[:, :, :-1] = flow[:, :, 1:] - flow[:, :, :-1]
    dy[:, :-1, :] = flow[:, 1:, :] - flow[:, :-1, :]
    return dx, dy


def tv_loss(flow: np.ndarray) -> float:
    """Isotropic total variation of a flow, averaged over area and channels.

    Forward differences, zero at the last row/column; exactly 0 for
    constant flows.
    """
    flow = validate_flow(flow)
    if flow.shape[1] < 2 or flow.shape[2] < 2:
        raise ShapeMismatchError("TV needs at least a 2x2 raster")
    dx, dy = _tv_diffs(flow)
    return float(np.sqrt(dx * dx + dy * dy).mean())


def tv_loss_grad(flow: np.ndarray) -> np.ndarray:
    """Smoothed subgradient of :func:`tv_loss` (epsilon in the denominator only)."""
    flow = validate_flow(flow)
    dx, dy = _tv_diffs(flow)
    denom = np.sqrt(dx * dx + dy * dy + TV_GRAD_EPS)
    gx = dx / denom
    gy = dy / denom
    grad = -(gx + gy)
    grad[:, :, 1:] += gx[:, :, :-1]
    grad[:, 1:, :] += gy[:, :-1, :]
    return grad / flow.size


def warping_objective(
    mask_term: float,
    cloth_term: float,
    perceptual_term: float,
    smoothness_term: float,
    weights: WarpLossWeights = WarpLossWeights(),
) -> float:
    """Weighted sum of the four clothing-warping loss terms."""
    return (
        weights.mask * mask_term
        + weights.cloth * cloth_term
        + weights.perceptual * perceptual_term
        + weights.smoothness * smoothness_term
    )


def weighted_cross_entropy(
    probs: np.ndarray,
    target: np.ndarray,
    class_weights: ParsingClassWeights = ParsingClassWeights(),
    check_normalized: bool = True,
) -> float:
    """Class-weighted cross-entropy between a probability map and one-hot labels.

    ``probs`` must sum to 1 per pixel (within 1e-5) unless
    ``check_normalized`` is disabled (the finite-difference oracle
    perturbs single entries). Mean is over pixels.
    """
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if probs.shape != target.shape or probs.ndim != 3:
        raise ShapeMismatchError(f"shape mismatch: {probs.shape} vs {target.shape}")
    if check_normalized:
        sums = probs.sum(axis=0)
        if np.abs(sums - 1.0).max() > NORMALIZATION_TOL:
            raise ParameterError(
                "probability map is not normalized per pixel "
                f"(max |sum - 1| = {np.abs(sums - 1.0).max():.3g})"
            )
    weights = class_weights.as_array()[:, None, None]
    n_pixels = probs.shape[1] * probs.shape[2]
    log_p = np.log(np.clip(probs, PROB_FLOOR, None))
    return float(-(weights * target * log_p).sum() / n_pixels)


def weighted_cross_entropy_grad(
    probs: np.ndarray,
    target: np.ndarray,
    class_weights: ParsingClassWeights = ParsingClassWeights(),
) -> np.ndarray:
    """Gradient w.r.t. the raw probability entries (unconstrained)."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if probs.shape != target.shape:
        raise ShapeMismatchError(f"shape mismatch: {probs.shape} vs {target.shape}")
    weights = class_weights.as_array()[:, None, None]
    n_pixels = probs.shape[1] * probs.shape[2]
    clipped = np.clip(probs, PROB_FLOOR, None)
    grad = -weights * target / clipped / n_pixels
    grad[probs < PROB_FLOOR] = 0.0  # clamped region is flat
    return grad


def edge_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean L1 distance between Sobel gradient stacks of two images."""
    return l1_mean(sobel_gradients(a), sobel_gradients(b))


def edge_loss_grad(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ga = sobel_gradients(a)
    gb = sobel_gradients(b)
    return sobel_adjoint(np.sign(ga - gb)) / ga.size


def composite_image_loss(
    pred: np.ndarray,
    target: np.ndarray,
    extractor: FeatureExtractor,
    weights: FusionLossWeights = FusionLossWeights(),
    level_weights=DEFAULT_LEVEL_WEIGHTS,
) -> float:
    """Image L1 + perceptual + edge reconstruction objective."""
    pred, target = _check_image_pair(pred, target)
    return (
        weights.image * l1_mean(pred, target)
        + weights.perceptual * perceptual_loss(pred, target, extractor, level_weights)
        + weights.edge * edge_loss(pred, target)
    )


def composite_image_loss_grad(
    pred: np.ndarray,
    target: np.ndarray,
    extractor: FeatureExtractor,
    weights: FusionLossWeights = FusionLossWeights(),
    level_weights=DEFAULT_LEVEL_WEIGHTS,
) -> np.ndarray:
    pred, target = _check_image_pair(pred, target)
    grad = weights.image * np.sign(pred - target) / pred.size
    grad += weights.perceptual * perceptual_loss_grad(pred, target, extractor, level_weights)
    grad += weights.edge * edge_loss_grad(pred, target)
    return grad


def fusion_objective(
    coarse: np.ndarray,
    fine: np.ndarray,
    target: np.ndarray,
    extractor: FeatureExtractor,
    weights: FusionLossWeights = FusionLossWeights(),
) -> float:
    """Sum of the coarse and fine composite reconstruction losses."""
    return composite_image_loss(coarse, target, extractor, weights) + composite_image_loss(
        fine, target, extractor, weights
    )


_GRADIENTS = {
    ("mask", "pred"): lambda kw: np.sign(
        np.asarray(kw["pred"], dtype=np.float64) - np.asarray(kw["target"], dtype=np.float64)
    ) / np.asarray(kw["pred"]).size,
    ("cloth", "pred"): lambda kw: np.sign(
        np.asarray(kw["pred"], dtype=np.float64) - np.asarray(kw["target"], dtype=np.float64)
    ) / np.asarray(kw["pred"]).size,
    ("perceptual", "pred"): lambda kw: perceptual_loss_grad(
        kw["pred"], kw["target"], kw["extractor"],
        kw.get("level_weights", DEFAULT_LEVEL_WEIGHTS),
    ),
    ("tv", "flow"): lambda kw: tv_loss_grad(kw["flow"]),
    ("cross_entropy", "probs"): lambda kw: weighted_cross_entropy_grad(
        kw["probs"], kw["target"], kw.get("class_weights", ParsingClassWeights())
    ),
    ("edge", "pred"): lambda kw: edge_loss_grad(kw["pred"], kw["target"]),
    ("composite", "pred"): lambda kw: composite_image_loss_grad(
        kw["pred"], kw["target"], kw["extractor"],
        kw.get("weights", FusionLossWeights()),
        kw.get("level_weights", DEFAULT_LEVEL_WEIGHTS),
    ),
}


def loss_gradient(name: str, wrt: str, **inputs) -> np.ndarray:
    """Analytic gradient of a named loss w.r.t. one of its input slots.

    Supported (name, slot) pairs: (mask|cloth|perceptual|edge|composite,
    "pred"), (tv, "flow"), (cross_entropy, "probs").
    """
    try:
        fn = _GRADIENTS[(name, wrt)]
    except KeyError:
        raise ParameterError(f"no gradient registered for loss {name!r} w.r.t. {wrt!r}")
    return fn(inputs)


@dataclass(frozen=True)
class GaussianStats:
    """Mean vector and covariance matrix of a feature distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ShapeMismatchError(
                f"expected (d,) mean and (d, d) covariance, got {mean.shape}, {cov.shape}"
            )
        if np.abs(cov - cov.T).max() > PSD_TOL:
            raise ParameterError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def gaussian_stats(features: np.ndarray) -> GaussianStats:
    """Sample mean/covariance of an (n, d) feature matrix (n >= 2)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ParameterError(f"expected (n >= 2, d) features, got shape {features.shape}")
    mean = features.mean(axis=0)
    cov = np.atleast_2d(np.cov(features, rowvar=False))
    return GaussianStats(mean=mean, cov=cov)


def _psd_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sym = (matrix + matrix.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() < -PSD_TOL * max(1.0, abs(eigvals.max())):
        raise ParameterError(
            f"matrix is not PSD within tolerance (min eigenvalue {eigvals.min():.3g})"
        )
    return np.clip(eigvals, 0.0, None), eigvecs


def frechet_distance(stats_a: GaussianStats, stats_b: GaussianStats) -> float:
    """Fréchet distance between two Gaussians.

    ||mu_a - mu_b||^2 + tr(Ca + Cb - 2 (Ca Cb)^(1/2)), with the matrix
    square root evaluated through eigendecompositions of symmetric PSD
    forms (negative eigenvalues clamped at zero).
    """
    if stats_a.dim != stats_b.dim:
        raise ShapeMismatchError(f"dimension mismatch: {stats_a.dim} vs {stats_b.dim}")
    diff = stats_a.mean - stats_b.mean
    vals_a, vecs_a = _psd_eigh(stats_a.cov)
    _psd_eigh(stats_b.cov)  # validate the second covariance too
    root_a = (vecs_a * np.sqrt(vals_a)) @ vecs_a.T
    # tr((Ca Cb)^(1/2)) equals tr((sqrt(Ca) Cb sqrt(Ca))^(1/2)), which is symmetric
    inner_vals, _ = _psd_eigh(root_a @ stats_b.cov @ root_a)
    trace_root = np.sqrt(inner_vals).sum()
    return float(
        diff @ diff + np.trace(stats_a.cov) + np.trace(stats_b.cov) - 2.0 * trace_root
    )
