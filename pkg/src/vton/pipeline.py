"""End-to-end try-on pipeline: warp, parse, fuse.

Stage runners are pure given a model; the model itself is an immutable
bundle of seeded toy networks, so equal (inputs, config) reproduce
bitwise-equal outputs. Rasters of any size are handled by padding to the
encoder's stride multiple and cropping back.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeMismatchError
from .flow import aggregate_flows, pyramid_level_sizes, upsample_flow, warp_mask, warp_with_flow
from .imageops import gaussian_blur, resize_bilinear
from .losses import (
    DEFAULT_LEVEL_WEIGHTS,
    FusionLossWeights,
    ParsingClassWeights,
    WarpLossWeights,
    cloth_ground_truth,
    composite_image_loss,
    mask_loss,
    perceptual_loss,
    tv_loss,
    warping_objective,
    weighted_cross_entropy,
)
from .nets import (
    DOWNSAMPLE_FACTOR,
    Conv2D,
    ConvGRUCell,
    EncoderDecoder,
    FeatureExtractor,
    softmax_channels,
)
from .person import (
    ARM_CLASSES,
    NUM_CLASSES,
    NUM_KEYPOINTS,
    UPPER_CLOTHES,
    apply_agnostic_mask,
    build_agnostic_mask,
    class_mask,
    extract_limb_map,
    limb_patches,
    onehot_from_labels,
)
from .prealign import PreAlignResult, prealign

__all__ = [
    "PipelineConfig",
    "TryOnModel",
    "WarpStageResult",
    "ParseStageResult",
    "FusionStageResult",
    "TryOnBundle",
    "TrainingSample",
    "run_warp_stage",
    "run_parse_stage",
    "run_fusion_stage",
    "run_pipeline",
    "make_training_sample",
    "training_losses",
]


@dataclass(frozen=True)
class PipelineConfig:
    """Run configuration; training-schedule fields are documentation only."""

    height: int = 256
    width: int = 192
    patch_scale: int = 4
    blur_sigma: float = 3.0
    pyramid_mode: str = "literal"   # "literal" (6-k denominators) or "pow2"
    seed: int = 0
    mode: str = "eval"              # "train" blurs limb pixels of the coarse result
    base_width: int = 8
    se_reduction: int = 4
    level_weights: tuple[float, ...] = DEFAULT_LEVEL_WEIGHTS
    warp_weights: WarpLossWeights = field(default_factory=WarpLossWeights)
    class_weights: ParsingClassWeights = field(default_factory=ParsingClassWeights)
    fusion_weights: FusionLossWeights = field(default_factory=FusionLossWeights)
    # recorded training schedule (no optimizer ships with this package)
    batch_size: int = 16
    fusion_batch_size: int = 4
    warp_steps: int = 24000
    parsing_steps: int = 40000
    fusion_steps: int = 80000
    learning_rate: float = 1e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999

    def __post_init__(self):
        if self.mode not in ("train", "eval"):
            raise ParameterError(f"mode must be 'train' or 'eval', got {self.mode!r}")
        if self.pyramid_mode not in ("literal", "pow2"):
            raise ParameterError(f"unknown pyramid mode {self.pyramid_mode!r}")
        if self.patch_scale < 1:
            raise ParameterError("patch scale must be >= 1")
        if self.blur_sigma <= 0:
            raise ParameterError("blur sigma must be positive")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["warp_weights"] = dataclasses.asdict(self.warp_weights)
        out["class_weights"] = list(self.class_weights.values)
        out["fusion_weights"] = dataclasses.asdict(self.fusion_weights)
        out["level_weights"] = list(self.level_weights)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        if "warp_weights" in data:
            data["warp_weights"] = WarpLossWeights(**data["warp_weights"])
        if "class_weights" in data:
            data["class_weights"] = ParsingClassWeights(tuple(data["class_weights"]))
        if "fusion_weights" in data:
            data["fusion_weights"] = FusionLossWeights(**data["fusion_weights"])
        if "level_weights" in data:
            data["level_weights"] = tuple(data["level_weights"])
        return cls(**data)


def _pad_to_multiple(x: np.ndarray, multiple: int = DOWNSAMPLE_FACTOR):
    h, w = x.shape[1:]
    ph = -(-h // multiple) * multiple
    pw = -(-w // multiple) * multiple
    if (ph, pw) == (h, w):
        return x, (h, w)
    return np.pad(x, ((0, 0), (0, ph - h), (0, pw - w))), (h, w)


def _clamp01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


class TryOnModel:
    """Immutable bundle of the seeded stage networks."""

    FLOW_IN = 3 + NUM_KEYPOINTS + NUM_CLASSES            # scaled cloth, pose, parsing
    PARSE_IN = 3 + NUM_KEYPOINTS + NUM_CLASSES + 3       # warped cloth, pose, masked parsing, masked person
    COARSE_IN = 3 + NUM_KEYPOINTS + NUM_CLASSES + 3      # warped cloth, pose, predicted parsing, masked person

    def __init__(self, config: PipelineConfig = PipelineConfig()):
        self.config = config
        seed, bw = config.seed, config.base_width
        s2 = config.patch_scale * config.patch_scale
        self.flow_net = EncoderDecoder(self.FLOW_IN, 2, bw, seed=seed, label="flow")
        self.flow_heads = [
            Conv2D(w, 2, seed=seed, label=f"flow.head{k}")
            for k, w in enumerate(self.flow_net.decoder_widths[:4])
        ]
        self.gru = ConvGRUCell(2, seed=seed, label="flow.gru")
        self.parse_net = EncoderDecoder(
            self.PARSE_IN, NUM_CLASSES, bw, seed=seed,
            use_se=True, se_reduction=config.se_reduction, label="parse",
        )
        self.coarse_net = EncoderDecoder(self.COARSE_IN, 3, bw, seed=seed, label="coarse")
        self.fine_net = EncoderDecoder(3 * s2 + self.COARSE_IN, 3, bw, seed=seed, label="fine")
        self.extractor = FeatureExtractor(seed=seed, label="percep")

    def predict_flow_pyramid(self, x: np.ndarray, pyramid_mode: str | None = None) -> list[np.ndarray]:
        """Sub-flow per decoder level, resampled to the pyramid's raster sizes."""
        mode = pyramid_mode or self.config.pyramid_mode
        h, w = x.shape[1:]
        out, feats = self.flow_net.forward_features(x)
        raw_maps = [head.forward(feats[k]) for k, head in enumerate(self.flow_heads)]
        raw_maps.append(out)
        levels = []
        for raw, (lh, lw) in zip(raw_maps, pyramid_level_sizes(h, w, mode)):
            sub = np.tanh(raw)
            sub[0] *= raw.shape[2]  # bounded displacements in this grid's units
            sub[1] *= raw.shape[1]
            levels.append(upsample_flow(sub, lh, lw))
        return levels

    def parameters(self) -> dict[str, np.ndarray]:
        groups = {
            "flow": self.flow_net.parameters(),
            "parse": self.parse_net.parameters(),
            "coarse": self.coarse_net.parameters(),
            "fine": self.fine_net.parameters(),
            "gru": self.gru.parameters(),
        }
        for k, head in enumerate(self.flow_heads):
            groups[f"flow.head{k}"] = head.parameters()
        out = {}
        for prefix, params in groups.items():
            for name, value in params.items():
                out[f"{prefix}.{name}"] = value
        for i, conv in enumerate(self.extractor.layers):
            for name, value in conv.parameters().items():
                out[f"percep.conv{i}.{name}"] = value
        return out

    def load_parameters(self, params: dict[str, np.ndarray]):
        own = self.parameters()
        missing = sorted(set(own) - set(params))
        if missing:
            raise ParameterError(f"missing parameters: {missing[:4]}{'...' if len(missing) > 4 else ''}")
        for name, target in own.items():
            value = np.asarray(params[name], dtype=target.dtype)
            if value.shape != target.shape:
                raise ShapeMismatchError(
                    f"parameter {name} has shape {value.shape}, expected {target.shape}"
                )
            target[...] = value


@dataclass
class WarpStageResult:
    prealignment: PreAlignResult
    pyramid: list[np.ndarray]
    flow: np.ndarray
    cloth_warped: np.ndarray
    mask_warped: np.ndarray


@dataclass
class ParseStageResult:
    probabilities: np.ndarray  # (7, H, W), softmax scores
    parsing: np.ndarray        # (7, H, W), argmax one-hot


@dataclass
class FusionStageResult:
    coarse: np.ndarray
    coarse_fed: np.ndarray     # what the fine net actually saw (blurred in train mode)
    limb_map: np.ndarray
    limb_patchset: np.ndarray  # (3 s^2, ceil(H/s), ceil(W/s))
    fine: np.ndarray


def run_warp_stage(
    model: TryOnModel,
    cloth: np.ndarray,
    cloth_mask: np.ndarray,
    keypoint_map: np.ndarray,
    parsing: np.ndarray,
    zero_flow: bool = False,
) -> WarpStageResult:
    """Pre-align the garment, predict sub-flows, aggregate, and warp.

    ``zero_flow`` zeroes the predicted sub-flows (debug path); the gated
    aggregation then yields the identity warp exactly.
    """
    pre = prealign(cloth, cloth_mask, parsing)
    h, w = cloth_mask.shape
    x = np.concatenate([pre.scaled, keypoint_map, parsing], axis=0)
    if x.shape[0] != model.FLOW_IN:
        raise ShapeMismatchError(f"warp stage expects {model.FLOW_IN} channels, got {x.shape[0]}")
    padded, _ = _pad_to_multiple(x)
    pyramid = model.predict_flow_pyramid(padded)
    if zero_flow:
        pyramid = [np.zeros_like(level) for level in pyramid]
    flow = aggregate_flows(pyramid, model.gru)[:, :h, :w]
    return WarpStageResult(
        prealignment=pre,
        pyramid=pyramid,
        flow=flow,
        cloth_warped=warp_with_flow(pre.scaled, flow),
        mask_warped=warp_mask(pre.scaled_mask, flow),
    )


def run_parse_stage(
    model: TryOnModel,
    cloth_warped: np.ndarray,
    keypoint_map: np.ndarray,
    parsing_masked: np.ndarray,
    person_masked: np.ndarray,
) -> ParseStageResult:
    """Predict the post-try-on parsing map (soft scores + hard one-hot)."""
    h, w = cloth_warped.shape[1:]
    x = np.concatenate([cloth_warped, keypoint_map, parsing_masked, person_masked], axis=0)
    if x.shape[0] != model.PARSE_IN:
        raise ShapeMismatchError(f"parse stage expects {model.PARSE_IN} channels, got {x.shape[0]}")
    padded, _ = _pad_to_multiple(x)
    scores = model.parse_net.forward(padded)[:, :h, :w]
    probabilities = softmax_channels(scores)
    labels = np.argmax(probabilities, axis=0)
    return ParseStageResult(
        probabilities=probabilities,
        parsing=onehot_from_labels(labels, NUM_CLASSES),
    )


def run_fusion_stage(
    model: TryOnModel,
    cloth_warped: np.ndarray,
    keypoint_map: np.ndarray,
    parsing_pred: np.ndarray,
    person_masked: np.ndarray,
    person: np.ndarray,
    mode: str | None = None,
    limb_map: np.ndarray | None = None,
) -> FusionStageResult:
    """Coarse fusion, then limb-patch-guided refinement.

    The person image is consumed only through the limb map (arm-class
    pixels of the predicted parsing); ``limb_map`` overrides it for
    provenance audits. Train mode blurs the limb region of the coarse
    result before refinement; eval feeds it unchanged.
    """
    mode = mode or model.config.mode
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    h, w = cloth_warped.shape[1:]
    coarse_in = np.concatenate([cloth_warped, keypoint_map, parsing_pred, person_masked], axis=0)
    if coarse_in.shape[0] != model.COARSE_IN:
        raise ShapeMismatchError(
            f"fusion stage expects {model.COARSE_IN} channels, got {coarse_in.shape[0]}"
        )
    padded, _ = _pad_to_multiple(coarse_in)
    coarse = _clamp01(model.coarse_net.forward(padded)[:, :h, :w])

    if limb_map is None:
        limb_map = extract_limb_map(parsing_pred, person)
    patchset = limb_patches(limb_map, model.config.patch_scale)
    patches_up = resize_bilinear(patchset, h, w)

    coarse_fed = coarse
    if mode == "train":
        limb_region = class_mask(parsing_pred, ARM_CLASSES)
        blurred = gaussian_blur(coarse, model.config.blur_sigma)
        coarse_fed = coarse * (1.0 - limb_region) + blurred * limb_region

    fine_in = np.concatenate(
        [patches_up, keypoint_map, person_masked, parsing_pred, coarse_fed], axis=0
    )
    padded, _ = _pad_to_multiple(fine_in)
    fine = _clamp01(model.fine_net.forward(padded)[:, :h, :w])
    return FusionStageResult(
        coarse=coarse,
        coarse_fed=coarse_fed,
        limb_map=limb_map,
        limb_patchset=patchset,
        fine=fine,
    )


@dataclass
class TryOnBundle:
    """Every input, intermediate, and output of one pipeline run."""

    cloth: np.ndarray
    cloth_mask: np.ndarray
    keypoint_map: np.ndarray
    parsing_source: np.ndarray
    person: np.ndarray

    agnostic_mask: np.ndarray
    person_masked: np.ndarray
    parsing_masked: np.ndarray

    cloth_shifted: np.ndarray
    cloth_scaled: np.ndarray
    cloth_scaled_mask: np.ndarray
    flow: np.ndarray
    cloth_warped: np.ndarray
    cloth_warped_mask: np.ndarray

    parsing_probs: np.ndarray
    parsing_pred: np.ndarray

    limb_map: np.ndarray
    limb_patchset: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray

    mode: str
    stage_ms: dict[str, float] = field(default_factory=dict)

    def validate(self):
        """Raster-shape, one-hot, and range invariants of a finished run."""
        h, w = self.person.shape[1:]
        for name in (
            "cloth", "cloth_mask", "keypoint_map", "parsing_source", "person",
            "agnostic_mask", "person_masked", "parsing_masked", "cloth_shifted",
            "cloth_scaled", "cloth_scaled_mask", "flow", "cloth_warped",
            "cloth_warped_mask", "parsing_probs", "parsing_pred", "limb_map",
            "coarse", "fine",
        ):
            arr = getattr(self, name)
            if arr.shape[-2:] != (h, w):
                raise ShapeMismatchError(f"bundle field {name} has raster {arr.shape[-2:]}, expected {(h, w)}")
        if not (self.parsing_pred.sum(axis=0) == 1.0).all():
            raise ParameterError("predicted parsing map is not one-hot")
        for name in ("coarse", "fine"):
            arr = getattr(self, name)
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ParameterError(f"{name} output leaves [0, 1]")
        if not np.isfinite(self.flow).all():
            raise ParameterError("aggregated flow is not finite")
        return self


def run_pipeline(
    model: TryOnModel,
    cloth: np.ndarray,
    cloth_mask: np.ndarray,
    keypoint_map: np.ndarray,
    parsing: np.ndarray,
    person: np.ndarray,
    mode: str | None = None,
    zero_flow: bool = False,
    _limb_override: np.ndarray | None = None,
) -> TryOnBundle:
    """Run warp, parse, and fusion stages and collect all intermediates."""
    mode = mode or model.config.mode
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    agnostic = build_agnostic_mask(parsing)
    person_masked, parsing_masked = apply_agnostic_mask(person, parsing, agnostic)
    timings["masking"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    warp = run_warp_stage(model, cloth, cloth_mask, keypoint_map, parsing, zero_flow=zero_flow)
    timings["warp"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    parse = run_parse_stage(model, warp.cloth_warped, keypoint_map, parsing_masked, person_masked)
    timings["parse"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    fusion = run_fusion_stage(
        model, warp.cloth_warped, keypoint_map, parse.parsing,
        person_masked, person, mode=mode, limb_map=_limb_override,
    )
    timings["fusion"] = (time.perf_counter() - t0) * 1000.0

    bundle = TryOnBundle(
        cloth=np.asarray(cloth, dtype=np.float64),
        cloth_mask=np.asarray(cloth_mask, dtype=np.float64),
        keypoint_map=np.asarray(keypoint_map, dtype=np.float64),
        parsing_source=np.asarray(parsing, dtype=np.float64),
        person=np.asarray(person, dtype=np.float64),
        agnostic_mask=agnostic,
        person_masked=person_masked,
        parsing_masked=parsing_masked,
        cloth_shifted=warp.prealignment.shifted,
        cloth_scaled=warp.prealignment.scaled,
        cloth_scaled_mask=warp.prealignment.scaled_mask,
        flow=warp.flow,
        cloth_warped=warp.cloth_warped,
        cloth_warped_mask=warp.mask_warped,
        parsing_probs=parse.probabilities,
        parsing_pred=parse.parsing,
        limb_map=fusion.limb_map,
        limb_patchset=fusion.limb_patchset,
        coarse=fusion.coarse,
        fine=fusion.fine,
        mode=mode,
        stage_ms=timings,
    )
    return bundle.validate()


@dataclass
class TrainingSample:
    """Self-supervised sample: masked inputs plus reconstruction targets."""

    agnostic_mask: np.ndarray
    person_masked: np.ndarray
    parsing_masked: np.ndarray
    cloth_region_target: np.ndarray   # clothing mask extracted from the source parsing
    warped_cloth_target: np.ndarray   # person image restricted to that region
    parsing_target: np.ndarray
    image_target: np.ndarray


def make_training_sample(
    person: np.ndarray,
    parsing: np.ndarray,
    keypoint_map: np.ndarray,
    cloth: np.ndarray,
    cloth_mask: np.ndarray,
) -> TrainingSample:
    """Assemble agnostic inputs and supervision targets from one person."""
    del keypoint_map, cloth, cloth_mask  # part of the sample, not transformed here
    agnostic = build_agnostic_mask(parsing)
    person_masked, parsing_masked = apply_agnostic_mask(person, parsing, agnostic)
    region = class_mask(parsing, {UPPER_CLOTHES})
    return TrainingSample(
        agnostic_mask=agnostic,
        person_masked=person_masked,
        parsing_masked=parsing_masked,
        cloth_region_target=region,
        warped_cloth_target=cloth_ground_truth(person, region),
        parsing_target=np.asarray(parsing, dtype=np.float64),
        image_target=np.asarray(person, dtype=np.float64),
    )


def training_losses(model: TryOnModel, bundle: TryOnBundle, sample: TrainingSample) -> dict[str, float]:
    """Every objective of a self-supervised run, as a flat report."""
    cfg = model.config
    mask_term = mask_loss(bundle.cloth_warped_mask, sample.cloth_region_target)
    cloth_term = float(np.mean(np.abs(bundle.cloth_warped - sample.warped_cloth_target)))
    perceptual_term = perceptual_loss(
        bundle.cloth_warped, sample.warped_cloth_target, model.extractor, cfg.level_weights
    )
    smooth_term = tv_loss(bundle.flow)
    parsing_term = weighted_cross_entropy(
        bundle.parsing_probs, sample.parsing_target, cfg.class_weights
    )
    coarse_term = composite_image_loss(
        bundle.coarse, sample.image_target, model.extractor, cfg.fusion_weights, cfg.level_weights
    )
    fine_term = composite_image_loss(
        bundle.fine, sample.image_target, model.extractor, cfg.fusion_weights, cfg.level_weights
    )
    return {
        "mask": mask_term,
        "cloth": cloth_term,
        "perceptual": perceptual_term,
        "smoothness": smooth_term,
        "warp_total": warping_objective(
            mask_term, cloth_term, perceptual_term, smooth_term, cfg.warp_weights
        ),
        "parsing_cross_entropy": parsing_term,
        "coarse_composite": coarse_term,
        "fine_composite": fine_term,
        "fusion_total": coarse_term + fine_term,
    }
