"""Deterministic desk-scale virtual try-on: clothing pre-alignment,
appearance-flow warping with gated multi-scale aggregation, parsing
prediction, and limb-aware texture fusion, plus the full loss suite with
analytic gradients.
"""

from .errors import EmptyRegionError, ParameterError, ShapeMismatchError
from .imageops import (
    PatchSet,
    bilinear_sample,
    extract_patches,
    gaussian_blur,
    l1_mean,
    reassemble_patches,
    resize_bilinear,
    sobel_gradients,
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
    labels_from_onehot,
    limb_patches,
    onehot_from_labels,
    render_keypoints,
    validate_parsing,
)
from .prealign import PreAlignResult, Rect, circumscribed_rect, clothing_height, prealign, rect_center
from .flow import (
    aggregate_flows,
    pyramid_level_sizes,
    upsample_flow,
    validate_pyramid,
    warp_mask,
    warp_with_flow,
)
from .nets import Conv2D, ConvGRUCell, EncoderDecoder, FeatureExtractor, SEBlock
from .losses import (
    DEFAULT_LEVEL_WEIGHTS,
    FusionLossWeights,
    GaussianStats,
    ParsingClassWeights,
    WarpLossWeights,
    cloth_ground_truth,
    cloth_loss,
    composite_image_loss,
    edge_loss,
    frechet_distance,
    fusion_objective,
    gaussian_stats,
    loss_gradient,
    mask_loss,
    perceptual_loss,
    tv_loss,
    warping_objective,
    weighted_cross_entropy,
)
from .pipeline import (
    PipelineConfig,
    TrainingSample,
    TryOnBundle,
    TryOnModel,
    make_training_sample,
    run_fusion_stage,
    run_parse_stage,
    run_pipeline,
    run_warp_stage,
    training_losses,
)
from .fixtures import Scene, make_scene

__version__ = "0.1.0"
