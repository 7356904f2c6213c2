"""Median histogram matching (MHM) for restoring color-shifted photographs.

Learns one monotone transfer curve per CMY dye channel from pairs of
damaged and reference scans, combines per-pair curves by a pointwise
median and applies the result to whole collections.
"""

from .evaluation import (
    EvalReport,
    PixelDistanceReport,
    TransformDistance,
    comparison_report,
    loo_cv,
    pixel_distance,
    transform_distance,
)
from .histogram import DensityProfile, QuantileProfile, density, quantiles
from .image import ImageBuffer, read_image, write_image
from .transfer import (
    ChannelTransform,
    TransformSet,
    aggregate_median,
    apply,
    deserialize,
    estimate_pair,
    load_transform,
    save_transform,
    serialize,
)

__version__ = "0.1.0"
