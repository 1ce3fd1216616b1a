"""Quadtree depth maps for navigation.

Encode dense disparity maps into multi-level quadtree forests, expand and
score them, serialize them bit-exactly, and explore the sparse-decoder
mechanism that produces such trees directly, with cost accounting.
"""

from .errors import (
    DegenerateError,
    DimensionError,
    EmptyError,
    EmptyMaskError,
    FormatError,
    InvariantError,
    LevelError,
    QuadmapError,
    ShapeError,
)
from .estimator import QuadtreeEncoder
from .metrics import (
    DepthMetrics,
    StructureReport,
    compression_ratio,
    depth_metrics,
    level_distribution,
    structure_likelihood,
)
from .photometric import (
    CameraModel,
    LossConfig,
    MultiscaleLoss,
    min_reprojection,
    multiscale_loss,
    photometric_error,
    reproject,
    smoothness,
    ssim,
)
from .quadtree import (
    EncodeConfig,
    LevelSlice,
    NodeCount,
    QuadForest,
    QuadNode,
    compose,
    encode_dense,
    iter_nodes,
    mean_pyramid,
    node_count,
    rasterize,
)
from .sparse import (
    DecoderStage,
    FeatureGrid,
    FlopReport,
    Kernel,
    build_decoder_stages,
    flop_count,
    sparsify,
    submanifold_conv,
    toy_decoder_forward,
    toy_decoder_profile,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "DecoderStage",
    "DegenerateError",
    "DepthMetrics",
    "DimensionError",
    "EmptyError",
    "EmptyMaskError",
    "EncodeConfig",
    "FeatureGrid",
    "FlopReport",
    "FormatError",
    "InvariantError",
    "Kernel",
    "LevelError",
    "LevelSlice",
    "LossConfig",
    "MultiscaleLoss",
    "NodeCount",
    "QuadForest",
    "QuadNode",
    "QuadmapError",
    "QuadtreeEncoder",
    "ShapeError",
    "StructureReport",
    "build_decoder_stages",
    "compose",
    "compression_ratio",
    "depth_metrics",
    "encode_dense",
    "flop_count",
    "iter_nodes",
    "level_distribution",
    "mean_pyramid",
    "min_reprojection",
    "multiscale_loss",
    "node_count",
    "photometric_error",
    "rasterize",
    "reproject",
    "smoothness",
    "sparsify",
    "ssim",
    "structure_likelihood",
    "submanifold_conv",
    "toy_decoder_forward",
    "toy_decoder_profile",
]
