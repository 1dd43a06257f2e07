"""Objective editing metrics over pluggable embedding, perceptual, and flow backends."""

from .backends import (ClipEmbeddingBackend, ConstantFlowBackend, EmbeddingBackend,
                       FarnebackFlowBackend, FeatureStore, FlowBackend,
                       HashEmbeddingBackend, PerceptualDistanceBackend,
                       PixelDistanceBackend, ZeroFlowBackend, write_feature_file)
from .battery import (ALL_METRICS, BASE_METRICS, COMPOSITE_METRICS, MetricError,
                      MetricResult, clip_f, clip_f_from_vectors, clip_t,
                      clip_t_from_vectors, fram_acc, fram_acc_from_vectors, lpips_p,
                      lpips_t, q_edit, s_edit, warp_mse, warp_ssim)
from .engine import MetricEngine, resolve_metric_names, write_metrics_csv
from .ssim import ssim, ssim_map, to_luminance
from .warp import bilinear_warp, warp_mse_values, warp_pair_mse, warp_pair_ssim, warp_ssim_values

__all__ = [
    "EmbeddingBackend", "PerceptualDistanceBackend", "FlowBackend",
    "HashEmbeddingBackend", "PixelDistanceBackend", "ZeroFlowBackend",
    "ConstantFlowBackend", "FarnebackFlowBackend", "ClipEmbeddingBackend",
    "FeatureStore", "write_feature_file",
    "MetricError", "MetricResult",
    "clip_t", "clip_f", "fram_acc", "lpips_p", "lpips_t",
    "clip_t_from_vectors", "clip_f_from_vectors", "fram_acc_from_vectors",
    "warp_mse", "warp_ssim", "s_edit", "q_edit", "ssim", "ssim_map", "to_luminance",
    "bilinear_warp", "warp_pair_mse", "warp_pair_ssim",
    "warp_mse_values", "warp_ssim_values",
    "MetricEngine", "resolve_metric_names", "write_metrics_csv",
    "BASE_METRICS", "COMPOSITE_METRICS", "ALL_METRICS",
]
