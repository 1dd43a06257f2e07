"""Learned multi-branch quality assessor for edited videos."""

from .config import (AdapterConfig, AestheticConfig, ModelConfig, RelevanceConfig,
                     TechnicalConfig)
from .layers import (FrameEncoder, TemporalAdapter, TextEncoder, fragment_offsets,
                     make_spatiotemporal_encoder, sample_fragments, tokenize)
from .model import (AlignmentIntermediates, EditQaModel, QaScore, aesthetic_forward,
                    alignment_forward, clip_to_tensor, fuse_scores, qa_forward,
                    qa_forward_batch, relevance_forward, technical_forward)

__all__ = [
    "ModelConfig", "AdapterConfig", "RelevanceConfig", "AestheticConfig",
    "TechnicalConfig", "EditQaModel", "QaScore", "AlignmentIntermediates",
    "alignment_forward", "relevance_forward", "aesthetic_forward",
    "technical_forward", "qa_forward", "qa_forward_batch", "fuse_scores",
    "clip_to_tensor", "FrameEncoder", "TemporalAdapter", "TextEncoder",
    "make_spatiotemporal_encoder", "sample_fragments", "fragment_offsets", "tokenize",
]
