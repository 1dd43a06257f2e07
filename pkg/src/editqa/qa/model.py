"""The multi-branch editing-quality assessor.

Branches: prompt alignment (frame embeddings, temporal adapter, text
encoder with optional cross-attention), source-target relevance (paired
spatiotemporal encoders with configurable fusion), and the aesthetic and
technical visual-quality pathways. Branch scalars are fused by a weighted
sum; a disabled relevance branch contributes 0 at weight 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..errors import UserInputError
from ..manifest import EditTriplet
from ..video import VideoClip, VideoDecoder, standardize_clip
from .config import ModelConfig
from .layers import (CrossFusion, FeedForwardHead, FrameEncoder, TemporalAdapter,
                     TextEncoder, _conv_stack, make_spatiotemporal_encoder,
                     sample_fragments)


@dataclass(frozen=True)
class QaScore:
    """Per-branch scalars and their fused final value."""

    alignment: float
    relevance: float
    aesthetic: float
    technical: float
    final: float


def fuse_scores(alignment: float, relevance: float, aesthetic: float,
                technical: float, weights=(1.0, 1.0, 1.0, 1.0)) -> float:
    """Weighted sum of the four branch scalars."""
    scores = (alignment, relevance, aesthetic, technical)
    if not all(np.isfinite(s) for s in scores):
        raise UserInputError(f"branch scores must be finite, got {scores}")
    return float(sum(w * s for w, s in zip(weights, scores)))


def clip_to_tensor(clip: VideoClip) -> torch.Tensor:
    """uint8 (T, H, W, 3) frames to float32 (T, 3, H, W) on [0, 1]."""
    arr = torch.from_numpy(np.ascontiguousarray(clip.frames))
    return arr.permute(0, 3, 1, 2).float() / 255.0


@dataclass
class AlignmentIntermediates:
    frame_embeddings: torch.Tensor    # per-frame visual embeddings, (B, T, width)
    adapted_embeddings: torch.Tensor  # after the temporal adapter, (B, T, width)
    text_states: torch.Tensor         # text token states, (B, L, width)
    pooled: torch.Tensor  # sequence-start state, (B, width)


class AlignmentBranch(nn.Module):
    """Prompt-video alignment in either cross-attention or cosine style."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        w = config.feature_width
        self.mode = config.text_mode
        self.visual = FrameEncoder(w)
        self.adapter = TemporalAdapter(
            w, config.max_frames, heads=config.adapter.heads,
            layers=config.adapter.layers, zero_init=config.adapter.zero_init)
        self.text = TextEncoder(w, config.text_vocab, config.text_max_len,
                                heads=config.adapter.heads,
                                cross_attention=(self.mode == "blip"))
        # Cross-attention style regresses on the pooled text state; cosine
        # style regresses on the mean frame-text cosine.
        self.head = nn.Linear(w if self.mode == "blip" else 1, 1)

    def forward(self, frames: torch.Tensor, prompts: list[str]
                ) -> tuple[torch.Tensor, AlignmentIntermediates]:
        frame_embeddings = self.visual(frames)
        adapted = self.adapter(frame_embeddings)
        if self.mode == "blip":
            text_states, pooled = self.text(prompts, visual=adapted)
            score = self.head(pooled).squeeze(-1)
        else:
            text_states, pooled = self.text(prompts, visual=None)
            cos = F.cosine_similarity(F.normalize(adapted, dim=-1),
                                      F.normalize(pooled, dim=-1).unsqueeze(1), dim=-1)
            score = self.head(cos.mean(dim=1, keepdim=True)).squeeze(-1)
        return score, AlignmentIntermediates(
            frame_embeddings=frame_embeddings, adapted_embeddings=adapted,
            text_states=text_states, pooled=pooled)


class RelevanceBranch(nn.Module):
    """Source-target relationship in a learned latent space."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        if not config.relevance_enabled:
            raise UserInputError("relevance branch constructed while disabled")
        w = config.feature_width
        rc = config.relevance
        self.input_size = rc.input_size
        self.fusion_mode = config.fusion
        self.source_encoder = make_spatiotemporal_encoder(rc.encoder, w, rc.heads)
        self.edited_encoder = make_spatiotemporal_encoder(rc.encoder, w, rc.heads)
        if rc.share_init:
            self.edited_encoder.load_state_dict(self.source_encoder.state_dict())
        if self.fusion_mode == "mca":
            self.fusion = CrossFusion(w, rc.heads)
            self.head = FeedForwardHead(w, w)
        else:  # concat doubles the head's input width
            self.fusion = None
            self.head = FeedForwardHead(2 * w, w)

    def _prepare(self, frames: torch.Tensor) -> torch.Tensor:
        # (B, T, 3, H, W) -> (B, 3, T, s, s) for the 3-d encoders
        b, t = frames.shape[:2]
        flat = frames.reshape(b * t, *frames.shape[2:])
        flat = F.adaptive_avg_pool2d(flat, self.input_size)
        return flat.reshape(b, t, 3, self.input_size, self.input_size).permute(0, 2, 1, 3, 4)

    def encode(self, source: torch.Tensor, edited: torch.Tensor):
        src_tokens, src_pooled = self.source_encoder(self._prepare(source))
        edit_tokens, edit_pooled = self.edited_encoder(self._prepare(edited))
        return (src_tokens, src_pooled), (edit_tokens, edit_pooled)

    def forward(self, source: torch.Tensor, edited: torch.Tensor) -> torch.Tensor:
        (src_tokens, src_pooled), (edit_tokens, edit_pooled) = self.encode(source, edited)
        if self.fusion_mode == "mca":
            fused = self.fusion(src_tokens, edit_tokens)
        else:
            fused = torch.cat([src_pooled, edit_pooled], dim=-1)
        return self.head(fused)


class AestheticBranch(nn.Module):
    """Aesthetic pathway over downsampled full frames."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        w = config.feature_width
        self.input_size = config.aesthetic.input_size
        self.encoder = _conv_stack(3, w)
        self.head = nn.Linear(w, 1)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        b, t = frames.shape[:2]
        flat = frames.reshape(b * t, *frames.shape[2:])
        flat = F.adaptive_avg_pool2d(flat, self.input_size)
        feats = self.encoder(flat).reshape(b, t, -1).mean(dim=1)
        return self.head(feats).squeeze(-1)


class TechnicalBranch(nn.Module):
    """Technical-distortion pathway over grid-sampled fragments."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        w = config.feature_width
        self.grid = config.technical.fragment_grid
        self.patch = config.technical.fragment_size
        self.seed = config.seed
        self.encoder = _conv_stack(3, w)
        self.head = nn.Linear(w, 1)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        mosaic = sample_fragments(frames, self.grid, self.patch, self.seed)
        b, t = mosaic.shape[:2]
        flat = mosaic.reshape(b * t, *mosaic.shape[2:])
        feats = self.encoder(flat).reshape(b, t, -1).mean(dim=1)
        return self.head(feats).squeeze(-1)


class EditQaModel(nn.Module):
    """The full assessor; construction is deterministic in the config seed."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            self.alignment = AlignmentBranch(config)
            self.relevance = RelevanceBranch(config) if config.relevance_enabled else None
            self.aesthetic = AestheticBranch(config)
            self.technical = TechnicalBranch(config)

    def param_groups(self) -> dict[str, list[nn.Parameter]]:
        """Named parameter groups used by the staged training schedule."""
        groups: dict[str, list[nn.Parameter]] = {
            "vl_backbone": list(self.alignment.visual.parameters())
            + list(self.alignment.text.parameters()),
            "adapter": list(self.alignment.adapter.parameters()),
            "relevance_encoders": [],
            "quality_backbones": list(self.aesthetic.encoder.parameters())
            + list(self.technical.encoder.parameters()),
            "heads": list(self.alignment.head.parameters())
            + list(self.aesthetic.head.parameters())
            + list(self.technical.head.parameters()),
        }
        if self.relevance is not None:
            groups["relevance_encoders"] = (
                list(self.relevance.source_encoder.parameters())
                + list(self.relevance.edited_encoder.parameters()))
            groups["heads"] += list(self.relevance.head.parameters())
            if self.relevance.fusion is not None:
                groups["heads"] += list(self.relevance.fusion.parameters())
        return groups

    def forward(self, source: torch.Tensor | None, edited: torch.Tensor,
                prompts: list[str]) -> dict[str, torch.Tensor]:
        """Batched forward: tensors are (B, T, 3, H, W); returns branch scores (B,)."""
        weights = self.config.effective_branch_weights()
        batch = edited.shape[0]
        outputs: dict[str, torch.Tensor] = {}
        try:
            outputs["alignment"], _ = self.alignment(edited, prompts)
        except Exception as exc:
            raise RuntimeError(f"alignment branch failed: {exc}") from exc
        if self.relevance is not None:
            if source is None:
                raise UserInputError("relevance branch is enabled but no source clip given")
            try:
                outputs["relevance"] = self.relevance(source, edited)
            except Exception as exc:
                raise RuntimeError(f"relevance branch failed: {exc}") from exc
        else:
            outputs["relevance"] = edited.new_zeros(batch)
        try:
            outputs["aesthetic"] = self.aesthetic(edited)
        except Exception as exc:
            raise RuntimeError(f"aesthetic branch failed: {exc}") from exc
        try:
            outputs["technical"] = self.technical(edited)
        except Exception as exc:
            raise RuntimeError(f"technical branch failed: {exc}") from exc
        outputs["final"] = (weights[0] * outputs["alignment"]
                            + weights[1] * outputs["relevance"]
                            + weights[2] * outputs["aesthetic"]
                            + weights[3] * outputs["technical"])
        return outputs

    def predict_pair(self, source: VideoClip | None, edited: VideoClip,
                     prompt: str) -> QaScore:
        """Single-triplet inference; clips should already be standardized."""
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                src = clip_to_tensor(source).unsqueeze(0) if source is not None else None
                out = self.forward(src, clip_to_tensor(edited).unsqueeze(0), [prompt])
        finally:
            self.train(was_training)
        return QaScore(
            alignment=float(out["alignment"][0]),
            relevance=float(out["relevance"][0]),
            aesthetic=float(out["aesthetic"][0]),
            technical=float(out["technical"][0]),
            final=float(out["final"][0]),
        )


def alignment_forward(model: EditQaModel, edited: VideoClip, prompt: str
                      ) -> tuple[float, AlignmentIntermediates]:
    """Alignment branch on one clip; intermediates are unbatched (T, width)."""
    with torch.no_grad():
        score, inter = model.alignment(clip_to_tensor(edited).unsqueeze(0), [prompt])
    return float(score[0]), AlignmentIntermediates(
        frame_embeddings=inter.frame_embeddings[0],
        adapted_embeddings=inter.adapted_embeddings[0],
        text_states=inter.text_states[0],
        pooled=inter.pooled[0])


def relevance_forward(model: EditQaModel, source: VideoClip,
                      edited: VideoClip) -> float:
    """Relevance branch on one clip pair."""
    if model.relevance is None:
        raise UserInputError(
            "relevance branch is disabled (fusion or encoder set to 'none'); "
            "the caller should bypass it")
    with torch.no_grad():
        score = model.relevance(clip_to_tensor(source).unsqueeze(0),
                                clip_to_tensor(edited).unsqueeze(0))
    return float(score[0])


def aesthetic_forward(model: EditQaModel, edited: VideoClip) -> float:
    with torch.no_grad():
        return float(model.aesthetic(clip_to_tensor(edited).unsqueeze(0))[0])


def technical_forward(model: EditQaModel, edited: VideoClip) -> float:
    with torch.no_grad():
        return float(model.technical(clip_to_tensor(edited).unsqueeze(0))[0])


def qa_forward(triplet: EditTriplet, model: EditQaModel,
               decoder: VideoDecoder) -> QaScore:
    """Scores one manifest triplet: decode, standardize, run all enabled branches."""
    edited = standardize_clip(decoder.decode(triplet.edited_path))
    source = None
    if model.relevance is not None:
        source = standardize_clip(decoder.decode(triplet.source_path))
    return model.predict_pair(source, edited, triplet.prompt)


def qa_forward_batch(triplets: list[EditTriplet], model: EditQaModel,
                     decoder: VideoDecoder) -> list[QaScore]:
    """Scores a list of triplets, order-preserving."""
    return [qa_forward(t, model, decoder) for t in triplets]
