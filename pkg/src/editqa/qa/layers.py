"""Building blocks of the assessor: encoders, temporal adapter, fragment sampling.

Everything here is sized for desk-scale CPU runs at the toy scale; the
reference scale swaps in pretrained backbones behind the same shapes.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import UserInputError


def _conv_stack(in_channels: int, width: int) -> nn.Sequential:
    """Two stride-2 conv blocks followed by global average pooling."""
    mid = max(8, width // 2)
    return nn.Sequential(
        nn.Conv2d(in_channels, mid, 3, stride=2, padding=1),
        nn.GroupNorm(4, mid),
        nn.GELU(),
        nn.Conv2d(mid, width, 3, stride=2, padding=1),
        nn.GroupNorm(4, width),
        nn.GELU(),
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(),
    )


class FrameEncoder(nn.Module):
    """Per-frame visual embedding (the vision-language visual pathway)."""

    def __init__(self, width: int):
        super().__init__()
        self.width = width
        self.stack = _conv_stack(3, width)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        # frames: (B, T, 3, H, W) -> (B, T, width)
        b, t = frames.shape[:2]
        flat = frames.reshape(b * t, *frames.shape[2:])
        return self.stack(flat).reshape(b, t, self.width)


class AdapterBlock(nn.Module):
    """Pre-norm self-attention with residual; output projection may start at zero."""

    def __init__(self, width: int, heads: int, zero_init: bool):
        super().__init__()
        self.norm = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, batch_first=True)
        if zero_init:
            nn.init.zeros_(self.attn.out_proj.weight)
            nn.init.zeros_(self.attn.out_proj.bias)

    def forward(self, x: torch.Tensor, pos: torch.Tensor) -> torch.Tensor:
        h = self.norm(x) + pos
        attended, _ = self.attn(h, h, h, need_weights=False)
        return x + attended


class TemporalAdapter(nn.Module):
    """Extends per-frame features across the frame axis with learned positions.

    With zero-initialized attention output the adapter is the identity at
    initialization, preserving the pretrained per-frame behaviour.
    """

    def __init__(self, width: int, max_frames: int, heads: int = 4,
                 layers: int = 1, zero_init: bool = True):
        super().__init__()
        self.max_frames = max_frames
        self.positions = nn.Parameter(torch.randn(max_frames, width) * 0.02)
        self.blocks = nn.ModuleList(
            AdapterBlock(width, heads, zero_init) for _ in range(layers))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        # features: (B, T, width)
        t = features.shape[1]
        if t > self.max_frames:
            raise UserInputError(
                f"clip has {t} frames but the adapter's positional table holds "
                f"{self.max_frames}")
        out = features
        for block in self.blocks:
            out = block(out, self.positions[:t])
        return out


def tokenize(text: str, vocab: int, max_len: int) -> list[int]:
    """Deterministic hash tokenizer; id 0 is the sequence-start token."""
    ids = [0]
    for word in text.lower().split():
        digest = hashlib.md5(word.encode()).digest()
        ids.append(1 + int.from_bytes(digest[:4], "little") % (vocab - 1))
        if len(ids) >= max_len:
            break
    return ids


class TextEncoder(nn.Module):
    """Token self-attention encoder, optionally cross-attending onto visual states.

    The pooled output is the sequence-start token's final state.
    """

    def __init__(self, width: int, vocab: int, max_len: int, heads: int,
                 cross_attention: bool):
        super().__init__()
        self.vocab = vocab
        self.max_len = max_len
        self.pad_id = vocab  # one extra embedding row for padding
        self.embed = nn.Embedding(vocab + 1, width, padding_idx=self.pad_id)
        self.positions = nn.Parameter(torch.randn(max_len, width) * 0.02)
        self.self_norm = nn.LayerNorm(width)
        self.self_attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.cross_attention = cross_attention
        if cross_attention:
            self.cross_norm = nn.LayerNorm(width)
            self.cross_attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.ffn = nn.Sequential(
            nn.LayerNorm(width), nn.Linear(width, width * 2), nn.GELU(),
            nn.Linear(width * 2, width))

    def _batch_tokens(self, prompts: list[str], device) -> tuple[torch.Tensor, torch.Tensor]:
        token_lists = [tokenize(p, self.vocab, self.max_len) for p in prompts]
        length = max(len(t) for t in token_lists)
        ids = torch.full((len(prompts), length), self.pad_id, dtype=torch.long,
                         device=device)
        for i, toks in enumerate(token_lists):
            ids[i, :len(toks)] = torch.tensor(toks, device=device)
        return ids, ids.eq(self.pad_id)

    def forward(self, prompts: list[str],
                visual: torch.Tensor | None = None) -> tuple[torch.Tensor, torch.Tensor]:
        if any(not p for p in prompts):
            raise UserInputError("prompts must be non-empty")
        device = self.positions.device
        ids, padding = self._batch_tokens(prompts, device)
        x = self.embed(ids) + self.positions[:ids.shape[1]]
        h = self.self_norm(x)
        attended, _ = self.self_attn(h, h, h, key_padding_mask=padding,
                                     need_weights=False)
        x = x + attended
        if self.cross_attention:
            if visual is None:
                raise UserInputError("cross-attention text encoder needs visual states")
            q = self.cross_norm(x)
            crossed, _ = self.cross_attn(q, visual, visual, need_weights=False)
            x = x + crossed
        x = x + self.ffn(x)
        return x, x[:, 0]


class _TokensEncoderBase(nn.Module):
    """Shared tail for the spatiotemporal encoders: one attention block over tokens."""

    def __init__(self, width: int, heads: int):
        super().__init__()
        self.norm = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.out_norm = nn.LayerNorm(width)

    def attend(self, tokens: torch.Tensor) -> torch.Tensor:
        h = self.norm(tokens)
        attended, _ = self.attn(h, h, h, need_weights=False)
        return self.out_norm(tokens + attended)


class VSwinToyEncoder(_TokensEncoderBase):
    """Video-swin flavour: joint space-time patching, window-free attention at toy size."""

    def __init__(self, width: int, heads: int):
        super().__init__(width, heads)
        self.stem = nn.Conv3d(3, width, kernel_size=(2, 4, 4), stride=(2, 4, 4))

    def forward(self, video: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        # video: (B, 3, T, H, W) -> tokens (B, N, width), pooled (B, width)
        feats = self.stem(video)
        tokens = feats.flatten(2).transpose(1, 2)
        tokens = self.attend(tokens)
        return tokens, tokens.mean(dim=1)


class MVDToyEncoder(_TokensEncoderBase):
    """Distillation-student flavour: coarse tubelet patching, per-tubelet MLP."""

    def __init__(self, width: int, heads: int):
        super().__init__(width, heads)
        self.stem = nn.Conv3d(3, width, kernel_size=(1, 8, 8), stride=(1, 8, 8))
        self.mlp = nn.Sequential(nn.Linear(width, width), nn.GELU())

    def forward(self, video: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        feats = self.stem(video)
        tokens = feats.flatten(2).transpose(1, 2)
        tokens = self.attend(self.mlp(tokens))
        return tokens, tokens.mean(dim=1)


class UniformerToyEncoder(_TokensEncoderBase):
    """Uniformer flavour: depthwise local aggregation before global attention."""

    def __init__(self, width: int, heads: int):
        super().__init__(width, heads)
        self.stem = nn.Conv3d(3, width, kernel_size=(1, 4, 4), stride=(1, 4, 4))
        self.local = nn.Conv3d(width, width, kernel_size=3, padding=1, groups=width)
        self.point = nn.Conv3d(width, width, kernel_size=1)

    def forward(self, video: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        feats = self.stem(video)
        feats = feats + self.point(self.local(feats))
        tokens = feats.flatten(2).transpose(1, 2)
        tokens = self.attend(tokens)
        return tokens, tokens.mean(dim=1)


SPATIOTEMPORAL_ENCODERS = {
    "vswin": VSwinToyEncoder,
    "mvd": MVDToyEncoder,
    "uniformer": UniformerToyEncoder,
}


def make_spatiotemporal_encoder(kind: str, width: int, heads: int) -> nn.Module:
    if kind not in SPATIOTEMPORAL_ENCODERS:
        raise UserInputError(
            f"unknown spatiotemporal encoder {kind!r}; "
            f"choose from {sorted(SPATIOTEMPORAL_ENCODERS)}")
    return SPATIOTEMPORAL_ENCODERS[kind](width, heads)


class CrossFusion(nn.Module):
    """Multi-head cross-attention fusion: source tokens attend to edited tokens."""

    def __init__(self, width: int, heads: int):
        super().__init__()
        self.norm_q = nn.LayerNorm(width)
        self.norm_kv = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, batch_first=True)

    def forward(self, source_tokens: torch.Tensor,
                edited_tokens: torch.Tensor) -> torch.Tensor:
        q = self.norm_q(source_tokens)
        kv = self.norm_kv(edited_tokens)
        attended, _ = self.attn(q, kv, kv, need_weights=False)
        return (source_tokens + attended).mean(dim=1)


class FeedForwardHead(nn.Module):
    """Two-layer regression head with a nonlinearity."""

    def __init__(self, in_width: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(in_width, hidden), nn.GELU(),
                                 nn.Linear(hidden, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).squeeze(-1)


def fragment_offsets(height: int, width: int, grid: int, patch: int,
                     seed: int) -> torch.Tensor:
    """Per-cell top-left offsets for the fragment mosaic, fixed by seed.

    Offsets are shared across frames so fragments stay temporally aligned.
    When cells are exactly patch-sized (e.g. 224 with a 7x32 grid) the
    sampling degenerates to an exact tiling.
    """
    if height < grid * patch or width < grid * patch:
        raise UserInputError(
            f"frame {height}x{width} is smaller than the {grid}x{grid} grid of "
            f"{patch}px fragments")
    gen = torch.Generator().manual_seed(seed ^ (height * 73856093) ^ (width * 19349663))
    offsets = torch.zeros(grid, grid, 2, dtype=torch.long)
    for gy in range(grid):
        for gx in range(grid):
            y0 = gy * height // grid
            y1 = (gy + 1) * height // grid
            x0 = gx * width // grid
            x1 = (gx + 1) * width // grid
            max_dy = (y1 - y0) - patch
            max_dx = (x1 - x0) - patch
            dy = torch.randint(0, max_dy + 1, (1,), generator=gen).item() if max_dy > 0 else 0
            dx = torch.randint(0, max_dx + 1, (1,), generator=gen).item() if max_dx > 0 else 0
            offsets[gy, gx, 0] = y0 + dy
            offsets[gy, gx, 1] = x0 + dx
    return offsets


def sample_fragments(frames: torch.Tensor, grid: int, patch: int,
                     seed: int) -> torch.Tensor:
    """Builds the fragment mosaic: (B, T, 3, H, W) -> (B, T, 3, grid*patch, grid*patch)."""
    h, w = frames.shape[-2:]
    offsets = fragment_offsets(h, w, grid, patch, seed)
    mosaic = frames.new_empty(*frames.shape[:-2], grid * patch, grid * patch)
    for gy in range(grid):
        for gx in range(grid):
            y = int(offsets[gy, gx, 0])
            x = int(offsets[gy, gx, 1])
            mosaic[..., gy * patch:(gy + 1) * patch, gx * patch:(gx + 1) * patch] = \
                frames[..., y:y + patch, x:x + patch]
    return mosaic
