"""Anatomy of the learned assessor: branches, intermediates, fusion.

Run: python demos/04_quality_model.py
"""

import numpy as np
import torch

from editqa.qa import (EditQaModel, ModelConfig, aesthetic_forward,
                       alignment_forward, relevance_forward, technical_forward)
from editqa.video import VideoClip

rng = np.random.default_rng(2)


def make_clip(seed):
    local = np.random.default_rng(seed)
    return VideoClip(frames=local.integers(0, 256, size=(4, 32, 32, 3),
                                           dtype=np.uint8))


config = ModelConfig.toy(feature_width=64)
print("model config hash:", config.canonical_hash()[:16], "...")
model = EditQaModel(config)
n_params = sum(p.numel() for p in model.parameters())
print(f"toy-scale parameters: {n_params:,}")

source, edited = make_clip(10), make_clip(11)
prompt = "replace the background with a beach at sunset"

score, inter = alignment_forward(model, edited, prompt)
print("\nalignment branch:")
print(f"  per-frame visual embeddings:  {tuple(inter.frame_embeddings.shape)}")
print(f"  after the temporal adapter:   {tuple(inter.adapted_embeddings.shape)}")
print(f"  (zero-init adapter acts as the identity at initialization -> "
      f"{bool(torch.equal(inter.adapted_embeddings, inter.frame_embeddings))})")
print(f"  text token states:            {tuple(inter.text_states.shape)}")
print(f"  branch score: {score:+.4f}")

print("\nrelevance branch (paired spatiotemporal encoders, concat fusion):")
print(f"  relevance score = {relevance_forward(model, source, edited):+.4f}")

print("\nvisual quality branches:")
print(f"  aesthetic (downsampled frames): {aesthetic_forward(model, edited):+.4f}")
print(f"  technical (fragment mosaic):    {technical_forward(model, edited):+.4f}")

qa = model.predict_pair(source, edited, prompt)
print("\nfused QaScore:")
print(f"  alignment={qa.alignment:+.4f} relevance={qa.relevance:+.4f} "
      f"aesthetic={qa.aesthetic:+.4f} technical={qa.technical:+.4f}")
print(f"  final (weighted sum) = {qa.final:+.4f}")

# Ablation-style reconfiguration: drop the relevance branch entirely.
bypass = EditQaModel(ModelConfig.toy(feature_width=64, fusion="none"))
qa2 = bypass.predict_pair(None, edited, prompt)
print(f"\nwith fusion='none' the relevance branch is bypassed: "
      f"relevance={qa2.relevance}, final={qa2.final:+.4f}")
