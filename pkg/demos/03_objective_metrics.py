"""The objective metric battery on synthetic clips.

Shows alignment (clip_t/fram_acc), frame consistency (clip_f), perceptual
deviation (lpips_p/lpips_t), flow-warped stability (warp_mse/warp_ssim),
and the composite scores, all through swappable backends.

Run: python demos/03_objective_metrics.py
"""

import numpy as np

from editqa.metrics import (ConstantFlowBackend, HashEmbeddingBackend,
                            PixelDistanceBackend, ZeroFlowBackend, clip_f, clip_t,
                            fram_acc, lpips_p, lpips_t, q_edit, s_edit, warp_mse,
                            warp_ssim)
from editqa.video import VideoClip

rng = np.random.default_rng(1)

# A source clip with gentle 1px/frame panning, plus a noisy "edited" version.
base = rng.integers(40, 216, size=(24, 48, 3)).astype(np.uint8)
source = VideoClip(frames=np.stack([np.roll(base, t, axis=1) for t in range(6)]))
noise = rng.normal(0, 18, size=source.frames.shape)
edited = VideoClip(frames=np.clip(source.frames + noise, 0, 255).astype(np.uint8))

embedder = HashEmbeddingBackend(dim=64)
perceptual = PixelDistanceBackend()

print("alignment and consistency (stub embedding backend):")
ct = clip_t(edited, "make the scene snowy", embedder).aggregate
cf = clip_f(edited, embedder).aggregate
fa = fram_acc(edited, "make the scene snowy", "a panning texture", embedder).aggregate
print(f"  clip_t={ct:+.4f}  clip_f={cf:+.4f}  fram_acc={fa:.2f}")

print("perceptual deviation (pixel-space stub):")
lp = lpips_p(source, edited, perceptual).aggregate
lt = lpips_t(edited, perceptual).aggregate
print(f"  lpips_p={lp:.4f}  lpips_t={lt:.4f}")

print("temporal stability under the TRUE motion flow vs a zero flow:")
true_flow = ConstantFlowBackend(dy=0.0, dx=1.0)
wm_true = warp_mse(source, true_flow).aggregate
wm_zero = warp_mse(source, ZeroFlowBackend()).aggregate
ws_true = warp_ssim(source, true_flow).aggregate
print(f"  warp_mse(true flow)={wm_true:.6f}  warp_mse(zero flow)={wm_zero:.6f}")
print(f"  warp_ssim(true flow)={ws_true:.4f}")

print("composites:")
print(f"  s_edit = clip_t / warp_mse = {s_edit(ct, wm_zero):.3f}")
print(f"  q_edit = warp_ssim * clip_t = {q_edit(ws_true, ct):.4f}")

try:  # a real flow estimator, no pretrained weights required
    from editqa.metrics import FarnebackFlowBackend
    wm_fb = warp_mse(source, FarnebackFlowBackend()).aggregate
    print(f"  warp_mse(farneback)={wm_fb:.6f} (OpenCV dense flow)")
except ImportError:
    print("  (opencv not installed; skipping the Farneback flow backend)")
