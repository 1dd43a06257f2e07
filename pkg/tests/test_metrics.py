import numpy as np
import pytest

from editqa.errors import UserInputError
from editqa.metrics import (FeatureStore, HashEmbeddingBackend, MetricEngine,
                            MetricError, MetricResult, PixelDistanceBackend,
                            ZeroFlowBackend, clip_f, clip_f_from_vectors, clip_t,
                            clip_t_from_vectors, fram_acc, fram_acc_from_vectors,
                            lpips_p, lpips_t, q_edit, resolve_metric_names, s_edit,
                            write_feature_file)
from editqa.manifest import load_manifest
from editqa.video import VideoClip

from conftest import random_clip, static_clip, write_disk_benchmark


class ConstantEmbedder:
    """Every frame and every text maps to the same unit vector."""

    shareable = True

    def embed_image(self, frame):
        v = np.zeros(8)
        v[0] = 1.0
        return v

    def embed_text(self, text):
        return self.embed_image(None)


class LookupEmbedder:
    """Maps frame mean value / text to preset vectors."""

    shareable = True

    def __init__(self, frames: dict[int, np.ndarray], texts: dict[str, np.ndarray]):
        self.frames = frames
        self.texts = texts

    def embed_image(self, frame):
        return self.frames[int(frame[0, 0, 0])]

    def embed_text(self, text):
        return self.texts[text]


def _unit(*coords):
    v = np.array(coords, dtype=float)
    return v / np.linalg.norm(v)


def frame_of(value: int, frames: int = 1) -> VideoClip:
    data = np.full((max(frames, 2), 4, 4, 3), value, dtype=np.uint8)
    return VideoClip(frames=data)


def clip_of(values: list[int]) -> VideoClip:
    data = np.stack([np.full((4, 4, 3), v, dtype=np.uint8) for v in values])
    return VideoClip(frames=data)


# -- clip_t ---------------------------------------------------------------------

def test_clip_t_identical_vectors():
    assert clip_t(static_clip(), "any prompt", ConstantEmbedder()).aggregate == \
        pytest.approx(1.0)


def test_clip_t_orthogonal_vectors():
    embedder = LookupEmbedder(
        frames={10: _unit(1, 0)}, texts={"p": _unit(0, 1)})
    assert clip_t(clip_of([10, 10]), "p", embedder).aggregate == pytest.approx(0.0)


def test_clip_t_mean_of_per_frame_cosines():
    result = clip_t_from_vectors([_unit(0, 1), _unit(1, 0)], _unit(0, 1))
    assert result.per_frame == (pytest.approx(1.0), pytest.approx(0.0))
    assert result.aggregate == pytest.approx(0.5)


def test_clip_t_reversal_invariant():
    clip = random_clip(seed=0)
    backend = HashEmbeddingBackend()
    forward = clip_t(clip, "p", backend).aggregate
    reversed_clip = VideoClip(frames=clip.frames[::-1].copy())
    assert clip_t(reversed_clip, "p", backend).aggregate == pytest.approx(forward)


def test_clip_t_backend_failure_carries_frame_index():
    class Exploding:
        shareable = True

        def embed_image(self, frame):
            raise RuntimeError("boom")

        def embed_text(self, text):
            return _unit(1, 0)

    with pytest.raises(MetricError, match="frame 0"):
        clip_t(static_clip(), "p", Exploding())


# -- clip_f ---------------------------------------------------------------------

def test_clip_f_static_clip_is_one():
    assert clip_f(static_clip(), HashEmbeddingBackend()).aggregate == \
        pytest.approx(1.0)


def test_clip_f_worked_example():
    # adjacent cosines 0.8 and 0.6 -> mean 0.7
    v0 = np.array([1.0, 0.0])
    v1 = np.array([0.8, 0.6])  # cos(v0, v1) = 0.8
    # v2 is v1 rotated by arccos(0.6), so cos(v1, v2) = 0.6
    theta = np.arccos(0.6)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    v2 = rot @ v1
    result = clip_f_from_vectors([v0, v1, v2])
    assert result.per_frame[0] == pytest.approx(0.8)
    assert result.per_frame[1] == pytest.approx(0.6)
    assert result.aggregate == pytest.approx(0.7)


def test_clip_f_orthogonal_pair():
    assert clip_f_from_vectors([_unit(1, 0), _unit(0, 1)]).aggregate == \
        pytest.approx(0.0)


def test_clip_f_single_frame_rejected():
    with pytest.raises(MetricError):
        clip_f_from_vectors([_unit(1, 0)])


def test_clip_f_reversal_invariant():
    clip = random_clip(seed=1)
    backend = HashEmbeddingBackend()
    forward = clip_f(clip, backend).aggregate
    reversed_clip = VideoClip(frames=clip.frames[::-1].copy())
    assert clip_f(reversed_clip, backend).aggregate == pytest.approx(forward)


# -- fram_acc -------------------------------------------------------------------

def test_fram_acc_three_of_four():
    target = _unit(1, 0)
    source = _unit(0, 1)
    frames = [_unit(1, 0.1), _unit(1, 0.2), _unit(1, 0.3), _unit(0.1, 1)]
    result = fram_acc_from_vectors(frames, target, source)
    assert result.aggregate == pytest.approx(0.75)


def test_fram_acc_tie_counts_as_failure():
    target = _unit(1, 0)
    source = _unit(0, 1)
    equidistant = [_unit(1, 1), _unit(1, 1)]
    assert fram_acc_from_vectors(equidistant, target, source).aggregate == 0.0


def test_fram_acc_all_closer():
    target = _unit(1, 0)
    source = _unit(0, 1)
    frames = [_unit(1, 0.1)] * 3
    assert fram_acc_from_vectors(frames, target, source).aggregate == 1.0


def test_fram_acc_requires_source_prompt():
    with pytest.raises(MetricError, match="source_prompt"):
        fram_acc(static_clip(), "target", None, HashEmbeddingBackend())


# -- perceptual metrics -----------------------------------------------------------

class ConstantDistance:
    shareable = True

    def __init__(self, value):
        self.value = value

    def distance(self, a, b):
        return self.value


class TableDistance:
    shareable = True

    def __init__(self, values):
        self.values = list(values)
        self.calls = 0

    def distance(self, a, b):
        value = self.values[self.calls % len(self.values)]
        self.calls += 1
        return value


def test_lpips_p_identical_clips_zero():
    clip = random_clip(seed=2)
    assert lpips_p(clip, clip, PixelDistanceBackend()).aggregate == 0.0


def test_lpips_p_constant_stub():
    clip = random_clip(seed=3, frames=8)
    assert lpips_p(clip, clip, ConstantDistance(0.5)).aggregate == pytest.approx(0.5)


def test_lpips_p_mean_of_values():
    clip = random_clip(seed=4, frames=2)
    assert lpips_p(clip, clip, TableDistance([0.2, 0.4])).aggregate == \
        pytest.approx(0.3)


def test_lpips_p_shape_mismatch():
    with pytest.raises(MetricError, match="mismatch"):
        lpips_p(random_clip(seed=5, height=8), random_clip(seed=5, height=12),
                PixelDistanceBackend())


def test_lpips_t_static_zero():
    assert lpips_t(static_clip(), PixelDistanceBackend()).aggregate == 0.0


def test_lpips_t_mean_of_adjacent_values():
    clip = random_clip(seed=6, frames=3)
    assert lpips_t(clip, TableDistance([0.1, 0.3])).aggregate == pytest.approx(0.2)


# -- composites -------------------------------------------------------------------

def test_s_edit_quotient():
    assert s_edit(0.3, 0.02) == pytest.approx(15.0)
    assert s_edit(0.0, 0.5) == 0.0


def test_s_edit_zero_denominator_rejected():
    with pytest.raises(MetricError):
        s_edit(0.3, 0.0)


def test_q_edit_product():
    assert q_edit(0.9, 0.3) == pytest.approx(0.27)
    assert q_edit(1.0, 0.42) == pytest.approx(0.42)
    assert q_edit(0.0, 0.42) == 0.0


# -- MetricResult contract ---------------------------------------------------------

def test_metric_result_aggregate_must_be_mean():
    with pytest.raises(ValueError):
        MetricResult(metric_name="x", aggregate=0.9, per_frame=(0.0, 1.0))


def test_stub_backends_deterministic():
    backend = HashEmbeddingBackend(dim=16, seed=1)
    frame = random_clip(seed=7).frames[0]
    np.testing.assert_array_equal(backend.embed_image(frame),
                                  backend.embed_image(frame.copy()))
    np.testing.assert_array_equal(backend.embed_text("hello"),
                                  backend.embed_text("hello"))
    assert np.linalg.norm(backend.embed_image(frame)) == pytest.approx(1.0)


# -- engine and feature files ------------------------------------------------------

def test_resolve_metric_names_expands_dependencies():
    assert resolve_metric_names(["s_edit"]) == ["clip_t", "warp_mse", "s_edit"]


def test_resolve_metric_names_rejects_unknown():
    with pytest.raises(UserInputError, match="valid names"):
        resolve_metric_names(["clip_t", "nope"])


def test_engine_computes_composites(tmp_path):
    manifest = load_manifest(write_disk_benchmark(tmp_path, n_triplets=2))
    engine = MetricEngine(
        decoder=__import__("editqa.video", fromlist=["default_decoder"]).default_decoder(),
        embedder=HashEmbeddingBackend(), perceptual=PixelDistanceBackend(),
        flow=ZeroFlowBackend())
    values = engine.compute(manifest[0], ["s_edit", "q_edit"])
    assert set(values) == {"clip_t", "warp_mse", "warp_ssim", "s_edit", "q_edit"}
    assert values["s_edit"] == pytest.approx(values["clip_t"] / values["warp_mse"])
    assert values["q_edit"] == pytest.approx(values["warp_ssim"] * values["clip_t"])


def test_feature_store_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    frames = {"t0": rng.normal(size=(3, 4))}
    prompts = {"t0": rng.normal(size=4)}
    sources = {"t0": rng.normal(size=4)}
    path = tmp_path / "features.jsonl"
    write_feature_file(path, frames, prompts, sources)
    store = FeatureStore(path)
    np.testing.assert_allclose(store.frame_vectors("t0"), frames["t0"])
    np.testing.assert_allclose(store.prompt_vector("t0"), prompts["t0"])
    np.testing.assert_allclose(store.source_prompt_vector("t0"), sources["t0"])
    got = clip_t_from_vectors(store.frame_vectors("t0"), store.prompt_vector("t0"))
    want = clip_t_from_vectors(frames["t0"], prompts["t0"])
    assert got.aggregate == pytest.approx(want.aggregate)


def test_feature_store_rejects_gaps(tmp_path):
    path = tmp_path / "gappy.jsonl"
    path.write_text('{"triplet_id": "t0", "frame_index": 0, "vector": [1.0]}\n'
                    '{"triplet_id": "t0", "frame_index": 2, "vector": [1.0]}\n')
    store = FeatureStore(path)
    with pytest.raises(UserInputError, match="gaps"):
        store.frame_vectors("t0")


def test_feature_store_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"triplet_id": "t0", "frame_index": "x", "vector": [1.0]}\n')
    with pytest.raises(UserInputError, match="line 1"):
        FeatureStore(path)
