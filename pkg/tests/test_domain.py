import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenediff.domain import (MotionSequence, RngHandle, Sample, ScenePointCloud,
                              center_sample, uncenter_sample, validate_sample)
from scenediff.synthdata import DEFAULT_SKELETON

N_B = DEFAULT_SKELETON.joint_count


def make_sample(history=None, future=None, scene=None, fps_future=5.0):
    history = history if history is not None else np.zeros((5, N_B, 3))
    future = future if future is not None else np.ones((10, N_B, 3))
    scene = scene if scene is not None else np.zeros((4, 3))
    return Sample(
        scene=ScenePointCloud(scene),
        history=MotionSequence(history, fps=5.0),
        future=MotionSequence(future, fps=fps_future),
    )


class TestValidateSample:
    def test_well_formed_sample_gives_empty_report(self):
        report = validate_sample(make_sample(), DEFAULT_SKELETON)
        assert report.ok
        assert report.entries == []

    def test_nan_coordinate_is_named(self):
        frames = np.zeros((5, N_B, 3))
        frames[2, 7, 1] = np.nan
        report = validate_sample(make_sample(history=frames), DEFAULT_SKELETON)
        assert not report.ok
        assert any("frame 2" in e and "joint 7" in e for e in report.entries)

    def test_fps_mismatch_reported(self):
        report = validate_sample(make_sample(fps_future=10.0), DEFAULT_SKELETON)
        assert any("fps" in e for e in report.entries)

    def test_joint_count_mismatch_reported(self):
        report = validate_sample(make_sample(history=np.zeros((5, 3, 3))), DEFAULT_SKELETON)
        assert any("joint count" in e for e in report.entries)

    def test_pure_same_input_same_report(self):
        s = make_sample(fps_future=10.0)
        assert validate_sample(s, DEFAULT_SKELETON).entries == validate_sample(s, DEFAULT_SKELETON).entries


class TestCenterSample:
    def test_already_centered_is_identity(self):
        history = np.zeros((5, N_B, 3))
        s = make_sample(history=history)
        centered, offset = center_sample(s, root_index=0)
        assert np.array_equal(offset, np.zeros(3))
        assert np.array_equal(centered.history.frames, s.history.frames)
        assert np.array_equal(centered.future.frames, s.future.frames)

    def test_root_maps_to_origin(self):
        history = np.zeros((5, N_B, 3))
        history[-1, 0] = [1.0, 2.0, 3.0]
        centered, offset = center_sample(make_sample(history=history), root_index=0)
        assert np.array_equal(offset, [1.0, 2.0, 3.0])
        assert np.array_equal(centered.history.frames[-1, 0], np.zeros(3))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_round_trip_bit_equal_on_float32_granular_data(self, seed):
        # float32-granular coordinates (everything loaded from disk) round-trip exactly
        gen = np.random.default_rng(seed)
        history = gen.uniform(-5, 5, (3, N_B, 3)).astype(np.float32).astype(np.float64)
        future = gen.uniform(-5, 5, (2, N_B, 3)).astype(np.float32).astype(np.float64)
        scene = gen.uniform(-5, 5, (6, 3)).astype(np.float32).astype(np.float64)
        s = make_sample(history=history, future=future, scene=scene)
        centered, offset = center_sample(s, root_index=0)
        restored = uncenter_sample(centered, offset)
        assert np.array_equal(restored.history.frames, s.history.frames)
        assert np.array_equal(restored.future.frames, s.future.frames)
        assert np.array_equal(restored.scene.points, s.scene.points)

    def test_round_trip_machine_precision_on_float64_data(self):
        gen = np.random.default_rng(0)
        history = gen.uniform(-5, 5, (3, N_B, 3))
        s = make_sample(history=history)
        centered, offset = center_sample(s, root_index=0)
        restored = uncenter_sample(centered, offset)
        assert np.abs(restored.history.frames - s.history.frames).max() < 1e-12


class TestRngHandle:
    def test_same_seed_stream_reproduces(self):
        a = RngHandle(42, (1, 2)).numpy().standard_normal(8)
        b = RngHandle(42, (1, 2)).numpy().standard_normal(8)
        assert np.array_equal(a, b)

    def test_child_streams_differ(self):
        base = RngHandle(42)
        a = base.child(0).numpy().standard_normal(8)
        b = base.child(1).numpy().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_torch_generator_reproduces(self):
        import torch

        a = torch.randn(4, generator=RngHandle(7).torch())
        b = torch.randn(4, generator=RngHandle(7).torch())
        assert torch.equal(a, b)


class TestImmutability:
    def test_frames_are_read_only(self):
        seq = MotionSequence(np.zeros((2, N_B, 3)))
        with pytest.raises(ValueError):
            seq.frames[0, 0, 0] = 1.0

    def test_scene_points_are_read_only(self):
        cloud = ScenePointCloud(np.zeros((4, 3)))
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 1.0


class TestSceneValidation:
    def test_scene_nan_is_reported_with_point_index(self):
        scene = np.zeros((5, 3))
        scene[3, 1] = np.inf
        report = validate_sample(make_sample(scene=scene), DEFAULT_SKELETON)
        assert any("point 3" in e for e in report.entries)
