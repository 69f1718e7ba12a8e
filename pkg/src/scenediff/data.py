"""Dataset preparation for training: canonicalization, tensor conversion,
and stateless deterministic batching.

Every sample is canonicalized before training: translated so the root joint
of the last history frame sits at the origin, then yawed so the body faces
+x there. This removes global position and facing direction — two factors
the model would otherwise spend capacity memorizing — and is inverted after
decoding at prediction time. Batch composition at step t is derived from
(seed, stage, t) alone, which makes mid-run resumption exact without
serializing RNG state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .domain import MotionSequence, RngHandle, Sample, ScenePointCloud, SkeletonSpec, center_sample
from .region import scene_volume_bound, VOLUME_BOUND_FACTOR
from .synthdata import read_dataset, read_skeleton


def facing_angle(frame: np.ndarray, skeleton: SkeletonSpec) -> float:
    """Yaw of the body in a single frame, from the hip axis; 0 when hips are unnamed."""
    names = skeleton.joint_names
    if "l_hip" not in names or "r_hip" not in names:
        return 0.0
    lat = frame[names.index("l_hip")] - frame[names.index("r_hip")]
    if abs(lat[0]) < 1e-12 and abs(lat[2]) < 1e-12:
        return 0.0
    return math.atan2(-lat[0], lat[2])


def rotate_y(arr: np.ndarray, angle: float) -> np.ndarray:
    """Rotate (..., 3) coordinates about the y axis through the origin."""
    c, s = math.cos(angle), math.sin(angle)
    out = np.array(arr, dtype=np.float64)
    x, z = arr[..., 0], arr[..., 2]
    out[..., 0] = c * x - s * z
    out[..., 2] = s * x + c * z
    return out


def canonicalize_sample(sample: Sample, skeleton: SkeletonSpec) -> tuple[Sample, np.ndarray, float]:
    """Center at the last-history root and rotate the body to face +x.

    Returns (canonical sample, offset, yaw); invert on decoded frames with
    ``decanonicalize_frames``.
    """
    centered, offset = center_sample(sample, skeleton.root_index)
    angle = facing_angle(centered.history.frames[-1], skeleton)
    canonical = Sample(
        scene=ScenePointCloud(rotate_y(centered.scene.points, -angle)),
        history=MotionSequence(rotate_y(centered.history.frames, -angle), fps=centered.history.fps),
        future=MotionSequence(rotate_y(centered.future.frames, -angle), fps=centered.future.fps),
        meta=dict(centered.meta),
    )
    return canonical, offset, angle


def decanonicalize_frames(frames: np.ndarray, offset: np.ndarray, angle: float) -> np.ndarray:
    """Map decoded canonical-frame joints back into the original world frame."""
    return rotate_y(frames, angle) + np.asarray(offset, dtype=np.float64)


@dataclass
class TrainingSet:
    skeleton: SkeletonSpec
    samples: list[Sample]              # centered
    history: torch.Tensor              # (N, T, N_b, 3)
    future: torch.Tensor               # (N, dt, N_b, 3)
    scenes: list[torch.Tensor]         # per-sample (N_s, 3), variable N_s
    scene_volumes: torch.Tensor        # (N,) padded bbox volumes (pre-factor)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def mean_bone_length(self) -> float:
        """Mean bone length (meters) over all samples, frames, and skeleton edges."""
        edges = np.array(self.skeleton.bone_edges)
        lengths = []
        for sample in self.samples:
            frames = np.concatenate([sample.history.frames, sample.future.frames], axis=0)
            bones = frames[:, edges[:, 0], :] - frames[:, edges[:, 1], :]
            lengths.append(np.linalg.norm(bones, axis=-1).mean())
        return float(np.mean(lengths))


def load_training_set(path: str | Path, dtype=torch.float32) -> TrainingSet:
    raw = read_dataset(path)
    skeleton = read_skeleton(path)
    canonical = [canonicalize_sample(s, skeleton)[0] for s in raw]
    history = torch.stack([torch.tensor(s.history.frames, dtype=dtype) for s in canonical])
    future = torch.stack([torch.tensor(s.future.frames, dtype=dtype) for s in canonical])
    scenes = [torch.tensor(s.scene.points, dtype=dtype) for s in canonical]
    volumes = torch.tensor(
        [scene_volume_bound(s.scene.points) / VOLUME_BOUND_FACTOR for s in canonical], dtype=dtype
    )
    return TrainingSet(skeleton=skeleton, samples=canonical, history=history, future=future,
                       scenes=scenes, scene_volumes=volumes)


def batch_indices(rng: RngHandle, n: int, batch_size: int) -> np.ndarray:
    """Deterministic batch for one training step, independent of prior steps."""
    gen = rng.numpy()
    return gen.choice(n, size=min(batch_size, n), replace=n < batch_size)
