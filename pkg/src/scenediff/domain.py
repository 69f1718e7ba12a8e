"""Shared domain types for scene-conditioned motion prediction.

Coordinate convention used everywhere in this package: right-handed,
y-up, meters. Motion arrays are float64 in memory and float32 on disk.
All randomness flows through :class:`RngHandle`; no module touches a
global RNG.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import torch


@dataclass(frozen=True)
class SkeletonSpec:
    """Topology of the skeleton every motion sequence refers to."""

    joint_count: int
    joint_names: tuple[str, ...]
    root_index: int
    bone_edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.joint_count < 2:
            raise ValueError(f"joint_count must be >= 2, got {self.joint_count}")
        if len(self.joint_names) != self.joint_count:
            raise ValueError("joint_names length does not match joint_count")
        if not (0 <= self.root_index < self.joint_count):
            raise ValueError("root_index out of range")
        for a, b in self.bone_edges:
            if not (0 <= a < self.joint_count and 0 <= b < self.joint_count):
                raise ValueError(f"bone edge ({a},{b}) references invalid joint")


@dataclass(frozen=True)
class MotionSequence:
    """Ordered frames of 3D joint positions, shape (F, joint_count, 3)."""

    frames: np.ndarray
    fps: float = 5.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (F, N_b, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise ValueError("a motion sequence needs at least one frame")
        frames = frames.copy()
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    def translated(self, offset: np.ndarray) -> "MotionSequence":
        return MotionSequence(self.frames + np.asarray(offset, dtype=np.float64), fps=self.fps)

    def root_trajectory(self, root_index: int) -> np.ndarray:
        return self.frames[:, root_index, :]


@dataclass(frozen=True)
class ScenePointCloud:
    """Static scene geometry as an (N_s, 3) point set."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must have shape (N_s, 3), got {points.shape}")
        if points.shape[0] < 1:
            raise ValueError("a scene needs at least one point")
        points = points.copy()
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def translated(self, offset: np.ndarray) -> "ScenePointCloud":
        return ScenePointCloud(self.points + np.asarray(offset, dtype=np.float64))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass(frozen=True)
class Sample:
    """One prediction instance: a scene, a motion history, and the future to infer."""

    scene: ScenePointCloud
    history: MotionSequence
    future: MotionSequence
    meta: dict[str, Any] = field(default_factory=dict)

    def translated(self, offset: np.ndarray) -> "Sample":
        return Sample(
            scene=self.scene.translated(offset),
            history=self.history.translated(offset),
            future=self.future.translated(offset),
            meta=dict(self.meta),
        )


@dataclass(frozen=True)
class RngHandle:
    """Deterministic randomness root: (seed, stream) reproduces identical draws.

    Children are derived by extending the stream path, so independent
    consumers never share a stream.
    """

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *stream: int) -> "RngHandle":
        return replace(self, stream=self.stream + stream)

    def numpy(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream)))

    def torch(self) -> torch.Generator:
        # torch.Generator takes a single integer seed; derive one from the stream.
        derived = int(np.random.SeedSequence(self.seed, spawn_key=self.stream).generate_state(1, np.uint64)[0])
        gen = torch.Generator()
        gen.manual_seed(derived & 0x7FFF_FFFF_FFFF_FFFF)
        return gen


@dataclass
class ValidationReport:
    """Accumulated invariant violations; empty means the sample is valid."""

    entries: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.entries

    def add(self, message: str) -> None:
        self.entries.append(message)

    def __str__(self) -> str:
        return "valid sample" if self.ok else "; ".join(self.entries)


def _check_finite(report: ValidationReport, name: str, frames: np.ndarray) -> None:
    bad = ~np.isfinite(frames)
    if bad.any():
        f, j, c = np.argwhere(bad)[0]
        report.add(f"{name}: non-finite coordinate at frame {f}, joint {j}, axis {c}")


def validate_sample(sample: Sample, spec: SkeletonSpec) -> ValidationReport:
    """Check every domain invariant of ``sample``; never raises, only reports."""
    report = ValidationReport()
    for name, seq in (("history", sample.history), ("future", sample.future)):
        if seq.n_joints != spec.joint_count:
            report.add(f"{name}: joint count {seq.n_joints} does not match skeleton {spec.joint_count}")
        _check_finite(report, name, seq.frames)
    if sample.history.fps != sample.future.fps:
        report.add(f"fps mismatch: history {sample.history.fps} vs future {sample.future.fps}")
    if not np.isfinite(sample.scene.points).all():
        idx = np.argwhere(~np.isfinite(sample.scene.points))[0]
        report.add(f"scene: non-finite coordinate at point {idx[0]}, axis {idx[1]}")
    return report


def center_sample(sample: Sample, root_index: int = 0) -> tuple[Sample, np.ndarray]:
    """Translate the sample so the root joint of the last history frame sits at the origin.

    Returns the centered sample and the applied offset; ``uncenter_sample``
    inverts it. The round trip is bit-exact for coordinates carrying float32
    granularity (all on-disk datasets) and within one ulp otherwise.
    """
    offset = sample.history.frames[-1, root_index, :].copy()
    return sample.translated(-offset), offset


def uncenter_sample(sample: Sample, offset: np.ndarray) -> Sample:
    """Inverse of :func:`center_sample`."""
    return sample.translated(np.asarray(offset, dtype=np.float64))
