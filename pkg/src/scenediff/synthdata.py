"""Procedural desk-scale scene and motion generation, plus dataset I/O.

Scenes are a floor plane with axis-aligned box obstacles, sampled as point
clouds. Motions are behavior-driven root trajectories with a rigid limb
template and phase-driven gait oscillation; realism is explicitly not the
goal, only coherent joint streams whose trajectories correlate with the
scene. Datasets serialize to JSON Lines with float32 precision and a
sidecar header carrying the skeleton.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import MotionSequence, RngHandle, Sample, ScenePointCloud, SkeletonSpec
from .errors import IoFailure, PathFailure, PlacementFailure, SchemaViolation

WALK_HEIGHT = 0.90
SIT_HEIGHT = 0.55
GAIT_HZ = 1.4  # stride cycles per second while moving
# Trajectories are checked at this clearance so that dense sampling of the
# path (spacing 0.02 m) still guarantees the contractual 0.1 m minimum.
SAFE_CLEARANCE = 0.12
_PATH_CHECK_SPACING = 0.02

_TEMPLATE_JOINTS = [
    # name, (forward, up, left) offset from the pelvis in meters
    ("pelvis", (0.0, 0.0, 0.0)),
    ("spine", (0.0, 0.15, 0.0)),
    ("chest", (0.0, 0.30, 0.0)),
    ("neck", (0.0, 0.45, 0.0)),
    ("head", (0.0, 0.55, 0.0)),
    ("head_top", (0.0, 0.70, 0.0)),
    ("l_shoulder", (0.0, 0.42, 0.20)),
    ("l_elbow", (0.0, 0.16, 0.24)),
    ("l_wrist", (0.0, -0.08, 0.26)),
    ("r_shoulder", (0.0, 0.42, -0.20)),
    ("r_elbow", (0.0, 0.16, -0.24)),
    ("r_wrist", (0.0, -0.08, -0.26)),
    ("l_hip", (0.0, -0.08, 0.10)),
    ("l_knee", (0.0, -0.50, 0.11)),
    ("l_ankle", (0.0, -0.86, 0.12)),
    ("r_hip", (0.0, -0.08, -0.10)),
    ("r_knee", (0.0, -0.50, -0.11)),
    ("r_ankle", (0.0, -0.86, -0.12)),
]

_TEMPLATE_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5),
    (2, 6), (6, 7), (7, 8),
    (2, 9), (9, 10), (10, 11),
    (0, 12), (12, 13), (13, 14),
    (0, 15), (15, 16), (16, 17),
)

DEFAULT_SKELETON = SkeletonSpec(
    joint_count=len(_TEMPLATE_JOINTS),
    joint_names=tuple(name for name, _ in _TEMPLATE_JOINTS),
    root_index=0,
    bone_edges=_TEMPLATE_EDGES,
)

_TEMPLATE_OFFSETS = np.array([off for _, off in _TEMPLATE_JOINTS], dtype=np.float64)


class BehaviorKind(str, enum.Enum):
    WALK_STRAIGHT = "walk_straight"
    WALK_TURN = "walk_turn"
    CIRCLE_OBSTACLE = "circle_obstacle"
    APPROACH_AND_SIT = "approach_and_sit"
    IDLE = "idle"


@dataclass(frozen=True)
class BehaviorSpec:
    kind: BehaviorKind
    speed_range: tuple[float, float] = (0.6, 1.2)

    def __post_init__(self):
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise ValueError(f"speed_range must be nonnegative and ordered, got {self.speed_range}")


@dataclass(frozen=True)
class RoomSpec:
    extents: tuple[float, float, float] = (4.0, 2.5, 4.0)
    obstacle_count: int = 2
    obstacle_size_range: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (0.4, 0.4, 0.4),
        (0.9, 1.0, 0.9),
    )
    points_per_m2: float = 60.0

    def __post_init__(self):
        if any(e <= 0 for e in self.extents):
            raise ValueError("extents must be positive")
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be >= 0")
        if self.points_per_m2 <= 0:
            raise ValueError("points_per_m2 must be > 0")


@dataclass(frozen=True)
class ObstacleBox:
    """Axis-aligned obstacle resting on the floor; origin is the minimum corner."""

    origin: np.ndarray
    size: np.ndarray

    def footprint(self) -> tuple[float, float, float, float]:
        """(x_min, z_min, x_max, z_max) of the ground-plane rectangle."""
        return (
            float(self.origin[0]),
            float(self.origin[2]),
            float(self.origin[0] + self.size[0]),
            float(self.origin[2] + self.size[2]),
        )


def footprint_distance(xz: np.ndarray, footprint: tuple[float, float, float, float]) -> float:
    """Horizontal distance from a point to an axis-aligned footprint rectangle."""
    x, z = float(xz[0]), float(xz[1])
    x_min, z_min, x_max, z_max = footprint
    dx = max(x_min - x, 0.0, x - x_max)
    dz = max(z_min - z, 0.0, z - z_max)
    return math.hypot(dx, dz)


@dataclass(frozen=True)
class SceneLayout:
    """A generated scene together with the obstacle boxes that produced it."""

    cloud: ScenePointCloud
    obstacles: tuple[ObstacleBox, ...]
    extents: tuple[float, float, float]

    def footprints(self) -> list[tuple[float, float, float, float]]:
        return [box.footprint() for box in self.obstacles]


def _sample_rect(rng: np.random.Generator, n: int, x0, x1, z0, z1, y) -> np.ndarray:
    pts = np.empty((n, 3), dtype=np.float64)
    pts[:, 0] = rng.uniform(x0, x1, size=n)
    pts[:, 1] = y
    pts[:, 2] = rng.uniform(z0, z1, size=n)
    return pts


def _place_obstacles(spec: RoomSpec, rng: np.random.Generator) -> list[ObstacleBox]:
    ex, ey, ez = spec.extents
    lo = np.asarray(spec.obstacle_size_range[0], dtype=np.float64)
    hi = np.asarray(spec.obstacle_size_range[1], dtype=np.float64)
    wall_margin = 0.1
    gap = 0.4  # pairwise gap keeps footprints separable for clearance checks
    boxes: list[ObstacleBox] = []
    tries = 0
    while len(boxes) < spec.obstacle_count:
        if tries >= 1000:
            raise PlacementFailure(
                f"could not place {spec.obstacle_count} obstacles in a {ex}x{ez} room after 1000 tries"
            )
        tries += 1
        size = rng.uniform(lo, hi)
        size[1] = min(size[1], ey)
        x_lo, x_hi = -ex / 2 + wall_margin, ex / 2 - wall_margin - size[0]
        z_lo, z_hi = -ez / 2 + wall_margin, ez / 2 - wall_margin - size[2]
        if x_hi <= x_lo or z_hi <= z_lo:
            continue
        origin = np.array([rng.uniform(x_lo, x_hi), 0.0, rng.uniform(z_lo, z_hi)])
        candidate = ObstacleBox(origin=origin, size=size)
        fp = candidate.footprint()
        center = np.array([(fp[0] + fp[2]) / 2, (fp[1] + fp[3]) / 2])
        clear = all(
            footprint_distance(center, b.footprint()) >= gap + math.hypot(size[0], size[2]) / 2
            for b in boxes
        )
        if clear:
            boxes.append(candidate)
    return boxes


def generate_scene_layout(spec: RoomSpec, rng: RngHandle) -> SceneLayout:
    """Generate a scene and keep the obstacle boxes for downstream clearance logic."""
    gen = rng.numpy()
    ex, ey, ez = spec.extents
    boxes = _place_obstacles(spec, gen)

    clouds = []
    n_floor = round(ex * ez * spec.points_per_m2)
    clouds.append(_sample_rect(gen, n_floor, -ex / 2, ex / 2, -ez / 2, ez / 2, 0.0))
    for box in boxes:
        ox, _, oz = box.origin
        sx, sy, sz = box.size
        n_top = round(sx * sz * spec.points_per_m2)
        clouds.append(_sample_rect(gen, n_top, ox, ox + sx, oz, oz + sz, sy))
        for fixed_z in (oz, oz + sz):
            n_face = round(sx * sy * spec.points_per_m2)
            pts = np.empty((n_face, 3))
            pts[:, 0] = gen.uniform(ox, ox + sx, size=n_face)
            pts[:, 1] = gen.uniform(0.0, sy, size=n_face)
            pts[:, 2] = fixed_z
            clouds.append(pts)
        for fixed_x in (ox, ox + sx):
            n_face = round(sz * sy * spec.points_per_m2)
            pts = np.empty((n_face, 3))
            pts[:, 0] = fixed_x
            pts[:, 1] = gen.uniform(0.0, sy, size=n_face)
            pts[:, 2] = gen.uniform(oz, oz + sz, size=n_face)
            clouds.append(pts)
    points = np.concatenate([c for c in clouds if len(c)], axis=0)
    return SceneLayout(cloud=ScenePointCloud(points), obstacles=tuple(boxes), extents=spec.extents)


def generate_scene(spec: RoomSpec, rng: RngHandle) -> ScenePointCloud:
    """Point cloud of floor plus obstacle surfaces; same rng gives the identical cloud."""
    return generate_scene_layout(spec, rng).cloud


def infer_footprints(cloud: ScenePointCloud, linking_radius: float = 0.25) -> list[tuple[float, float, float, float]]:
    """Conservative obstacle footprints from elevated points, for callers without layout access.

    Clusters points above the floor by horizontal proximity and inflates each
    cluster's bounding rectangle by the sampling slack.
    """
    elevated = cloud.points[cloud.points[:, 1] > 1e-6]
    if len(elevated) == 0:
        return []
    xz = elevated[:, [0, 2]]
    cell = linking_radius
    keys = np.floor(xz / cell).astype(np.int64)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    parent = np.arange(len(xz))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    buckets: dict[tuple[int, int], list[int]] = {}
    for i in order:
        buckets.setdefault((keys[i, 0], keys[i, 1]), []).append(i)
    for (kx, kz), members in buckets.items():
        root = find(members[0])
        for m in members[1:]:
            parent[find(m)] = root
        for nb in ((kx + 1, kz), (kx, kz + 1), (kx + 1, kz + 1), (kx + 1, kz - 1)):
            if nb in buckets:
                parent[find(buckets[nb][0])] = root
    labels = np.array([find(i) for i in range(len(xz))])
    rects = []
    for label in np.unique(labels):
        pts = xz[labels == label]
        pad = 0.05
        rects.append((pts[:, 0].min() - pad, pts[:, 1].min() - pad, pts[:, 0].max() + pad, pts[:, 1].max() + pad))
    return rects


def _path_is_clear(path_xz: np.ndarray, footprints: Sequence[tuple], bounds, margin: float = 0.2) -> bool:
    """Checks a densely resampled polyline for wall margin and obstacle clearance."""
    (x_lo, x_hi), (z_lo, z_hi) = bounds
    dense = [path_xz[:1]]
    for a, b in zip(path_xz[:-1], path_xz[1:]):
        seg_len = float(np.hypot(*(b - a)))
        n = max(int(math.ceil(seg_len / _PATH_CHECK_SPACING)), 1)
        ts = np.linspace(0.0, 1.0, n + 1)[1:, None]
        dense.append(a[None, :] * (1 - ts) + b[None, :] * ts)
    pts = np.concatenate(dense, axis=0)
    if (pts[:, 0] < x_lo + margin).any() or (pts[:, 0] > x_hi - margin).any():
        return False
    if (pts[:, 1] < z_lo + margin).any() or (pts[:, 1] > z_hi - margin).any():
        return False
    for fp in footprints:
        dx = np.maximum.reduce([fp[0] - pts[:, 0], np.zeros(len(pts)), pts[:, 0] - fp[2]])
        dz = np.maximum.reduce([fp[1] - pts[:, 1], np.zeros(len(pts)), pts[:, 1] - fp[3]])
        if (np.hypot(dx, dz) < SAFE_CLEARANCE).any():
            return False
    return True


def _free_spot(gen: np.random.Generator, footprints, bounds, margin: float = 0.3) -> np.ndarray | None:
    (x_lo, x_hi), (z_lo, z_hi) = bounds
    for _ in range(200):
        p = np.array([gen.uniform(x_lo + margin, x_hi - margin), gen.uniform(z_lo + margin, z_hi - margin)])
        if all(footprint_distance(p, fp) >= SAFE_CLEARANCE + 0.05 for fp in footprints):
            return p
    return None


def _root_path(kind: BehaviorKind, speed: float, n_frames: int, fps: float,
               footprints, bounds, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Plans the (x, z) root path and per-frame headings for one behavior."""
    step = speed / fps
    for _ in range(300):
        if kind is BehaviorKind.IDLE:
            spot = _free_spot(gen, footprints, bounds)
            if spot is None:
                continue
            heading = gen.uniform(0, 2 * math.pi)
            path = np.tile(spot, (n_frames, 1))
            headings = np.full(n_frames, heading)
            return path, headings

        if kind in (BehaviorKind.WALK_STRAIGHT, BehaviorKind.WALK_TURN):
            start = _free_spot(gen, footprints, bounds)
            if start is None:
                continue
            theta = gen.uniform(0, 2 * math.pi)
            if kind is BehaviorKind.WALK_STRAIGHT:
                turns = np.zeros(n_frames)
            else:
                turn_at = gen.integers(n_frames // 3, 2 * n_frames // 3)
                turn_by = gen.choice([-1.0, 1.0]) * gen.uniform(math.pi / 6, math.pi / 2)
                # heading ramps over three frames; step length stays speed/fps
                ramp = np.clip((np.arange(n_frames) - turn_at + 1) / 3.0, 0.0, 1.0)
                turns = turn_by * ramp
            headings = theta + turns
            path = np.empty((n_frames, 2))
            path[0] = start
            for t in range(1, n_frames):
                d = np.array([math.cos(headings[t]), math.sin(headings[t])])
                path[t] = path[t - 1] + step * d
            if _path_is_clear(path, footprints, bounds):
                return path, headings
            continue

        if kind is BehaviorKind.CIRCLE_OBSTACLE:
            if not footprints:
                continue
            fp = footprints[gen.integers(len(footprints))]
            center = np.array([(fp[0] + fp[2]) / 2, (fp[1] + fp[3]) / 2])
            half_diag = math.hypot(fp[2] - fp[0], fp[3] - fp[1]) / 2
            radius = half_diag + SAFE_CLEARANCE + gen.uniform(0.1, 0.4)
            phi0 = gen.uniform(0, 2 * math.pi)
            direction = gen.choice([-1.0, 1.0])
            omega = direction * speed / radius / fps
            phis = phi0 + omega * np.arange(n_frames)
            path = center[None, :] + radius * np.stack([np.cos(phis), np.sin(phis)], axis=1)
            others = [f for f in footprints if f is not fp]
            if _path_is_clear(path, others, bounds):
                return path, phis + direction * math.pi / 2
            continue

        if kind is BehaviorKind.APPROACH_AND_SIT:
            if not footprints:
                continue
            fp = footprints[gen.integers(len(footprints))]
            center = np.array([(fp[0] + fp[2]) / 2, (fp[1] + fp[3]) / 2])
            stop_dist = gen.uniform(0.15, 0.35)
            n_walk = max(n_frames * 2 // 3, 1)
            approach = gen.uniform(0, 2 * math.pi)
            direction = np.array([math.cos(approach), math.sin(approach)])
            half_diag = math.hypot(fp[2] - fp[0], fp[3] - fp[1]) / 2
            stop = center + direction * (half_diag + stop_dist)
            start = stop + direction * step * n_walk
            path = np.empty((n_frames, 2))
            for t in range(n_frames):
                path[t] = start - direction * step * min(t, n_walk)
            if footprint_distance(path[-1], fp) < SAFE_CLEARANCE:
                continue
            if _path_is_clear(path, footprints, bounds):
                headings = np.full(n_frames, math.atan2(-direction[1], -direction[0]))
                return path, headings
            continue

        raise ValueError(f"unknown behavior kind {kind}")
    raise PathFailure(f"no collision-free path found for behavior {kind.value}")


def _gait_offsets(phase: float, speed: float) -> np.ndarray:
    """Per-joint template perturbation: leg/arm swing along the facing direction."""
    offsets = np.zeros_like(_TEMPLATE_OFFSETS)
    amp = 0.10 if speed > 0 else 0.0
    swing = amp * math.sin(phase)
    # legs swing in anti-phase; arms counter the legs
    for idx, scale in ((13, 0.6), (14, 1.0)):
        offsets[idx, 0] = swing * scale
    for idx, scale in ((16, 0.6), (17, 1.0)):
        offsets[idx, 0] = -swing * scale
    for idx, scale in ((7, 0.4), (8, 0.7)):
        offsets[idx, 0] = -swing * scale
    for idx, scale in ((10, 0.4), (11, 0.7)):
        offsets[idx, 0] = swing * scale
    return offsets


def _pose_frames(path_xz: np.ndarray, headings: np.ndarray, heights: np.ndarray,
                 speed: float, fps: float, phase0: float) -> np.ndarray:
    n_frames = len(path_xz)
    frames = np.empty((n_frames, len(_TEMPLATE_OFFSETS), 3), dtype=np.float64)
    # fixed gait frequency while moving; the phase freezes when the root stops
    phase = phase0
    prev = path_xz[0]
    for t in range(n_frames):
        dist = float(np.hypot(*(path_xz[t] - prev)))
        if dist > 1e-9:
            phase += 2 * math.pi * GAIT_HZ / fps
        prev = path_xz[t]
        c, s = math.cos(headings[t]), math.sin(headings[t])
        local = _TEMPLATE_OFFSETS + (_gait_offsets(phase, speed) if dist > 0 else 0.0)
        # rotate the (forward, up, left) template into world: forward -> (c, 0, s)
        world_x = c * local[:, 0] - s * local[:, 2]
        world_z = s * local[:, 0] + c * local[:, 2]
        frames[t, :, 0] = path_xz[t, 0] + world_x
        frames[t, :, 1] = heights[t] + local[:, 1]
        frames[t, :, 2] = path_xz[t, 1] + world_z
    return frames


def generate_motion(scene: ScenePointCloud, spec: BehaviorSpec, skeleton: SkeletonSpec,
                    T: int, dt: int, rng: RngHandle, fps: float = 5.0,
                    footprints: Sequence[tuple] | None = None) -> Sample:
    """Generate one sample whose trajectory follows ``spec`` inside ``scene``.

    ``footprints`` should be the true obstacle footprints when the caller has
    them (the dataset generator does); otherwise they are conservatively
    inferred from elevated scene points.
    """
    if T < 1 or dt < 1:
        raise ValueError("T and dt must be >= 1")
    if skeleton.joint_count != DEFAULT_SKELETON.joint_count:
        raise ValueError("the procedural generator only supports the packaged default skeleton")
    gen = rng.numpy()
    if footprints is None:
        footprints = infer_footprints(scene)
    lo, hi = scene.bounds()
    bounds = ((float(lo[0]), float(hi[0])), (float(lo[2]), float(hi[2])))
    speed = float(gen.uniform(*spec.speed_range)) if spec.kind is not BehaviorKind.IDLE else 0.0

    n_frames = T + dt
    path, headings = _root_path(spec.kind, speed, n_frames, fps, list(footprints), bounds, gen)

    heights = np.full(n_frames, WALK_HEIGHT)
    if spec.kind is BehaviorKind.APPROACH_AND_SIT:
        n_walk = max(n_frames * 2 // 3, 1)
        sink = np.linspace(WALK_HEIGHT, SIT_HEIGHT, max(n_frames - n_walk, 1))
        heights[n_walk:] = sink[: n_frames - n_walk]

    frames = _pose_frames(path, headings, heights, speed, fps, phase0=0.0)
    history = MotionSequence(frames[:T], fps=fps)
    future = MotionSequence(frames[T:], fps=fps)
    return Sample(scene=scene, history=history, future=future,
                  meta={"behavior": spec.kind.value, "seed": rng.seed})


DEFAULT_BEHAVIORS = (
    BehaviorSpec(BehaviorKind.WALK_STRAIGHT),
    BehaviorSpec(BehaviorKind.WALK_TURN),
    BehaviorSpec(BehaviorKind.CIRCLE_OBSTACLE, speed_range=(0.5, 0.9)),
    BehaviorSpec(BehaviorKind.APPROACH_AND_SIT, speed_range=(0.5, 1.0)),
    BehaviorSpec(BehaviorKind.IDLE, speed_range=(0.0, 0.0)),
)


def generate_dataset(n_samples: int, rng: RngHandle, room: RoomSpec | None = None,
                     behaviors: Sequence[BehaviorSpec] = DEFAULT_BEHAVIORS,
                     skeleton: SkeletonSpec = DEFAULT_SKELETON,
                     T: int = 5, dt: int = 10, fps: float = 5.0) -> list[Sample]:
    """Deterministic sample list; each index draws from its own rng stream."""
    room = room or RoomSpec()
    samples = []
    for i in range(n_samples):
        behavior = behaviors[i % len(behaviors)]
        for attempt in range(20):
            try:
                layout = generate_scene_layout(room, rng.child(i, attempt, 0))
                sample = generate_motion(layout.cloud, behavior, skeleton, T, dt,
                                         rng.child(i, attempt, 1), fps=fps,
                                         footprints=layout.footprints())
                break
            except (PlacementFailure, PathFailure):
                continue
        else:
            raise PathFailure(f"sample {i}: exhausted retries for behavior {behavior.kind.value}")
        samples.append(sample)
    return samples


def _f32(arr: np.ndarray) -> list:
    """Round to float32 then emit as native lists so JSON round-trips exactly."""
    return np.asarray(arr, dtype=np.float32).astype(np.float64).tolist()


def _header_path(path: Path) -> Path:
    return path.with_name(path.name + ".header.json")


def write_dataset(samples: Sequence[Sample], path: str | Path,
                  skeleton: SkeletonSpec = DEFAULT_SKELETON) -> int:
    """Write samples as JSON Lines plus a sidecar skeleton header; returns the count."""
    path = Path(path)
    try:
        with path.open("w") as fh:
            for sample in samples:
                record = {
                    "scene": _f32(sample.scene.points),
                    "history": _f32(sample.history.frames),
                    "future": _f32(sample.future.frames),
                    "fps": sample.history.fps,
                    "meta": sample.meta,
                }
                fh.write(json.dumps(record) + "\n")
        header = {
            "joint_count": skeleton.joint_count,
            "joint_names": list(skeleton.joint_names),
            "root_index": skeleton.root_index,
            "bone_edges": [list(e) for e in skeleton.bone_edges],
        }
        _header_path(path).write_text(json.dumps(header, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write dataset {path}: {exc}") from exc
    return len(samples)


def read_skeleton(path: str | Path) -> SkeletonSpec:
    path = Path(path)
    try:
        raw = json.loads(_header_path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read dataset header for {path}: {exc}") from exc
    return SkeletonSpec(
        joint_count=raw["joint_count"],
        joint_names=tuple(raw["joint_names"]),
        root_index=raw["root_index"],
        bone_edges=tuple(tuple(e) for e in raw["bone_edges"]),
    )


def read_dataset(path: str | Path) -> list[Sample]:
    """Parse a JSON Lines dataset; schema errors name the offending line."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read dataset {path}: {exc}") from exc
    samples = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON ({exc.msg})", line=lineno) from exc
        try:
            fps = float(raw["fps"])
            scene = ScenePointCloud(np.asarray(raw["scene"], dtype=np.float64))
            history = MotionSequence(np.asarray(raw["history"], dtype=np.float64), fps=fps)
            future = MotionSequence(np.asarray(raw["future"], dtype=np.float64), fps=fps)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(str(exc), line=lineno) from exc
        samples.append(Sample(scene=scene, history=history, future=future, meta=raw.get("meta", {})))
    return samples
