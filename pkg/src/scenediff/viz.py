"""Static visualization exports: per-frame pose renders, a top-down
trajectory overlay, and a JSON dump of the plotted coordinates for
downstream tools."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .domain import MotionSequence, Sample, SkeletonSpec
from .errors import IoFailure
from .synthdata import DEFAULT_SKELETON

SCENE_COLOR = "0.7"
HISTORY_COLOR = "tab:blue"
PREDICTION_COLOR = "tab:red"
_MAX_SCENE_POINTS = 2000


def _f32_list(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=np.float32).astype(np.float64).tolist()


def _draw_skeleton(ax, pose: np.ndarray, skeleton: SkeletonSpec, color: str, alpha: float = 1.0):
    ax.scatter(pose[:, 0], pose[:, 2], pose[:, 1], s=6, c=color, alpha=alpha, depthshade=False)
    for a, b in skeleton.bone_edges:
        seg = pose[[a, b]]
        ax.plot(seg[:, 0], seg[:, 2], seg[:, 1], c=color, alpha=alpha, linewidth=1.0)


def _scene_subset(points: np.ndarray) -> np.ndarray:
    if len(points) <= _MAX_SCENE_POINTS:
        return points
    stride = int(np.ceil(len(points) / _MAX_SCENE_POINTS))
    return points[::stride]


def export_viz(sample: Sample, predictions: Sequence[MotionSequence], out_dir: str | Path,
               skeleton: SkeletonSpec = DEFAULT_SKELETON) -> list[Path]:
    """Write per-frame images, one trajectory overlay, and the coordinate JSON.

    With an empty prediction list only the history trajectory and the JSON
    are produced.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    written: list[Path] = []
    scene = _scene_subset(sample.scene.points)
    root = skeleton.root_index

    if predictions:
        lead = predictions[0]
        for i in range(lead.n_frames):
            fig = plt.figure(figsize=(5, 5))
            ax = fig.add_subplot(projection="3d")
            ax.scatter(scene[:, 0], scene[:, 2], scene[:, 1], s=1, c=SCENE_COLOR, depthshade=False)
            _draw_skeleton(ax, sample.history.frames[-1], skeleton, HISTORY_COLOR, alpha=0.5)
            _draw_skeleton(ax, lead.frames[i], skeleton, PREDICTION_COLOR)
            ax.set_title(f"frame {i}")
            ax.set_box_aspect((1, 1, 1))
            path = out_dir / f"frame_{i:03d}.png"
            fig.savefig(path, dpi=80)
            plt.close(fig)
            written.append(path)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(scene[:, 0], scene[:, 2], s=1, c=SCENE_COLOR)
    hist_root = sample.history.root_trajectory(root)
    ax.plot(hist_root[:, 0], hist_root[:, 2], "-o", c=HISTORY_COLOR, markersize=3, label="history")
    for n, pred in enumerate(predictions):
        traj = pred.root_trajectory(root)
        ax.plot(traj[:, 0], traj[:, 2], "-o", c=PREDICTION_COLOR, markersize=3, alpha=0.6,
                label="prediction" if n == 0 else None)
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    traj_path = out_dir / "trajectory.png"
    fig.savefig(traj_path, dpi=80)
    plt.close(fig)
    written.append(traj_path)

    coords = {
        "fps": sample.history.fps,
        "history": _f32_list(sample.history.frames),
        "predictions": [_f32_list(p.frames) for p in predictions],
    }
    json_path = out_dir / "coords.json"
    try:
        json_path.write_text(json.dumps(coords) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {json_path}: {exc}") from exc
    written.append(json_path)
    return written
